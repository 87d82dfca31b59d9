#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpcorp/costmodel.hpp"
#include "lpcorp/reasoner.hpp"

namespace lpcorp::analytics {

// Correctness-level rates of the stage-2 classifier: pi is the stage-1
// accuracy P(S=1), tpr = P(Shat=1|S=1), tnr = P(Shat=0|S=0).
struct OperatingPoint {
  double pi = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
};

// Event-level rates, used for the precision-collapse curve; unrelated to
// the correctness-level rates above.
struct PrevalencePoint {
  double p = 0.0;
  double tpr_event = 0.0;
  double fpr_event = 0.0;
};

// pi*tpr + (1-pi)*tnr, evaluated as tnr + pi*(tpr - tnr) so the worked
// values come out exact.
double acc_corrected(const OperatingPoint& op);

// acc_corrected - pi, identically (1-pi)*tnr - pi*(1-tpr).
double net_improvement(const OperatingPoint& op);

// Strict: correction helps iff (1-pi)*tnr > pi*(1-tpr).
bool improves(const OperatingPoint& op);

// p*TPR / (p*TPR + (1-p)*FPR); unset when the denominator is zero.
std::optional<double> precision_at_prevalence(const PrevalencePoint& pt);

// Accuracy of always predicting "no event": 1 - p.
double trivial_accuracy(double p);

struct HeatmapCell {
  double tpr = 0.0;
  double tnr = 0.0;
  double delta = 0.0;
};

// Net improvement on the inclusive uniform grid [0,1]x[0,1] with the given
// point counts per axis (>= 2 each), tpr varying slowest.
std::vector<HeatmapCell> heatmap_grid(double pi, int tpr_steps,
                                      int tnr_steps);

// Header tpr,tnr,delta; full-precision numbers.
std::string heatmap_csv(const std::vector<HeatmapCell>& cells);

// Convenience raster of the grid (blue negative, white zero, red positive).
// The CSV is the normative output.
std::string heatmap_svg(const std::vector<HeatmapCell>& cells, int tpr_steps,
                        int tnr_steps);

// Simulates S ~ Bernoulli(pi) and the stage-2 verdict per tpr/tnr, flips
// conclusions whose verdict is "incorrect", and returns the fraction that
// ends up right. Deterministic per seed.
double monte_carlo_acc(const OperatingPoint& op, std::uint64_t n,
                       std::uint64_t seed);

// One evaluation sample ready for threshold sweeping: the stage-1
// conclusion, its correctness probability, and ground truth.
struct ScoredDecision {
  std::string sample_id;
  reasoner::Conclusion stage1 = reasoner::Conclusion::kNotSure;
  double p_correct = 0.0;
  int truth = 0;
};

struct SweepRow {
  double threshold = 0.0;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::uint64_t flagged = 0;
  std::uint64_t flipped = 0;
  double cost = 0.0;
  double reduction_pct = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double p_opt_acc = 0.0;   // highest accuracy, ties to the smaller P
  double p_opt_cost = 0.0;  // lowest cost, ties to the smaller P
};

// 0.50 to 0.95 in steps of 0.05.
std::vector<double> default_grid();

// Re-applies the correction at every grid threshold and scores the final
// conclusions. Cost uses the final-corrected recall/precision at each P;
// when the eval set has no true events the row reports the no-model
// baseline. Throws UsageError on an empty or out-of-range grid and
// DataError on an empty eval set.
SweepResult sweep_threshold(const std::vector<ScoredDecision>& eval_set,
                            const costmodel::CostParams& costs,
                            const std::vector<double>& grid);

// Header P,acc,precision,recall,flagged,cost,reduction_pct.
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace lpcorp::analytics
