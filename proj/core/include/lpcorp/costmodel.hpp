#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lpcorp::costmodel {

struct CostParams {
  double ep = 0.0;   // event prevalence
  double ce = 0.0;   // cost of an unprevented event
  double ci = 0.0;   // cost of one intervention
  double e = 0.7;    // intervention efficacy
};

// Throws UsageError when a field is outside its range.
void validate(const CostParams& p);

// Recall and precision at one operating point. Precision is unset when the
// classifier predicted no positives.
struct OperatingMetrics {
  double recall = 0.0;
  std::optional<double> precision;
};

// ep * (R * (ci/Pr - e*ce) + ce); ep * ce when R = 0. Interventions are
// charged on every predicted positive, prevention only pays off on true
// positives. Throws DataError when R > 0 with precision unset or zero.
double expected_cost(const CostParams& p, const OperatingMetrics& m);

// Per-sample cost with no model at all: ep * ce.
double baseline_cost(const CostParams& p);

// (baseline - model) / baseline * 100; negative when the operating point
// costs more than doing nothing. Throws DataError when the baseline is 0.
double cost_reduction_pct(const CostParams& p, const OperatingMetrics& m);

// Savings over n samples when each correct call is worth c:
// n * (acc_corr - pi) * c.
double equal_cost_savings(double pi, double acc_corr, double c, double n);

struct Preset {
  std::string name;
  CostParams params;
};

// The three shipped cost scenarios, mild to severe. ep is left for the
// caller (it comes from the data); e defaults to 0.7.
const std::vector<Preset>& presets();

// Throws UsageError when no preset has that name.
const Preset& preset_by_name(const std::string& name);

struct CostRow {
  double threshold = 0.0;
  double recall = 0.0;
  std::optional<double> precision;
  double cost_per_sample = 0.0;
  double baseline = 0.0;
  double reduction_pct = 0.0;
};

// Header threshold,R,Pr,cost_per_sample,baseline,reduction_pct; numbers at
// full precision, empty Pr field when undefined.
std::string cost_csv(const std::vector<CostRow>& rows);

}  // namespace lpcorp::costmodel
