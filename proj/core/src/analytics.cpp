#include "lpcorp/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lpcorp/corrector.hpp"
#include "lpcorp/csv.hpp"
#include "lpcorp/errors.hpp"
#include "lpcorp/metrics.hpp"
#include "lpcorp/rng.hpp"

namespace lpcorp::analytics {

namespace {

void check01(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw UsageError(std::string(name) + " must lie in [0, 1]");
  }
}

void check_op(const OperatingPoint& op) {
  check01(op.pi, "pi");
  check01(op.tpr, "tpr");
  check01(op.tnr, "tnr");
}

}  // namespace

double acc_corrected(const OperatingPoint& op) {
  check_op(op);
  return op.tnr + op.pi * (op.tpr - op.tnr);
}

double net_improvement(const OperatingPoint& op) {
  return acc_corrected(op) - op.pi;
}

bool improves(const OperatingPoint& op) {
  check_op(op);
  return (1.0 - op.pi) * op.tnr > op.pi * (1.0 - op.tpr);
}

std::optional<double> precision_at_prevalence(const PrevalencePoint& pt) {
  check01(pt.p, "prevalence");
  check01(pt.tpr_event, "event tpr");
  check01(pt.fpr_event, "event fpr");
  const double pos = pt.p * pt.tpr_event;
  const double denom = pos + (1.0 - pt.p) * pt.fpr_event;
  if (denom == 0.0) return std::nullopt;
  return pos / denom;
}

double trivial_accuracy(double p) {
  check01(p, "prevalence");
  return 1.0 - p;
}

std::vector<HeatmapCell> heatmap_grid(double pi, int tpr_steps,
                                      int tnr_steps) {
  check01(pi, "pi");
  if (tpr_steps < 2 || tnr_steps < 2) {
    throw UsageError("heatmap needs at least 2 grid points per axis");
  }
  std::vector<HeatmapCell> cells;
  cells.reserve(static_cast<std::size_t>(tpr_steps) * tnr_steps);
  for (int i = 0; i < tpr_steps; ++i) {
    const double tpr = static_cast<double>(i) / (tpr_steps - 1);
    for (int j = 0; j < tnr_steps; ++j) {
      const double tnr = static_cast<double>(j) / (tnr_steps - 1);
      cells.push_back({tpr, tnr, net_improvement({pi, tpr, tnr})});
    }
  }
  return cells;
}

std::string heatmap_csv(const std::vector<HeatmapCell>& cells) {
  std::string out = "tpr,tnr,delta\n";
  for (const HeatmapCell& c : cells) {
    out += csv::join_row(
        {csv::number(c.tpr), csv::number(c.tnr), csv::number(c.delta)});
  }
  return out;
}

std::string heatmap_svg(const std::vector<HeatmapCell>& cells, int tpr_steps,
                        int tnr_steps) {
  if (tpr_steps < 2 || tnr_steps < 2 ||
      cells.size() != static_cast<std::size_t>(tpr_steps) * tnr_steps) {
    throw UsageError("cell count does not match the stated grid shape");
  }
  double lo = 0.0, hi = 0.0;
  for (const HeatmapCell& c : cells) {
    lo = std::min(lo, c.delta);
    hi = std::max(hi, c.delta);
  }
  const double span = std::max(std::max(-lo, hi), 1e-12);

  constexpr int kCell = 24;
  constexpr int kMargin = 40;
  const int w = kMargin + tnr_steps * kCell + 10;
  const int h = kMargin + tpr_steps * kCell + 10;
  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                "height=\"%d\">\n",
                w, h);
  svg += buf;
  svg += "<style>text{font:10px sans-serif}</style>\n";
  for (int i = 0; i < tpr_steps; ++i) {
    for (int j = 0; j < tnr_steps; ++j) {
      const HeatmapCell& c = cells[static_cast<std::size_t>(i) * tnr_steps + j];
      // Diverging scale: shade toward red for gains, blue for losses.
      const double t = c.delta / span;
      int r = 255, g = 255, b = 255;
      if (t >= 0) {
        g = b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
      } else {
        r = g = static_cast<int>(std::lround(255.0 * (1.0 + t)));
      }
      // Row 0 (tpr=0) at the bottom.
      const int x = kMargin + j * kCell;
      const int y = 10 + (tpr_steps - 1 - i) * kCell;
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                    "fill=\"rgb(%d,%d,%d)\"><title>tpr=%g tnr=%g "
                    "delta=%g</title></rect>\n",
                    x, y, kCell, kCell, r, g, b, c.tpr, c.tnr, c.delta);
      svg += buf;
    }
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%d\" y=\"%d\">tnr</text>\n<text x=\"6\" "
                "y=\"%d\">tpr</text>\n</svg>\n",
                kMargin + tnr_steps * kCell / 2, h - 6,
                10 + tpr_steps * kCell / 2);
  svg += buf;
  return svg;
}

double monte_carlo_acc(const OperatingPoint& op, std::uint64_t n,
                       std::uint64_t seed) {
  check_op(op);
  if (n < 1) throw UsageError("monte carlo needs at least one draw");
  Rng rng(seed);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const bool stage1_correct = rng.bernoulli(op.pi);
    const bool verdict_correct =
        stage1_correct ? rng.bernoulli(op.tpr) : !rng.bernoulli(op.tnr);
    // Conclusions with an "incorrect" verdict get flipped, so the final
    // answer is right exactly when the verdict agreed with reality.
    if (verdict_correct == stage1_correct) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int i = 0; i < 10; ++i) g.push_back(0.50 + 0.05 * i);
  return g;
}

SweepResult sweep_threshold(const std::vector<ScoredDecision>& eval_set,
                            const costmodel::CostParams& costs,
                            const std::vector<double>& grid) {
  if (grid.empty()) throw UsageError("threshold grid is empty");
  for (double P : grid) {
    if (!(P >= 0.5) || !(P < 1.0)) {
      throw UsageError("threshold grid values must lie in [0.5, 1)");
    }
  }
  if (eval_set.empty()) throw DataError("nothing to sweep: empty eval set");

  SweepResult out;
  out.rows.reserve(grid.size());
  for (double P : grid) {
    std::vector<reasoner::Conclusion> finals;
    finals.reserve(eval_set.size());
    std::vector<int> truths;
    truths.reserve(eval_set.size());
    SweepRow row;
    row.threshold = P;
    for (const ScoredDecision& s : eval_set) {
      reasoner::ReasonedSample r;
      r.sample_id = s.sample_id;
      r.conclusion = s.stage1;
      const corrector::CorrectionDecision d =
          corrector::apply_correction(r, s.p_correct, P);
      if (d.flagged) ++row.flagged;
      if (d.flipped) ++row.flipped;
      finals.push_back(d.final_conclusion);
      truths.push_back(s.truth);
    }
    const metrics::MetricsReport rep =
        metrics::report(metrics::confusion(finals, truths));
    row.accuracy = rep.accuracy;
    row.precision = rep.precision;
    row.recall = rep.recall;

    costmodel::OperatingMetrics om;
    om.recall = rep.recall.value_or(0.0);
    om.precision = rep.precision;
    row.cost = costmodel::expected_cost(costs, om);
    row.reduction_pct = costmodel::cost_reduction_pct(costs, om);
    out.rows.push_back(std::move(row));
  }

  const SweepRow* best_acc = nullptr;
  const SweepRow* best_cost = nullptr;
  for (const SweepRow& r : out.rows) {
    if (!best_acc || r.accuracy > best_acc->accuracy ||
        (r.accuracy == best_acc->accuracy &&
         r.threshold < best_acc->threshold)) {
      best_acc = &r;
    }
    if (!best_cost || r.cost < best_cost->cost ||
        (r.cost == best_cost->cost && r.threshold < best_cost->threshold)) {
      best_cost = &r;
    }
  }
  out.p_opt_acc = best_acc->threshold;
  out.p_opt_cost = best_cost->threshold;
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "P,acc,precision,recall,flagged,cost,reduction_pct\n";
  for (const SweepRow& r : rows) {
    out += csv::join_row({
        csv::number(r.threshold),
        csv::number(r.accuracy),
        r.precision ? csv::number(*r.precision) : std::string(),
        r.recall ? csv::number(*r.recall) : std::string(),
        std::to_string(r.flagged),
        csv::number(r.cost),
        csv::number(r.reduction_pct),
    });
  }
  return out;
}

}  // namespace lpcorp::analytics
