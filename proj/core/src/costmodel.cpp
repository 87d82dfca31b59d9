#include "lpcorp/costmodel.hpp"

#include "lpcorp/csv.hpp"
#include "lpcorp/errors.hpp"

namespace lpcorp::costmodel {

namespace {

void check01(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw UsageError(std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace

void validate(const CostParams& p) {
  check01(p.ep, "event prevalence");
  check01(p.e, "intervention efficacy");
  if (!(p.ce >= 0.0)) throw UsageError("event cost must be non-negative");
  if (!(p.ci >= 0.0)) {
    throw UsageError("intervention cost must be non-negative");
  }
}

double expected_cost(const CostParams& p, const OperatingMetrics& m) {
  validate(p);
  check01(m.recall, "recall");
  if (m.recall == 0.0) return p.ep * p.ce;
  if (!m.precision || *m.precision <= 0.0) {
    throw DataError(
        "positive recall needs a positive precision: some sample must have "
        "been predicted positive");
  }
  if (*m.precision > 1.0) throw DataError("precision cannot exceed 1");
  return p.ep * (m.recall * (p.ci / *m.precision - p.e * p.ce) + p.ce);
}

double baseline_cost(const CostParams& p) {
  validate(p);
  return p.ep * p.ce;
}

double cost_reduction_pct(const CostParams& p, const OperatingMetrics& m) {
  const double base = baseline_cost(p);
  if (base <= 0.0) {
    throw DataError(
        "cost reduction is undefined at zero baseline (ep or ce is 0)");
  }
  return (base - expected_cost(p, m)) / base * 100.0;
}

double equal_cost_savings(double pi, double acc_corr, double c, double n) {
  check01(pi, "prevalence");
  check01(acc_corr, "corrected accuracy");
  return n * (acc_corr - pi) * c;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> kPresets = {
      {"mild", {0.0, 1500.0, 50.0, 0.7}},
      {"moderate", {0.0, 20000.0, 400.0, 0.7}},
      {"severe", {0.0, 50000.0, 1000.0, 0.7}},
  };
  return kPresets;
}

const Preset& preset_by_name(const std::string& name) {
  for (const Preset& p : presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const Preset& p : presets()) {
    if (!known.empty()) known += ", ";
    known += p.name;
  }
  throw UsageError("unknown cost preset \"" + name + "\" (known: " + known +
                   ")");
}

std::string cost_csv(const std::vector<CostRow>& rows) {
  std::string out = "threshold,R,Pr,cost_per_sample,baseline,reduction_pct\n";
  for (const CostRow& r : rows) {
    out += csv::join_row({
        csv::number(r.threshold),
        csv::number(r.recall),
        r.precision ? csv::number(*r.precision) : std::string(),
        csv::number(r.cost_per_sample),
        csv::number(r.baseline),
        csv::number(r.reduction_pct),
    });
  }
  return out;
}

}  // namespace lpcorp::costmodel
