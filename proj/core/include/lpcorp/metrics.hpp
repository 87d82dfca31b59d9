#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpcorp/corrector.hpp"
#include "lpcorp/reasoner.hpp"

namespace lpcorp::metrics {

// Class1 is the positive (rare) class throughout.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
};

// Throws DataError when lengths differ, lists are empty, or a prediction
// is still "not sure".
ConfusionCounts confusion(const std::vector<reasoner::Conclusion>& preds,
                          const std::vector<int>& truths);

// precision/recall stay unset when their denominators are zero; they are
// reported as such, never silently coerced to 0.
struct MetricsReport {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  ConfusionCounts counts;
  std::uint64_t n_evaluated = 0;
  std::uint64_t n_excluded = 0;
};

MetricsReport report(const ConfusionCounts& counts);

// The three table rows: stage 1 as-is, flagged subset after correction,
// and every sample after correction. corrected_only is absent when no
// sample cleared the threshold.
struct ThreeRowReport {
  MetricsReport stage1;
  std::optional<MetricsReport> corrected_only;
  MetricsReport final_corrected;
  std::uint64_t n_flagged = 0;
};

// Inputs are aligned by position; ids must agree pairwise.
ThreeRowReport three_row_report(
    const std::vector<reasoner::ReasonedSample>& stage1,
    const std::vector<corrector::CorrectionDecision>& corrected,
    const std::vector<int>& truths);

std::string render_json(const MetricsReport& r);
std::string render_json(const ThreeRowReport& r);

// Aligned columns, one row per report; undefined metrics print as
// "undefined".
std::string render_text(const ThreeRowReport& r);

}  // namespace lpcorp::metrics
