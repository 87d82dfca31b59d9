#include "lpcorp/metrics.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "lpcorp/errors.hpp"

namespace lpcorp::metrics {

namespace {

nlohmann::json report_json(const MetricsReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision ? nlohmann::json(*r.precision)
                               : nlohmann::json(nullptr);
  j["recall"] = r.recall ? nlohmann::json(*r.recall) : nlohmann::json(nullptr);
  j["counts"] = {{"tp", r.counts.tp},
                 {"fp", r.counts.fp},
                 {"tn", r.counts.tn},
                 {"fn", r.counts.fn}};
  j["n_evaluated"] = r.n_evaluated;
  j["n_excluded"] = r.n_excluded;
  return j;
}

std::string fmt_metric(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

void append_row(std::string& out, const std::string& name,
                const MetricsReport* r) {
  char buf[160];
  if (r == nullptr) {
    std::snprintf(buf, sizeof buf, "%-16s %8s %10s %10s %10s  %s\n",
                  name.c_str(), "0", "-", "-", "-", "(no flagged samples)");
    out += buf;
    return;
  }
  std::snprintf(buf, sizeof buf,
                "%-16s %8llu %10s %10s %10s  tp=%llu fp=%llu tn=%llu fn=%llu\n",
                name.c_str(),
                static_cast<unsigned long long>(r->n_evaluated),
                fmt_metric(r->accuracy).c_str(), fmt_metric(r->precision).c_str(),
                fmt_metric(r->recall).c_str(),
                static_cast<unsigned long long>(r->counts.tp),
                static_cast<unsigned long long>(r->counts.fp),
                static_cast<unsigned long long>(r->counts.tn),
                static_cast<unsigned long long>(r->counts.fn));
  out += buf;
}

}  // namespace

ConfusionCounts confusion(const std::vector<reasoner::Conclusion>& preds,
                          const std::vector<int>& truths) {
  if (preds.size() != truths.size()) {
    throw DataError("predictions and truths disagree in length (" +
                    std::to_string(preds.size()) + " vs " +
                    std::to_string(truths.size()) + ")");
  }
  if (preds.empty()) throw DataError("cannot build a confusion matrix from zero samples");

  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == reasoner::Conclusion::kNotSure) {
      throw DataError("prediction " + std::to_string(i) +
                      " is still \"not sure\"; exclude undecided samples "
                      "before scoring");
    }
    const bool pred1 = preds[i] == reasoner::Conclusion::kClass1;
    const bool truth1 = truths[i] == 1;
    if (pred1 && truth1) ++c.tp;
    else if (pred1 && !truth1) ++c.fp;
    else if (!pred1 && truth1) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricsReport report(const ConfusionCounts& counts) {
  const std::uint64_t total = counts.total();
  if (total == 0) throw DataError("metrics need at least one evaluated sample");

  MetricsReport r;
  r.counts = counts;
  r.n_evaluated = total;
  r.accuracy = static_cast<double>(counts.tp + counts.tn) /
               static_cast<double>(total);
  if (counts.tp + counts.fp > 0) {
    r.precision = static_cast<double>(counts.tp) /
                  static_cast<double>(counts.tp + counts.fp);
  }
  if (counts.tp + counts.fn > 0) {
    r.recall = static_cast<double>(counts.tp) /
               static_cast<double>(counts.tp + counts.fn);
  }
  return r;
}

ThreeRowReport three_row_report(
    const std::vector<reasoner::ReasonedSample>& stage1,
    const std::vector<corrector::CorrectionDecision>& corrected,
    const std::vector<int>& truths) {
  if (stage1.size() != corrected.size() || stage1.size() != truths.size()) {
    throw DataError("stage-1, corrected and truth lists disagree in length");
  }
  std::vector<reasoner::Conclusion> s1, fin, flagged_preds;
  std::vector<int> flagged_truths;
  s1.reserve(stage1.size());
  fin.reserve(stage1.size());
  std::uint64_t n_flagged = 0;
  for (std::size_t i = 0; i < stage1.size(); ++i) {
    if (stage1[i].sample_id != corrected[i].sample_id) {
      throw DataError("row " + std::to_string(i) +
                      ": stage-1 id \"" + stage1[i].sample_id +
                      "\" does not match corrected id \"" +
                      corrected[i].sample_id + "\"");
    }
    s1.push_back(stage1[i].conclusion);
    fin.push_back(corrected[i].final_conclusion);
    if (corrected[i].flagged) {
      ++n_flagged;
      flagged_preds.push_back(corrected[i].final_conclusion);
      flagged_truths.push_back(truths[i]);
    }
  }

  ThreeRowReport out;
  out.stage1 = report(confusion(s1, truths));
  out.final_corrected = report(confusion(fin, truths));
  out.n_flagged = n_flagged;
  if (n_flagged > 0) {
    out.corrected_only = report(confusion(flagged_preds, flagged_truths));
  }
  return out;
}

std::string render_json(const MetricsReport& r) {
  return report_json(r).dump(2);
}

std::string render_json(const ThreeRowReport& r) {
  nlohmann::json j;
  j["stage1"] = report_json(r.stage1);
  j["corrected_only"] = r.corrected_only ? report_json(*r.corrected_only)
                                         : nlohmann::json(nullptr);
  j["final_corrected"] = report_json(r.final_corrected);
  j["n_flagged"] = r.n_flagged;
  return j.dump(2);
}

std::string render_text(const ThreeRowReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %8s %10s %10s %10s\n", "row", "n",
                "accuracy", "precision", "recall");
  out += buf;
  append_row(out, "stage1", &r.stage1);
  append_row(out, "corrected_only",
             r.corrected_only ? &*r.corrected_only : nullptr);
  append_row(out, "final_corrected", &r.final_corrected);
  return out;
}

}  // namespace lpcorp::metrics
