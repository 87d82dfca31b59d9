#include "lpcorp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lpcorp/csv.hpp"
#include "lpcorp/errors.hpp"
#include "lpcorp/rng.hpp"
#include "lpcorp/text.hpp"
#include "lpcorp/version.hpp"

namespace fs = std::filesystem;

namespace lpcorp::pipeline {

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw DataError("failed while writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string path_join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string two_places(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// manifest_<command>.json: config snapshot, versions, counts, and a
// checksum per emitted file so reruns are comparable at a glance.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& config,
                    const nlohmann::json& counts,
                    const std::vector<std::string>& files) {
  nlohmann::json j;
  j["command"] = command;
  j["versions"] = {{"app", kVersion},
                   {"tfidf_file", kTfidfFileVersion},
                   {"correction_file", kCorrectionFileVersion}};
  j["config"] = config;
  j["counts"] = counts;
  nlohmann::json sums = nlohmann::json::object();
  for (const std::string& name : files) {
    sums[name] = fnv1a64_hex(read_file(path_join(out_dir, name)));
  }
  j["checksums"] = sums;
  write_file(path_join(out_dir, "manifest_" + command + ".json"),
             j.dump(2) + "\n");
}

nlohmann::json reasoned_to_json(const reasoner::ReasonedSample& r) {
  nlohmann::json j;
  j["sample_id"] = r.sample_id;
  j["conclusion"] = reasoner::conclusion_token(r.conclusion);
  j["reasoning"] = r.reasoning;
  j["raw_response"] = r.raw_response;
  if (r.error) j["error"] = *r.error;
  return j;
}

std::vector<reasoner::ReasonedSample> load_reasoned(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<reasoner::ReasonedSample> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      reasoner::ReasonedSample r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.conclusion =
          reasoner::conclusion_from_token(j.at("conclusion").get<std::string>());
      r.reasoning = j.value("reasoning", "");
      r.raw_response = j.value("raw_response", "");
      if (j.contains("error") && !j.at("error").is_null()) {
        r.error = j.at("error").get<std::string>();
      }
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": bad reasoned row: " + e.what());
    }
  }
  return rows;
}

void write_scores(const std::string& path,
                  const std::vector<analytics::ScoredDecision>& scored) {
  std::string out;
  for (const analytics::ScoredDecision& s : scored) {
    nlohmann::json j;
    j["sample_id"] = s.sample_id;
    j["stage1"] = reasoner::conclusion_token(s.stage1);
    j["p_correct"] = s.p_correct;
    j["truth"] = s.truth;
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<analytics::ScoredDecision> load_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<analytics::ScoredDecision> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      analytics::ScoredDecision s;
      s.sample_id = j.at("sample_id").get<std::string>();
      s.stage1 =
          reasoner::conclusion_from_token(j.at("stage1").get<std::string>());
      s.p_correct = j.at("p_correct").get<double>();
      s.truth = j.at("truth").get<int>();
      rows.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": bad score row: " + e.what());
    }
  }
  if (rows.empty()) throw DataError(path + " holds no score rows");
  return rows;
}

costmodel::CostParams resolve_ep(costmodel::CostParams costs,
                                 const std::vector<int>& truths) {
  if (costs.ep >= 0.0) return costs;
  std::size_t pos = 0;
  for (int t : truths) pos += t == 1;
  costs.ep = static_cast<double>(pos) / static_cast<double>(truths.size());
  return costs;
}

std::vector<costmodel::CostRow> cost_rows_from_sweep(
    const analytics::SweepResult& sweep, const costmodel::CostParams& costs) {
  const double base = costmodel::baseline_cost(costs);
  std::vector<costmodel::CostRow> rows;
  rows.reserve(sweep.rows.size());
  for (const analytics::SweepRow& r : sweep.rows) {
    rows.push_back({r.threshold, r.recall.value_or(0.0), r.precision, r.cost,
                    base, r.reduction_pct});
  }
  return rows;
}

nlohmann::json costs_to_json(const costmodel::CostParams& p) {
  return {{"ep", p.ep}, {"ce", p.ce}, {"ci", p.ci}, {"e", p.e}};
}

}  // namespace

DirLock::DirLock(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw DataError("cannot create output directory " + out_dir + ": " +
                    ec.message());
  }
  path_ = path_join(out_dir, ".lock");
  if (!fs::create_directory(path_, ec) || ec) {
    throw DataError("output directory " + out_dir +
                    " is locked by another run (remove " + path_ +
                    " if that run is dead)");
  }
}

DirLock::~DirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

ReasonSummary cmd_reason(const ReasonConfig& cfg) {
  DirLock lock(cfg.out_dir);
  const corpus::LoadReport loaded =
      corpus::load_dataset(cfg.dataset_path, cfg.load);
  const corpus::Dataset& ds = loaded.dataset;
  if (ds.empty()) throw DataError(cfg.dataset_path + " holds no samples");

  const std::string reasoned_path = path_join(cfg.out_dir, "reasoned.jsonl");
  std::unordered_set<std::string> done;
  if (cfg.resume && fs::exists(reasoned_path)) {
    for (const reasoner::ReasonedSample& r : load_reasoned(reasoned_path)) {
      done.insert(r.sample_id);
    }
  }

  corpus::Dataset pending;
  pending.class0_name = ds.class0_name;
  pending.class1_name = ds.class1_name;
  ReasonSummary sum;
  sum.n_total = ds.size();
  for (const corpus::Sample& s : ds.samples) {
    if (done.count(s.id)) ++sum.n_resumed;
    else pending.samples.push_back(s);
  }

  reasoner::OracleSpec oracle = cfg.oracle;
  if (auto* knobs = std::get_if<reasoner::SyntheticKnobs>(&oracle)) {
    knobs->seed = cfg.seed;  // one global seed drives everything
  }
  const bool endpoint_mode =
      std::holds_alternative<reasoner::OracleConfig>(oracle);

  std::string rows_out, audit_out;
  if (!pending.empty()) {
    const reasoner::Stage1Result result =
        reasoner::run_stage1(pending, oracle, cfg.prompt, cfg.max_in_flight);
    sum.n_queried = result.reasoned.size();
    sum.n_not_sure = result.n_not_sure;
    sum.n_errors = result.n_errors;
    for (const reasoner::ReasonedSample& r : result.reasoned) {
      rows_out += reasoned_to_json(r).dump();
      rows_out.push_back('\n');
    }
    for (const reasoner::AuditEntry& a : result.audit) {
      nlohmann::json j;
      j["sample_id"] = a.sample_id;
      j["request_body"] = a.request_body;
      j["status"] = a.status;
      j["response_body"] = a.response_body;
      j["attempts"] = a.attempts;
      audit_out += j.dump();
      audit_out.push_back('\n');
    }
  }

  const bool fresh = !(cfg.resume && fs::exists(reasoned_path));
  {
    std::ofstream out(reasoned_path,
                      fresh ? std::ios::binary
                            : std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot open " + reasoned_path);
    out << rows_out;
    if (!out) throw DataError("failed while writing " + reasoned_path);
  }
  std::vector<std::string> files = {"reasoned.jsonl"};
  if (endpoint_mode && !audit_out.empty()) {
    std::ofstream out(path_join(cfg.out_dir, "audit.jsonl"),
                      std::ios::binary | std::ios::app);
    out << audit_out;
    files.push_back("audit.jsonl");
  }

  nlohmann::json config;
  config["dataset"] = cfg.dataset_path;
  config["seed"] = cfg.seed;
  config["resume"] = cfg.resume;
  config["oracle"] = endpoint_mode ? "endpoint" : "synthetic";
  if (const auto* oc = std::get_if<reasoner::OracleConfig>(&oracle)) {
    config["endpoint_url"] = oc->endpoint_url;
    config["model"] = oc->model_name;
  } else {
    const auto& k = std::get<reasoner::SyntheticKnobs>(oracle);
    config["signal_token"] = k.signal_token;
    config["acc_with_signal"] = k.acc_with_signal;
    config["acc_without_signal"] = k.acc_without_signal;
  }
  nlohmann::json counts;
  counts["ingested"] = sum.n_total;
  counts["queried"] = sum.n_queried;
  counts["resumed"] = sum.n_resumed;
  counts["not_sure"] = sum.n_not_sure;
  counts["errors"] = sum.n_errors;
  write_manifest(cfg.out_dir, "reason", config, counts, files);
  return sum;
}

CorrectSummary cmd_correct(const CorrectConfig& cfg) {
  DirLock lock(cfg.out_dir);
  const corpus::LoadReport loaded =
      corpus::load_dataset(cfg.dataset_path, cfg.load);
  const corpus::Dataset& ds = loaded.dataset;

  const std::string reasoned_path =
      cfg.reasoned_path.empty() ? path_join(cfg.out_dir, "reasoned.jsonl")
                                : cfg.reasoned_path;
  std::unordered_map<std::string, reasoner::ReasonedSample> by_id;
  for (reasoner::ReasonedSample& r : load_reasoned(reasoned_path)) {
    const std::string id = r.sample_id;
    if (!by_id.emplace(id, std::move(r)).second) {
      throw DataError(reasoned_path + ": duplicate reasoned id \"" + id +
                      "\"");
    }
  }
  std::size_t missing = 0;
  std::string first_missing;
  for (const corpus::Sample& s : ds.samples) {
    if (!by_id.count(s.id)) {
      if (missing == 0) first_missing = s.id;
      ++missing;
    }
  }
  if (missing > 0) {
    throw DataError(reasoned_path + " lacks " + std::to_string(missing) +
                    " of the dataset's samples (first missing id \"" +
                    first_missing + "\"); run the reasoning stage first");
  }

  const corpus::Split sp =
      corpus::split(ds, {cfg.train_fraction, derive_seed(cfg.seed, "split")});
  corpus::Dataset train = sp.train;
  if (cfg.downsample_ratio > 0.0) {
    train = corpus::downsample_majority(train, cfg.downsample_ratio,
                                        derive_seed(cfg.seed, "downsample"))
                .dataset;
  }

  CorrectSummary sum;
  sum.n_train = train.size();

  std::vector<reasoner::ReasonedSample> train_rows;
  train_rows.reserve(train.size());
  for (const corpus::Sample& s : train.samples) {
    train_rows.push_back(by_id.at(s.id));
  }
  const std::vector<corrector::LabeledDoc> labeled =
      corrector::make_labels(train_rows, train);
  sum.n_train_decided = labeled.size();
  std::size_t n_s1 = 0;
  for (const corrector::LabeledDoc& d : labeled) n_s1 += d.s;
  if (labeled.empty() || n_s1 == 0 || n_s1 == labeled.size()) {
    throw DataError(
        "correction target is single-class: " + std::to_string(n_s1) +
        " correct vs " + std::to_string(labeled.size() - n_s1) +
        " incorrect stage-1 conclusions on the train side");
  }
  sum.train_label_balance =
      static_cast<double>(n_s1) / static_cast<double>(labeled.size());

  std::vector<std::string> docs;
  docs.reserve(labeled.size());
  for (const corrector::LabeledDoc& d : labeled) docs.push_back(d.doc);
  const features::TfidfModel vec = features::fit(docs, cfg.tfidf);

  std::vector<features::FeatureVector> X;
  X.reserve(labeled.size());
  std::vector<int> y;
  y.reserve(labeled.size());
  for (const corrector::LabeledDoc& d : labeled) {
    X.push_back(features::transform(vec, d.doc));
    y.push_back(d.s);
  }
  corrector::CorrectionModel model = corrector::train(X, y, cfg.train);
  model.vectorizer_fingerprint = features::fingerprint(vec);
  features::save_model(vec, path_join(cfg.out_dir, "tfidf.json"));
  corrector::save_model(model, path_join(cfg.out_dir, "model.json"));

  // Score the held-out side.
  std::vector<reasoner::ReasonedSample> eval_rows;
  std::vector<analytics::ScoredDecision> scored;
  std::vector<int> truths;
  for (const corpus::Sample& s : sp.test.samples) {
    const reasoner::ReasonedSample& r = by_id.at(s.id);
    if (r.conclusion == reasoner::Conclusion::kNotSure) {
      ++sum.n_eval_excluded;
      continue;
    }
    const features::FeatureVector x =
        features::transform(vec, features::compose_document(s, r));
    analytics::ScoredDecision d;
    d.sample_id = s.id;
    d.stage1 = r.conclusion;
    d.p_correct = corrector::predict_correct(model, x);
    d.truth = s.label;
    scored.push_back(std::move(d));
    eval_rows.push_back(r);
    truths.push_back(s.label);
  }
  sum.n_eval = scored.size();
  if (scored.empty()) {
    throw DataError("no decided samples on the eval side; nothing to score");
  }
  write_scores(path_join(cfg.out_dir, "scores.jsonl"), scored);

  const costmodel::CostParams costs = resolve_ep(cfg.costs, truths);
  const std::vector<double> grid =
      cfg.grid.empty() ? analytics::default_grid() : cfg.grid;
  sum.sweep = analytics::sweep_threshold(scored, costs, grid);
  write_file(path_join(cfg.out_dir, "sweep.csv"),
             analytics::sweep_csv(sum.sweep.rows));
  write_file(path_join(cfg.out_dir, "cost.csv"),
             costmodel::cost_csv(cost_rows_from_sweep(sum.sweep, costs)));

  nlohmann::json mj;
  mj["costs"] = costs_to_json(costs);
  mj["p_opt_acc"] = sum.sweep.p_opt_acc;
  mj["p_opt_cost"] = sum.sweep.p_opt_cost;
  mj["thresholds"] = nlohmann::json::object();
  std::string text_out;
  nlohmann::json counts;
  for (double P : cfg.report_thresholds) {
    std::vector<corrector::CorrectionDecision> decisions;
    decisions.reserve(scored.size());
    for (const analytics::ScoredDecision& s : scored) {
      reasoner::ReasonedSample r;
      r.sample_id = s.sample_id;
      r.conclusion = s.stage1;
      decisions.push_back(corrector::apply_correction(r, s.p_correct, P));
    }
    metrics::ThreeRowReport rep =
        metrics::three_row_report(eval_rows, decisions, truths);
    rep.stage1.n_excluded = sum.n_eval_excluded;
    rep.final_corrected.n_excluded = sum.n_eval_excluded;
    const std::string key = two_places(P);
    mj["thresholds"][key] = nlohmann::json::parse(metrics::render_json(rep));
    text_out += "P = " + key + "\n" + metrics::render_text(rep) + "\n";
    std::size_t flipped = 0;
    for (const corrector::CorrectionDecision& d : decisions) {
      flipped += d.flipped;
    }
    counts["flagged@" + key] = rep.n_flagged;
    counts["flipped@" + key] = flipped;
    sum.reports.emplace_back(P, std::move(rep));
  }
  sum.stage1_accuracy = sum.reports.front().second.stage1.accuracy;
  write_file(path_join(cfg.out_dir, "metrics.json"), mj.dump(2) + "\n");
  write_file(path_join(cfg.out_dir, "metrics.txt"), text_out);

  nlohmann::json config;
  config["dataset"] = cfg.dataset_path;
  config["reasoned"] = reasoned_path;
  config["train_fraction"] = cfg.train_fraction;
  config["downsample_ratio"] = cfg.downsample_ratio;
  config["seed"] = cfg.seed;
  config["tfidf"] = {{"ngram_min", cfg.tfidf.ngram_min},
                     {"ngram_max", cfg.tfidf.ngram_max},
                     {"min_df", cfg.tfidf.min_df},
                     {"lowercase", cfg.tfidf.lowercase}};
  if (cfg.tfidf.max_features) {
    config["tfidf"]["max_features"] = *cfg.tfidf.max_features;
  }
  config["costs"] = costs_to_json(costs);
  config["grid"] = grid;
  config["report_thresholds"] = cfg.report_thresholds;

  counts["ingested"] = ds.size();
  counts["train"] = sp.train.size();
  counts["train_after_downsample"] = train.size();
  counts["train_decided"] = sum.n_train_decided;
  counts["train_excluded_not_sure"] = train.size() - sum.n_train_decided;
  counts["eval"] = sp.test.size();
  counts["eval_evaluated"] = sum.n_eval;
  counts["eval_excluded_not_sure"] = sum.n_eval_excluded;
  write_manifest(cfg.out_dir, "correct", config, counts,
                 {"tfidf.json", "model.json", "scores.jsonl", "sweep.csv",
                  "cost.csv", "metrics.json", "metrics.txt"});
  return sum;
}

analytics::SweepResult cmd_sweep(const SweepConfig& cfg) {
  DirLock lock(cfg.out_dir);
  const std::vector<analytics::ScoredDecision> scored =
      load_scores(cfg.scores_path);
  std::vector<int> truths;
  truths.reserve(scored.size());
  for (const analytics::ScoredDecision& s : scored) truths.push_back(s.truth);
  const costmodel::CostParams costs = resolve_ep(cfg.costs, truths);
  const std::vector<double> grid =
      cfg.grid.empty() ? analytics::default_grid() : cfg.grid;
  const analytics::SweepResult sweep =
      analytics::sweep_threshold(scored, costs, grid);
  write_file(path_join(cfg.out_dir, "sweep.csv"),
             analytics::sweep_csv(sweep.rows));
  write_file(path_join(cfg.out_dir, "cost.csv"),
             costmodel::cost_csv(cost_rows_from_sweep(sweep, costs)));

  nlohmann::json config;
  config["scores"] = cfg.scores_path;
  config["costs"] = costs_to_json(costs);
  config["grid"] = grid;
  nlohmann::json counts;
  counts["ingested"] = scored.size();
  counts["grid_points"] = sweep.rows.size();
  write_manifest(cfg.out_dir, "sweep", config, counts,
                 {"sweep.csv", "cost.csv"});
  return sweep;
}

costmodel::CostRow cmd_cost(const CostConfig& cfg) {
  DirLock lock(cfg.out_dir);
  costmodel::OperatingMetrics om;
  om.recall = cfg.recall;
  om.precision = cfg.precision;
  costmodel::CostRow row;
  row.threshold = cfg.threshold_label;
  row.recall = cfg.recall;
  row.precision = cfg.precision;
  row.cost_per_sample = costmodel::expected_cost(cfg.costs, om);
  row.baseline = costmodel::baseline_cost(cfg.costs);
  row.reduction_pct = costmodel::cost_reduction_pct(cfg.costs, om);
  write_file(path_join(cfg.out_dir, "cost.csv"), costmodel::cost_csv({row}));

  nlohmann::json config;
  config["costs"] = costs_to_json(cfg.costs);
  config["recall"] = cfg.recall;
  if (cfg.precision) config["precision"] = *cfg.precision;
  write_manifest(cfg.out_dir, "cost", config, nlohmann::json::object(),
                 {"cost.csv"});
  return row;
}

SimulateResult cmd_simulate(const SimulateConfig& cfg) {
  DirLock lock(cfg.out_dir);
  SimulateResult res;
  res.closed_form = analytics::acc_corrected(cfg.op);
  res.monte_carlo = analytics::monte_carlo_acc(cfg.op, cfg.n, cfg.seed);
  res.abs_err = std::fabs(res.monte_carlo - res.closed_form);
  res.three_sigma = 3.0 * std::sqrt(res.closed_form *
                                    (1.0 - res.closed_form) /
                                    static_cast<double>(cfg.n));
  std::string out = "closed_form,monte_carlo,abs_err,three_sigma\n";
  out += csv::join_row({csv::number(res.closed_form),
                        csv::number(res.monte_carlo),
                        csv::number(res.abs_err),
                        csv::number(res.three_sigma)});
  write_file(path_join(cfg.out_dir, "simulate.csv"), out);

  nlohmann::json config;
  config["pi"] = cfg.op.pi;
  config["tpr"] = cfg.op.tpr;
  config["tnr"] = cfg.op.tnr;
  config["n"] = cfg.n;
  config["seed"] = cfg.seed;
  write_manifest(cfg.out_dir, "simulate", config, nlohmann::json::object(),
                 {"simulate.csv"});
  return res;
}

std::size_t cmd_heatmap(const HeatmapConfig& cfg) {
  DirLock lock(cfg.out_dir);
  const std::vector<analytics::HeatmapCell> cells =
      analytics::heatmap_grid(cfg.pi, cfg.steps, cfg.steps);
  write_file(path_join(cfg.out_dir, "heatmap.csv"),
             analytics::heatmap_csv(cells));
  std::vector<std::string> files = {"heatmap.csv"};
  if (cfg.svg) {
    write_file(path_join(cfg.out_dir, "heatmap.svg"),
               analytics::heatmap_svg(cells, cfg.steps, cfg.steps));
    files.push_back("heatmap.svg");
  }
  nlohmann::json config;
  config["pi"] = cfg.pi;
  config["steps"] = cfg.steps;
  nlohmann::json counts;
  counts["cells"] = cells.size();
  write_manifest(cfg.out_dir, "heatmap", config, counts, files);
  return cells.size();
}

TempalignSummary cmd_tempalign(const TempalignConfig& cfg) {
  DirLock lock(cfg.out_dir);
  const std::vector<temporal::AdmissionTimeline> admissions =
      temporal::load_timelines(cfg.timelines_path);
  if (admissions.empty()) {
    throw DataError(cfg.timelines_path + " holds no admissions");
  }
  const temporal::HorizonConfig h{cfg.horizon_hours};
  const temporal::BuildResult built =
      temporal::build_cohort(admissions, h, cfg.seed);
  if (built.dataset.empty()) {
    throw DataError("every admission was excluded; nothing to emit");
  }

  std::string aligned;
  for (const corpus::Sample& s : built.dataset.samples) {
    nlohmann::json j;
    j["id"] = s.id;
    j["text"] = s.text;
    j["label"] = s.label;
    j["meta"] = s.meta;
    aligned += j.dump();
    aligned.push_back('\n');
  }
  write_file(path_join(cfg.out_dir, "aligned.jsonl"), aligned);

  std::string excl = "admission_id,reason\n";
  for (const temporal::Exclusion& e : built.exclusions) {
    excl += csv::join_row({e.admission_id, e.reason});
  }
  write_file(path_join(cfg.out_dir, "exclusions.csv"), excl);

  const temporal::DistributionExport dist = temporal::export_distributions(
      built.pos_offsets,
      built.neg_sampled.offsets.empty() ? nullptr : &built.neg_sampled,
      cfg.bins);
  write_file(path_join(cfg.out_dir, "offsets_hist.csv"), dist.histogram_csv);
  write_file(path_join(cfg.out_dir, "offsets_kde.csv"), dist.kde_csv);

  TempalignSummary sum;
  sum.n_admissions = admissions.size();
  sum.n_emitted = built.dataset.size();
  sum.n_excluded = built.exclusions.size();
  sum.prevalence = corpus::prevalence(built.dataset);

  nlohmann::json config;
  config["timelines"] = cfg.timelines_path;
  config["horizon_hours"] = cfg.horizon_hours;
  config["bins"] = cfg.bins;
  config["seed"] = cfg.seed;
  nlohmann::json counts;
  counts["ingested"] = sum.n_admissions;
  counts["emitted"] = sum.n_emitted;
  counts["excluded"] = sum.n_excluded;
  nlohmann::json reasons = nlohmann::json::object();
  for (const temporal::Exclusion& e : built.exclusions) {
    const std::string key = e.reason;
    reasons[key] = reasons.value(key, 0) + 1;
  }
  counts["excluded_by_reason"] = reasons;
  write_manifest(cfg.out_dir, "tempalign", config, counts,
                 {"aligned.jsonl", "exclusions.csv", "offsets_hist.csv",
                  "offsets_kde.csv"});
  return sum;
}

std::string cmd_report(const std::string& out_dir) {
  if (!fs::is_directory(out_dir)) {
    throw DataError(out_dir + " is not a directory");
  }
  std::vector<std::string> manifests;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("manifest_", 0) == 0 && name.size() > 14 &&
        name.substr(name.size() - 5) == ".json") {
      manifests.push_back(name);
    }
  }
  if (manifests.empty()) {
    throw DataError(out_dir + " holds no run manifests; nothing to report");
  }
  std::sort(manifests.begin(), manifests.end());

  std::string out = "run report for " + out_dir + "\n";
  for (const std::string& name : manifests) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path_join(out_dir, name)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(name + ": unreadable manifest: " + e.what());
    }
    out += "\n[" + j.value("command", "?") + "]\n";
    if (j.contains("counts")) {
      for (const auto& [k, v] : j.at("counts").items()) {
        out += "  " + k + " = " + v.dump() + "\n";
      }
    }
    if (j.contains("checksums")) {
      for (const auto& [k, v] : j.at("checksums").items()) {
        out += "  " + k + " " + v.get<std::string>() + "\n";
      }
    }
  }
  const std::string metrics_path = path_join(out_dir, "metrics.txt");
  if (fs::exists(metrics_path)) {
    out += "\n" + read_file(metrics_path);
  }
  const std::string mj_path = path_join(out_dir, "metrics.json");
  if (fs::exists(mj_path)) {
    try {
      const nlohmann::json mj = nlohmann::json::parse(read_file(mj_path));
      out += "P_opt_acc = " + mj.at("p_opt_acc").dump() + "\n";
      out += "P_opt_cost = " + mj.at("p_opt_cost").dump() + "\n";
    } catch (const nlohmann::json::exception&) {
      // metrics.json is optional detail here; skip when unreadable
    }
  }
  write_file(path_join(out_dir, "report.txt"), out);
  return out;
}

}  // namespace lpcorp::pipeline
