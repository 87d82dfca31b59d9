#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpcorp/errors.hpp"
#include "lpcorp/pipeline.hpp"
#include "lpcorp/version.hpp"

namespace {

using namespace lpcorp;

struct CostFlags {
  std::string preset;
  double ep = -1.0;
  std::optional<double> ce;
  std::optional<double> ci;
  double efficacy = 0.7;
};

// Shared cost flags; a preset fills ce/ci and explicit flags win over it.
void add_cost_flags(CLI::App* cmd, CostFlags* f) {
  cmd->add_option("--preset", f->preset,
                  "Cost preset: mild, moderate or severe");
  cmd->add_option("--ep", f->ep,
                  "Event prevalence; negative = take it from the data");
  cmd->add_option("--ce", f->ce, "Cost of an unprevented event");
  cmd->add_option("--ci", f->ci, "Cost of one intervention");
  cmd->add_option("--efficacy", f->efficacy, "Intervention efficacy")
      ->capture_default_str();
}

costmodel::CostParams resolve_cost_flags(const CostFlags& f) {
  costmodel::CostParams p;
  if (!f.preset.empty()) p = costmodel::preset_by_name(f.preset).params;
  else if (!f.ce || !f.ci) {
    throw UsageError("give --preset or both --ce and --ci");
  }
  if (f.ce) p.ce = *f.ce;
  if (f.ci) p.ci = *f.ci;
  p.e = f.efficacy;
  p.ep = f.ep;
  return p;
}

struct DatasetFlags {
  std::string path;
  std::string format = "jsonl";
  std::string class0 = "0";
  std::string class1 = "1";
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags* f) {
  cmd->add_option("--dataset", f->path, "Sample JSONL or CSV file")
      ->required();
  cmd->add_option("--format", f->format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}))
      ->capture_default_str();
  cmd->add_option("--class0", f->class0, "Display name of the frequent class")
      ->capture_default_str();
  cmd->add_option("--class1", f->class1, "Display name of the rare class")
      ->capture_default_str();
}

corpus::LoadOptions load_options(const DatasetFlags& f) {
  corpus::LoadOptions o;
  o.format = f.format == "csv" ? corpus::Format::kCsv : corpus::Format::kJsonl;
  o.class0_name = f.class0;
  o.class1_name = f.class1;
  return o;
}

int run(int argc, char** argv) {
  CLI::App app{"Two-stage rare-event prediction over clinical narratives: a "
               "reasoning oracle proposes conclusions, a trained corrector "
               "flips the ones it can tell are wrong."};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "",
                 "Config file (TOML-like sections per subcommand); flags "
                 "override config values");
  app.require_subcommand(1);

  // reason
  auto* reason = app.add_subcommand(
      "reason", "Stage 1: query the oracle for every sample");
  DatasetFlags r_data;
  add_dataset_flags(reason, &r_data);
  std::string r_out;
  reason->add_option("--out", r_out, "Run output directory")->required();
  std::uint64_t r_seed = 0;
  reason->add_option("--seed", r_seed, "Global seed")->capture_default_str();
  int r_max_in_flight = 4;
  reason->add_option("--max-in-flight", r_max_in_flight,
                     "Concurrent oracle requests")
      ->capture_default_str();
  bool r_no_resume = false;
  reason->add_flag("--no-resume", r_no_resume,
                   "Re-query everything instead of skipping rows already on "
                   "disk");
  std::string r_task;
  reason->add_option("--task", r_task,
                     "Task statement; {text} marks where the narrative goes");
  bool r_synthetic = false;
  reason->add_flag("--synthetic", r_synthetic, "Use the built-in oracle");
  std::string r_endpoint, r_model;
  reason->add_option("--endpoint", r_endpoint,
                     "Chat-completions URL (auth via LPCORP_API_KEY)");
  reason->add_option("--model", r_model, "Model name for the endpoint");
  double r_timeout = 60.0, r_temperature = 0.0;
  int r_retries = 3;
  reason->add_option("--timeout", r_timeout, "Request timeout, seconds")
      ->capture_default_str();
  reason->add_option("--max-retries", r_retries, "Retries per sample")
      ->capture_default_str();
  reason->add_option("--temperature", r_temperature, "Sampling temperature")
      ->capture_default_str();
  std::string r_signal;
  double r_acc_with = 0.7, r_acc_without = 0.7;
  reason->add_option("--signal-token", r_signal,
                     "Synthetic oracle: substring that switches its accuracy");
  reason->add_option("--acc-with-signal", r_acc_with,
                     "Synthetic oracle accuracy when the token is present")
      ->capture_default_str();
  reason->add_option("--acc-without-signal", r_acc_without,
                     "Synthetic oracle accuracy otherwise")
      ->capture_default_str();

  // correct
  auto* correct = app.add_subcommand(
      "correct", "Stage 2: train the corrector and score the held-out split");
  DatasetFlags c_data;
  add_dataset_flags(correct, &c_data);
  std::string c_out, c_reasoned;
  correct->add_option("--out", c_out, "Run output directory")->required();
  correct->add_option("--reasoned", c_reasoned,
                      "Reasoned JSONL (default <out>/reasoned.jsonl)");
  std::uint64_t c_seed = 0;
  correct->add_option("--seed", c_seed, "Global seed")->capture_default_str();
  double c_train_fraction = 0.8;
  correct->add_option("--train-fraction", c_train_fraction,
                      "Share of samples used for training")
      ->capture_default_str();
  double c_downsample = 0.0;
  correct->add_option("--downsample", c_downsample,
                      "Cap train majority at ratio * minority; 0 = off")
      ->capture_default_str();
  features::TfidfConfig c_tfidf;
  correct->add_option("--ngram-min", c_tfidf.ngram_min, "Smallest n-gram")
      ->capture_default_str();
  correct->add_option("--ngram-max", c_tfidf.ngram_max, "Largest n-gram")
      ->capture_default_str();
  correct->add_option("--min-df", c_tfidf.min_df,
                      "Drop terms in fewer documents")
      ->capture_default_str();
  std::optional<std::size_t> c_max_features;
  correct->add_option("--max-features", c_max_features,
                      "Keep only the most frequent terms");
  bool c_no_lowercase = false;
  correct->add_flag("--no-lowercase", c_no_lowercase, "Keep case as-is");
  corrector::TrainOptions c_train;
  std::optional<double> c_l2;
  correct->add_option("--l2", c_l2, "L2 strength (default 1/n)");
  correct->add_option("--tol", c_train.tol, "Gradient tolerance")
      ->capture_default_str();
  correct->add_option("--max-iter", c_train.max_iter, "Iteration cap")
      ->capture_default_str();
  std::vector<double> c_grid;
  correct->add_option("--grid", c_grid,
                      "Sweep thresholds (default 0.50..0.95 step 0.05)");
  std::vector<double> c_report = {0.5, 0.7};
  correct->add_option("--report-thresholds", c_report,
                      "Thresholds for the three-row tables")
      ->capture_default_str();
  CostFlags c_cost;
  c_cost.preset = "severe";
  add_cost_flags(correct, &c_cost);

  // sweep
  auto* sweep = app.add_subcommand(
      "sweep", "Re-sweep saved scores over a threshold grid");
  std::string s_scores, s_out;
  sweep->add_option("--scores", s_scores, "scores.jsonl from a correct run")
      ->required();
  sweep->add_option("--out", s_out, "Output directory")->required();
  std::vector<double> s_grid;
  sweep->add_option("--grid", s_grid, "Thresholds to evaluate");
  CostFlags s_cost;
  s_cost.preset = "severe";
  add_cost_flags(sweep, &s_cost);

  // cost
  auto* cost = app.add_subcommand("cost",
                                  "Expected cost of one operating point");
  std::string k_out;
  cost->add_option("--out", k_out, "Output directory")->required();
  CostFlags k_cost;
  add_cost_flags(cost, &k_cost);
  double k_recall = 0.0;
  std::optional<double> k_precision;
  double k_threshold = 0.0;
  cost->add_option("--recall", k_recall, "Recall at the operating point")
      ->required();
  cost->add_option("--precision", k_precision,
                   "Precision; omit when nothing was predicted positive");
  cost->add_option("--threshold", k_threshold,
                   "Label for the CSV threshold column")
      ->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Closed-form corrected accuracy beside a Monte Carlo run");
  pipeline::SimulateConfig sim;
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();
  simulate->add_option("--pi", sim.op.pi, "Stage-1 accuracy")->required();
  simulate->add_option("--tpr", sim.op.tpr, "Corrector TPR")->required();
  simulate->add_option("--tnr", sim.op.tnr, "Corrector TNR")->required();
  simulate->add_option("--n", sim.n, "Draws")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Seed")->capture_default_str();

  // heatmap
  auto* heatmap = app.add_subcommand(
      "heatmap", "Net-improvement grid over TPR x TNR");
  pipeline::HeatmapConfig hm;
  heatmap->add_option("--out", hm.out_dir, "Output directory")->required();
  heatmap->add_option("--pi", hm.pi, "Stage-1 accuracy")
      ->capture_default_str();
  heatmap->add_option("--steps", hm.steps, "Grid points per axis")
      ->capture_default_str();
  heatmap->add_flag("--svg", hm.svg, "Also render heatmap.svg");

  // tempalign
  auto* tempalign = app.add_subcommand(
      "tempalign", "Build an index-time-aligned dataset from admission "
                   "timelines");
  pipeline::TempalignConfig ta;
  tempalign->add_option("--timelines", ta.timelines_path, "Timeline JSONL")
      ->required();
  tempalign->add_option("--out", ta.out_dir, "Output directory")->required();
  tempalign->add_option("--horizon", ta.horizon_hours,
                        "Blind window before the (pseudo-)event, hours")
      ->capture_default_str();
  tempalign->add_option("--bins", ta.bins, "Histogram bins")
      ->capture_default_str();
  tempalign->add_option("--seed", ta.seed, "Global seed")
      ->capture_default_str();

  // report
  auto* report = app.add_subcommand("report",
                                    "Summarize a run directory");
  std::string rep_dir;
  report->add_option("--out", rep_dir, "Run directory to summarize")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help text or the parse error
    return code == 0 ? 0 : 2;
  }

  if (*reason) {
    pipeline::ReasonConfig cfg;
    cfg.dataset_path = r_data.path;
    cfg.load = load_options(r_data);
    cfg.out_dir = r_out;
    cfg.seed = r_seed;
    cfg.max_in_flight = r_max_in_flight;
    cfg.resume = !r_no_resume;
    cfg.prompt = reasoner::default_template(r_data.class0, r_data.class1);
    if (!r_task.empty()) cfg.prompt.task_statement = r_task;
    if (r_synthetic == !r_endpoint.empty()) {
      throw UsageError("pick exactly one oracle: --synthetic or --endpoint");
    }
    if (r_synthetic) {
      reasoner::SyntheticKnobs knobs;
      knobs.signal_token = r_signal;
      knobs.acc_with_signal = r_acc_with;
      knobs.acc_without_signal = r_acc_without;
      cfg.oracle = knobs;
    } else {
      if (r_model.empty()) throw UsageError("--endpoint needs --model");
      reasoner::OracleConfig oc;
      oc.endpoint_url = r_endpoint;
      oc.model_name = r_model;
      oc.timeout_seconds = r_timeout;
      oc.max_retries = r_retries;
      oc.temperature = r_temperature;
      cfg.oracle = oc;
    }
    const pipeline::ReasonSummary s = pipeline::cmd_reason(cfg);
    std::printf("reasoned %zu/%zu samples (%zu resumed, %zu not sure, %zu "
                "errors) -> %s\n",
                s.n_queried, s.n_total, s.n_resumed, s.n_not_sure, s.n_errors,
                r_out.c_str());
    return 0;
  }

  if (*correct) {
    pipeline::CorrectConfig cfg;
    cfg.dataset_path = c_data.path;
    cfg.load = load_options(c_data);
    cfg.reasoned_path = c_reasoned;
    cfg.out_dir = c_out;
    cfg.train_fraction = c_train_fraction;
    cfg.downsample_ratio = c_downsample;
    cfg.tfidf = c_tfidf;
    cfg.tfidf.max_features = c_max_features;
    cfg.tfidf.lowercase = !c_no_lowercase;
    cfg.train = c_train;
    cfg.train.l2_strength = c_l2;
    cfg.grid = c_grid;
    cfg.report_thresholds = c_report;
    cfg.costs = resolve_cost_flags(c_cost);
    cfg.seed = c_seed;
    const pipeline::CorrectSummary s = pipeline::cmd_correct(cfg);
    for (const auto& [P, rep] : s.reports) {
      std::printf("P = %.2f\n%s\n", P, metrics::render_text(rep).c_str());
    }
    std::printf("train balance %.3f over %zu decided rows\n",
                s.train_label_balance, s.n_train_decided);
    std::printf("P_opt_acc = %.2f, P_opt_cost = %.2f -> %s\n",
                s.sweep.p_opt_acc, s.sweep.p_opt_cost, c_out.c_str());
    return 0;
  }

  if (*sweep) {
    pipeline::SweepConfig cfg;
    cfg.scores_path = s_scores;
    cfg.out_dir = s_out;
    cfg.grid = s_grid;
    cfg.costs = resolve_cost_flags(s_cost);
    const analytics::SweepResult res = pipeline::cmd_sweep(cfg);
    std::printf("%s", analytics::sweep_csv(res.rows).c_str());
    std::printf("P_opt_acc = %.2f, P_opt_cost = %.2f\n", res.p_opt_acc,
                res.p_opt_cost);
    return 0;
  }

  if (*cost) {
    pipeline::CostConfig cfg;
    cfg.out_dir = k_out;
    cfg.costs = resolve_cost_flags(k_cost);
    if (cfg.costs.ep < 0.0) {
      throw UsageError("cost needs an explicit --ep");
    }
    cfg.recall = k_recall;
    cfg.precision = k_precision;
    cfg.threshold_label = k_threshold;
    const costmodel::CostRow row = pipeline::cmd_cost(cfg);
    std::printf("%s", costmodel::cost_csv({row}).c_str());
    return 0;
  }

  if (*simulate) {
    const pipeline::SimulateResult res = pipeline::cmd_simulate(sim);
    std::printf("closed form %.6f, monte carlo %.6f over %llu draws "
                "(|err| %.6f, 3-sigma bound %.6f)\n",
                res.closed_form, res.monte_carlo,
                static_cast<unsigned long long>(sim.n), res.abs_err,
                res.three_sigma);
    return 0;
  }

  if (*heatmap) {
    const std::size_t cells = pipeline::cmd_heatmap(hm);
    std::printf("%zu cells -> %s/heatmap.csv\n", cells, hm.out_dir.c_str());
    return 0;
  }

  if (*tempalign) {
    const pipeline::TempalignSummary s = pipeline::cmd_tempalign(ta);
    std::printf("emitted %zu of %zu admissions (%zu excluded), prevalence "
                "%.4f -> %s\n",
                s.n_emitted, s.n_admissions, s.n_excluded, s.prevalence,
                ta.out_dir.c_str());
    return 0;
  }

  if (*report) {
    std::printf("%s", pipeline::cmd_report(rep_dir).c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lpcorp::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const lpcorp::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const lpcorp::TransportError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const lpcorp::ProtocolError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
