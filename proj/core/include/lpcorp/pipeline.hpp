#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpcorp/analytics.hpp"
#include "lpcorp/corpus.hpp"
#include "lpcorp/corrector.hpp"
#include "lpcorp/costmodel.hpp"
#include "lpcorp/features.hpp"
#include "lpcorp/metrics.hpp"
#include "lpcorp/reasoner.hpp"
#include "lpcorp/temporal.hpp"

namespace lpcorp::pipeline {

// Holds the output directory for the duration of a command. Creating the
// lock is atomic; a second run against the same directory fails fast.
class DirLock {
public:
  explicit DirLock(const std::string& out_dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

private:
  std::string path_;
};

// Stage-1 run: load the dataset, query the oracle, append one JSONL row
// per sample. Rows already present in the output are not re-queried.
struct ReasonConfig {
  std::string dataset_path;
  corpus::LoadOptions load;
  std::string out_dir;
  reasoner::OracleSpec oracle;
  reasoner::PromptTemplate prompt;
  int max_in_flight = 4;
  std::uint64_t seed = 0;
  bool resume = true;
};

struct ReasonSummary {
  std::size_t n_total = 0;
  std::size_t n_queried = 0;  // oracle calls made this run
  std::size_t n_resumed = 0;  // rows already on disk
  std::size_t n_not_sure = 0;
  std::size_t n_errors = 0;
};

ReasonSummary cmd_reason(const ReasonConfig& cfg);

// Stage-2 run: split, fit TF-IDF and the correction model on the train
// side only, score the test side, emit metrics at the report thresholds
// plus the full sweep and cost tables.
struct CorrectConfig {
  std::string dataset_path;
  corpus::LoadOptions load;
  std::string reasoned_path;  // defaults to <out_dir>/reasoned.jsonl
  std::string out_dir;
  double train_fraction = 0.8;
  double downsample_ratio = 0.0;  // majority:minority cap for the train side; 0 = off
  features::TfidfConfig tfidf;
  corrector::TrainOptions train;
  std::vector<double> grid;                      // empty = default_grid()
  std::vector<double> report_thresholds = {0.5, 0.7};
  // ep < 0 means "use the empirical event prevalence of the eval split".
  costmodel::CostParams costs{-1.0, 50000.0, 1000.0, 0.7};
  std::uint64_t seed = 0;
};

struct CorrectSummary {
  std::size_t n_train = 0;
  std::size_t n_train_decided = 0;
  std::size_t n_eval = 0;
  std::size_t n_eval_excluded = 0;
  double train_label_balance = 0.0;  // fraction of s=1 among decided train rows
  double stage1_accuracy = 0.0;
  // Three-row reports keyed by report threshold, in config order.
  std::vector<std::pair<double, metrics::ThreeRowReport>> reports;
  analytics::SweepResult sweep;
};

CorrectSummary cmd_correct(const CorrectConfig& cfg);

// Re-sweeps previously written scores without retraining.
struct SweepConfig {
  std::string scores_path;
  std::string out_dir;
  std::vector<double> grid;  // empty = default_grid()
  costmodel::CostParams costs{-1.0, 50000.0, 1000.0, 0.7};
};

analytics::SweepResult cmd_sweep(const SweepConfig& cfg);

// One operating point through the cost model; row lands in cost.csv.
struct CostConfig {
  std::string out_dir;
  costmodel::CostParams costs;
  double recall = 0.0;
  std::optional<double> precision;
  double threshold_label = 0.0;  // carried into the CSV threshold column
};

costmodel::CostRow cmd_cost(const CostConfig& cfg);

// Closed form beside a Monte Carlo estimate at one operating point.
struct SimulateConfig {
  std::string out_dir;
  analytics::OperatingPoint op;
  std::uint64_t n = 1000000;
  std::uint64_t seed = 0;
};

struct SimulateResult {
  double closed_form = 0.0;
  double monte_carlo = 0.0;
  double abs_err = 0.0;
  double three_sigma = 0.0;
};

SimulateResult cmd_simulate(const SimulateConfig& cfg);

struct HeatmapConfig {
  std::string out_dir;
  double pi = 0.7;
  int steps = 21;  // per axis
  bool svg = false;
};

std::size_t cmd_heatmap(const HeatmapConfig& cfg);  // returns cell count

// Timeline JSONL in, aligned sample JSONL plus exclusion report and
// distribution CSVs out.
struct TempalignConfig {
  std::string timelines_path;
  std::string out_dir;
  double horizon_hours = 6.0;
  int bins = 30;
  std::uint64_t seed = 0;
};

struct TempalignSummary {
  std::size_t n_admissions = 0;
  std::size_t n_emitted = 0;
  std::size_t n_excluded = 0;
  double prevalence = 0.0;
};

TempalignSummary cmd_tempalign(const TempalignConfig& cfg);

// Collects manifests and reports from a run directory into one text blob
// (also written to report.txt).
std::string cmd_report(const std::string& out_dir);

}  // namespace lpcorp::pipeline
