#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lpcorp/corpus.hpp"
#include "lpcorp/temporal.hpp"

namespace testsupport {

// Unique scratch directory, removed with everything in it on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const;

private:
  std::filesystem::path path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Synthetic narratives at a given event prevalence. Positive texts carry
// signal_token when it is nonempty; all texts are filler prose otherwise.
lpcorp::corpus::Dataset make_event_dataset(std::size_t n, double prevalence,
                                           const std::string& signal_token,
                                           std::uint64_t seed);

void write_dataset_jsonl(const lpcorp::corpus::Dataset& ds,
                         const std::string& path);

// Admission generator for the alignment tests. Positive offsets are drawn
// continuously in [min_offset_hours, max_offset_hours] (ties almost never);
// negatives share one ample length of stay so every offset is feasible by
// default. Every admission gets a note at t_adm, so nothing is excluded for
// lack of early notes.
struct CohortSpec {
  std::size_t n_pos = 50;
  std::size_t n_neg = 200;
  double min_offset_hours = 8.0;
  double max_offset_hours = 150.0;
  double pos_post_event_hours = 12.0;  // discharge lag after the event
  double neg_los_hours = 250.0;
  int notes_per_admission = 3;
  std::uint64_t seed = 1;
};

std::vector<lpcorp::temporal::AdmissionTimeline> make_cohort(
    const CohortSpec& spec);

void write_timelines_jsonl(
    const std::vector<lpcorp::temporal::AdmissionTimeline>& admissions,
    const std::string& path);

// Regularized upper incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);

// Survival p-value of a chi-square statistic.
double chi_square_pvalue(double stat, int dof);

}  // namespace testsupport
