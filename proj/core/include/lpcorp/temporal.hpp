#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpcorp/corpus.hpp"

namespace lpcorp::temporal {

struct Note {
  std::int64_t t_note = 0;  // epoch seconds
  std::string text;
};

struct AdmissionTimeline {
  std::string admission_id;
  std::int64_t t_adm = 0;
  std::int64_t t_dis = 0;
  std::optional<std::int64_t> t_event;  // first event time, positives only
  std::vector<Note> notes;
};

// Prediction horizon before the (pseudo-)event.
struct HorizonConfig {
  double hours = 6.0;

  std::int64_t seconds() const;  // throws UsageError unless hours > 0
};

// JSONL, one admission per line with ISO-8601 timestamps:
// {"admission_id":..,"t_adm":..,"t_dis":..,"t_event":..,
//  "notes":[{"t_note":..,"text":..},..]}
// Validates timestamp ordering, note windows and id uniqueness; errors
// carry the line number.
std::vector<AdmissionTimeline> load_timelines(const std::string& path);

// Exclusion reasons as they appear in run reports.
inline constexpr const char* kNoPreEventWindow =
    "insufficient pre-event window";
inline constexpr const char* kNoFeasibleOffset = "no feasible pseudo-offset";
inline constexpr const char* kNoNotesInWindow = "no notes before index time";

// t_event - h, or nullopt when that would land before admission. Throws
// DataError when the admission has no event.
std::optional<std::int64_t> positive_index_time(const AdmissionTimeline& a,
                                                const HorizonConfig& h);

// Observed times from admission to event, duplicates kept.
struct OffsetDistribution {
  std::vector<std::int64_t> offsets;  // seconds
};

// Throws DataError on empty input or an admission without an event. Every
// positive contributes, even ones too short to index themselves; the
// feasibility cut happens at sampling time.
OffsetDistribution collect_offsets(
    const std::vector<AdmissionTimeline>& positives);

// Draws the pseudo-event offset uniformly from the positive offsets that
// fit this stay (offset <= LOS - h) and returns t_adm + offset, so the
// index always leaves a full horizon before discharge. The stream is keyed
// by (seed, admission_id): admissions never perturb each other's draws.
// Returns nullopt when no positive offset fits; throws DataError when the
// admission has an event.
std::optional<std::int64_t> sample_pseudo_event(const AdmissionTimeline& a,
                                                const OffsetDistribution& dist,
                                                const HorizonConfig& h,
                                                std::uint64_t seed);

// Chronological newline-joined text of every note with t_note <= t_index
// (closed interval). Returns an empty string when nothing qualifies; the
// cohort builder turns that into an exclusion. Throws DataError when
// t_index lies outside the stay.
std::string clip_notes(const AdmissionTimeline& a, std::int64_t t_index);

struct Exclusion {
  std::string admission_id;
  std::string reason;
};

struct BuildResult {
  corpus::Dataset dataset;  // id = admission_id, label 1 = event
  std::vector<Exclusion> exclusions;
  OffsetDistribution pos_offsets;
  OffsetDistribution neg_sampled;  // pseudo offsets actually used
};

// Full alignment pass: index positives at t_event - h, give negatives a
// pseudo index matching the positive offset distribution, clip notes to
// the index, and drop admissions that cannot be indexed or have no notes
// in window. Sample meta records the index time.
BuildResult build_cohort(const std::vector<AdmissionTimeline>& admissions,
                         const HorizonConfig& h, std::uint64_t seed);

struct DistributionExport {
  // bin_lo_hours,bin_hi_hours,pos_freq[,neg_freq]: shared equal-width bins,
  // frequencies sum to 1 per distribution.
  std::string histogram_csv;
  // hours,pos_density[,neg_density]: Gaussian KDE, Silverman bandwidth,
  // 200 shared grid points padded 4 bandwidths past the data.
  std::string kde_csv;
};

// neg may be null for a positives-only export. Throws UsageError when
// bins < 2 and DataError on an empty distribution.
DistributionExport export_distributions(const OffsetDistribution& pos,
                                        const OffsetDistribution* neg,
                                        int bins);

}  // namespace lpcorp::temporal
