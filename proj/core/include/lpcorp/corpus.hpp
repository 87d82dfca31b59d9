#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lpcorp::corpus {

// One narrative with its binary ground truth. Label 1 is always the rare
// (positive) event.
struct Sample {
  std::string id;
  std::string text;
  int label = 0;  // 0 or 1
  std::map<std::string, std::string> meta;
};

struct Dataset {
  std::vector<Sample> samples;
  std::string class0_name = "0";
  std::string class1_name = "1";

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

enum class Format { kJsonl, kCsv };

struct LoadOptions {
  Format format = Format::kJsonl;
  // Labels parse from "0"/"1" and, when set, from these display strings.
  std::string class0_name = "0";
  std::string class1_name = "1";
};

struct LoadReport {
  Dataset dataset;
  // Records dropped for empty-after-trim text, surfaced as a warning count.
  std::size_t rejected_empty_text = 0;
};

// Reads JSONL ({id, text, label, meta?} per line) or headered CSV
// (id,text,label columns required; extra columns land in meta).
// Throws DataError naming the offending line on duplicate ids, unparseable
// labels, or invalid UTF-8.
LoadReport load_dataset(const std::string& path, const LoadOptions& opts);

struct SplitSpec {
  double train_fraction = 0.8;  // in (0,1)
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
};

// Deterministic seeded partition. Train size is round-half-up of
// fraction * N. If any sample carries meta["group_id"], whole groups are
// assigned to one side and the train size becomes the closest achievable.
Split split(const Dataset& ds, const SplitSpec& spec);

// count(label == 1) / count(all). Throws DataError on an empty dataset.
double prevalence(const Dataset& ds);

struct DownsampleResult {
  Dataset dataset;
  // Set when the requested ratio exceeded the available majority count.
  bool majority_exhausted = false;
};

// Keeps every minority sample and a uniform without-replacement subsample
// of floor(ratio * minority_count) majority samples, in original order.
DownsampleResult downsample_majority(const Dataset& ds, double ratio,
                                     std::uint64_t seed);

}  // namespace lpcorp::corpus
