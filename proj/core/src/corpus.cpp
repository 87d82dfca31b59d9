#include "lpcorp/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lpcorp/csv.hpp"
#include "lpcorp/errors.hpp"
#include "lpcorp/rng.hpp"
#include "lpcorp/text.hpp"

namespace lpcorp::corpus {

namespace {

using nlohmann::json;

int parse_label(const std::string& raw, const LoadOptions& opts) {
  if (raw == "0" || raw == opts.class0_name) return 0;
  if (raw == "1" || raw == opts.class1_name) return 1;
  return -1;
}

void add_sample(Dataset* ds, std::unordered_set<std::string>* seen,
                Sample&& s, std::size_t line_no, std::size_t* rejected) {
  if (s.id.empty()) {
    throw DataError("line " + std::to_string(line_no) + ": empty id");
  }
  if (!seen->insert(s.id).second) {
    throw DataError("line " + std::to_string(line_no) + ": duplicate id \"" +
                    s.id + "\"");
  }
  if (text::is_blank(s.text)) {
    ++*rejected;
    return;
  }
  ds->samples.push_back(std::move(s));
}

LoadReport load_jsonl(std::istream& in, const LoadOptions& opts) {
  LoadReport report;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    text::utf8_require_valid(line, "line " + std::to_string(line_no));
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": record is not a JSON object");
    }
    Sample s;
    if (rec.contains("id")) {
      if (rec["id"].is_string()) s.id = rec["id"].get<std::string>();
      else if (rec["id"].is_number_integer())
        s.id = std::to_string(rec["id"].get<std::int64_t>());
    }
    if (s.id.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": missing id");
    }
    if (!rec.contains("text") || !rec["text"].is_string()) {
      throw DataError("line " + std::to_string(line_no) + ": record \"" +
                      s.id + "\" has no text field");
    }
    s.text = rec["text"].get<std::string>();
    if (!rec.contains("label")) {
      throw DataError("line " + std::to_string(line_no) + ": record \"" +
                      s.id + "\" has no label field");
    }
    std::string raw_label;
    if (rec["label"].is_string()) raw_label = rec["label"].get<std::string>();
    else if (rec["label"].is_number_integer())
      raw_label = std::to_string(rec["label"].get<std::int64_t>());
    const int label = parse_label(raw_label, opts);
    if (label < 0) {
      throw DataError("line " + std::to_string(line_no) +
                      ": unparseable label \"" + raw_label + "\"");
    }
    s.label = label;
    if (rec.contains("meta") && rec["meta"].is_object()) {
      for (const auto& [k, v] : rec["meta"].items()) {
        s.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    add_sample(&report.dataset, &seen, std::move(s), line_no,
               &report.rejected_empty_text);
  }
  return report;
}

LoadReport load_csv(std::istream& in, const LoadOptions& opts) {
  LoadReport report;
  std::unordered_set<std::string> seen;
  csv::Reader reader(in);
  std::vector<std::string> row;
  std::size_t line_no = 0;
  if (!reader.next_record(&row, &line_no)) {
    throw DataError("csv: missing header row");
  }
  std::size_t id_col = text::npos, text_col = text::npos,
              label_col = text::npos;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] == "id") id_col = i;
    else if (row[i] == "text") text_col = i;
    else if (row[i] == "label") label_col = i;
  }
  if (id_col == text::npos || text_col == text::npos ||
      label_col == text::npos) {
    throw DataError("csv: header must name id, text and label columns");
  }
  const std::vector<std::string> header = row;
  while (reader.next_record(&row, &line_no)) {
    if (row.size() == 1 && row[0].empty()) continue;  // trailing blank line
    if (row.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(row.size()));
    }
    for (const auto& field : row) {
      text::utf8_require_valid(field, "line " + std::to_string(line_no));
    }
    Sample s;
    s.id = row[id_col];
    s.text = row[text_col];
    const int label = parse_label(row[label_col], opts);
    if (label < 0) {
      throw DataError("line " + std::to_string(line_no) +
                      ": unparseable label \"" + row[label_col] + "\"");
    }
    s.label = label;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i != id_col && i != text_col && i != label_col) {
        s.meta[header[i]] = row[i];
      }
    }
    add_sample(&report.dataset, &seen, std::move(s), line_no,
               &report.rejected_empty_text);
  }
  return report;
}

}  // namespace

LoadReport load_dataset(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  LoadReport report = opts.format == Format::kJsonl ? load_jsonl(in, opts)
                                                    : load_csv(in, opts);
  report.dataset.class0_name = opts.class0_name;
  report.dataset.class1_name = opts.class1_name;
  return report;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng* rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
    std::swap(idx[i - 1], idx[rng->below(i)]);
  }
  return idx;
}

}  // namespace

Split split(const Dataset& ds, const SplitSpec& spec) {
  if (ds.empty()) throw DataError("split: empty dataset");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw UsageError("split: train_fraction must be in (0,1)");
  }
  const std::size_t n = ds.size();
  const auto target = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));

  Rng rng(derive_seed(spec.seed, "split"));
  std::vector<bool> in_train(n, false);

  bool grouped = false;
  for (const auto& s : ds.samples) {
    if (s.meta.count("group_id")) {
      grouped = true;
      break;
    }
  }

  if (!grouped) {
    const auto order = shuffled_indices(n, &rng);
    for (std::size_t i = 0; i < target; ++i) in_train[order[i]] = true;
  } else {
    // Whole groups go to one side so grouped samples cannot leak across
    // the split. Ungrouped samples form singleton groups keyed by id.
    std::vector<std::string> group_keys;
    std::unordered_map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = ds.samples[i];
      const auto it = s.meta.find("group_id");
      const std::string key =
          it != s.meta.end() ? "g:" + it->second : "s:" + s.id;
      auto [mit, inserted] = members.try_emplace(key);
      if (inserted) group_keys.push_back(key);
      mit->second.push_back(i);
    }
    const auto order = shuffled_indices(group_keys.size(), &rng);
    std::size_t assigned = 0;
    for (const std::size_t gi : order) {
      if (assigned >= target) break;
      for (const std::size_t i : members[group_keys[gi]]) {
        in_train[i] = true;
      }
      assigned += members[group_keys[gi]].size();
    }
  }

  Split out;
  out.train.class0_name = out.test.class0_name = ds.class0_name;
  out.train.class1_name = out.test.class1_name = ds.class1_name;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? out.train : out.test).samples.push_back(ds.samples[i]);
  }
  if (out.train.empty() || out.test.empty()) {
    throw DataError("split: a side is empty (n=" + std::to_string(n) +
                    ", fraction=" + std::to_string(spec.train_fraction) + ")");
  }
  return out;
}

double prevalence(const Dataset& ds) {
  if (ds.empty()) throw DataError("prevalence: empty dataset");
  std::size_t positives = 0;
  for (const auto& s : ds.samples) positives += s.label == 1;
  return static_cast<double>(positives) / static_cast<double>(ds.size());
}

DownsampleResult downsample_majority(const Dataset& ds, double ratio,
                                     std::uint64_t seed) {
  if (ratio < 1.0) {
    throw UsageError("downsample_majority: ratio must be >= 1");
  }
  std::size_t positives = 0;
  for (const auto& s : ds.samples) positives += s.label == 1;
  const std::size_t negatives = ds.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("downsample_majority: dataset must contain both classes");
  }
  const int majority_label = negatives >= positives ? 0 : 1;
  const std::size_t minority_count = std::min(positives, negatives);
  const std::size_t majority_count = std::max(positives, negatives);

  auto want = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(minority_count)));
  DownsampleResult out;
  if (want >= majority_count) {
    out.majority_exhausted = want > majority_count;
    want = majority_count;
  }

  std::vector<std::size_t> majority_idx;
  majority_idx.reserve(majority_count);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.samples[i].label == majority_label) majority_idx.push_back(i);
  }
  Rng rng(derive_seed(seed, "downsample"));
  for (std::size_t i = majority_idx.size(); i > 1; --i) {
    std::swap(majority_idx[i - 1], majority_idx[rng.below(i)]);
  }
  majority_idx.resize(want);
  std::sort(majority_idx.begin(), majority_idx.end());

  out.dataset.class0_name = ds.class0_name;
  out.dataset.class1_name = ds.class1_name;
  std::size_t next_majority = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.samples[i].label != majority_label) {
      out.dataset.samples.push_back(ds.samples[i]);
    } else if (next_majority < majority_idx.size() &&
               majority_idx[next_majority] == i) {
      out.dataset.samples.push_back(ds.samples[i]);
      ++next_majority;
    }
  }
  return out;
}

}  // namespace lpcorp::corpus
