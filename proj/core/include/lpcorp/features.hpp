#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lpcorp/corpus.hpp"
#include "lpcorp/reasoner.hpp"

namespace lpcorp::features {

struct TfidfConfig {
  int ngram_min = 1;
  int ngram_max = 4;
  int min_df = 1;
  std::optional<std::size_t> max_features;
  bool lowercase = true;
};

// Word n-gram TF-IDF with the variant pinned as: tokens are maximal runs of
// two or more word characters, raw term counts, idf(t) = ln((1+N)/(1+df)) + 1,
// L2-normalized rows. N-grams do not span line breaks, so the newline that
// joins narrative and reasoning in a composed document never produces a
// feature coupling the two.
struct TfidfModel {
  TfidfConfig config;
  std::vector<std::string> terms;  // index-ordered, lexicographic
  std::vector<double> idf;         // aligned with terms
  std::unordered_map<std::string, std::uint32_t> vocabulary;

  std::size_t dimension() const { return terms.size(); }
};

// Sparse row vector; entries sorted by column, unit L2 norm unless empty.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::size_t dimension = 0;

  double dot_dense(const std::vector<double>& w) const {
    double z = 0.0;
    for (const auto& [col, v] : entries) z += w[col] * v;
    return z;
  }
};

// Maximal runs of >=2 word characters (letters, digits, underscore; ASCII
// fold when lowercasing). Order preserved; empty text gives an empty list.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

// Throws DataError when the resulting vocabulary would be empty.
TfidfModel fit(const std::vector<std::string>& train_docs,
               const TfidfConfig& cfg);

FeatureVector transform(const TfidfModel& model, std::string_view doc);

// Narrative and Stage-1 reasoning joined by a single newline.
// Throws DataError when ids disagree.
std::string compose_document(const corpus::Sample& s,
                             const reasoner::ReasonedSample& r);

void save_model(const TfidfModel& model, const std::string& path);
TfidfModel load_model(const std::string& path);

// FNV-1a over the ordered vocabulary; binds a correction model to the
// vectorizer it was trained with.
std::string fingerprint(const TfidfModel& model);

}  // namespace lpcorp::features
