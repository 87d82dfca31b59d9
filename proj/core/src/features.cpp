#include "lpcorp/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lpcorp/errors.hpp"
#include "lpcorp/rng.hpp"
#include "lpcorp/text.hpp"
#include "lpcorp/version.hpp"

namespace lpcorp::features {

namespace {

// ASCII words are letters, digits and underscore. Outside ASCII every
// codepoint counts as a word character except the common whitespace and
// punctuation blocks, so accented words survive without a Unicode table.
bool is_word_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'0' && cp <= U'9') || (cp >= U'A' && cp <= U'Z') ||
           (cp >= U'a' && cp <= U'z') || cp == U'_';
  }
  switch (cp) {
    case 0x0085:  // next line
    case 0x00A0:  // no-break space
    case 0x1680:  // ogham space
    case 0x2028:  // line separator
    case 0x2029:  // paragraph separator
      return false;
    default:
      break;
  }
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x2E00 && cp <= 0x2E7F) return false;  // supplemental punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // cjk punctuation
  return true;
}

void validate_config(const TfidfConfig& cfg) {
  if (cfg.ngram_min < 1) throw UsageError("ngram_min must be at least 1");
  if (cfg.ngram_max < cfg.ngram_min) {
    throw UsageError("ngram_max must not be smaller than ngram_min");
  }
  if (cfg.min_df < 1) throw UsageError("min_df must be at least 1");
  if (cfg.max_features && *cfg.max_features == 0) {
    throw UsageError("max_features must be positive when set");
  }
}

// Calls fn(term) for every n-gram of the document. Windows never cross a
// line break, so a trailing unigram on one line and a leading one on the
// next stay unrelated.
template <typename Fn>
void for_each_ngram(std::string_view doc, const TfidfConfig& cfg, Fn&& fn) {
  const std::size_t nmin = static_cast<std::size_t>(cfg.ngram_min);
  const std::size_t nmax = static_cast<std::size_t>(cfg.ngram_max);
  std::string term;
  for (std::string_view line : text::split_lines(doc)) {
    const std::vector<std::string> toks = tokenize(line, cfg.lowercase);
    for (std::size_t n = nmin; n <= nmax && n <= toks.size(); ++n) {
      for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        term.clear();
        for (std::size_t k = 0; k < n; ++k) {
          if (k) term.push_back(' ');
          term += toks[i + k];
        }
        fn(term);
      }
    }
  }
}

std::unordered_map<std::string, std::size_t> term_counts(
    std::string_view doc, const TfidfConfig& cfg) {
  std::unordered_map<std::string, std::size_t> counts;
  for_each_ngram(doc, cfg, [&](const std::string& t) { ++counts[t]; });
  return counts;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw, bool lowercase) {
  std::vector<std::string> out;
  const std::vector<char32_t> cps = text::utf8_decode(raw);
  std::vector<char32_t> run;
  auto flush = [&] {
    if (run.size() >= 2) out.push_back(text::utf8_encode(run));
    run.clear();
  };
  for (char32_t cp : cps) {
    if (is_word_cp(cp)) {
      if (lowercase && cp >= U'A' && cp <= U'Z') cp += 0x20;
      run.push_back(cp);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

TfidfModel fit(const std::vector<std::string>& train_docs,
               const TfidfConfig& cfg) {
  validate_config(cfg);
  if (train_docs.empty()) {
    throw DataError("tf-idf fit needs at least one document");
  }

  std::unordered_map<std::string, std::size_t> df;
  std::unordered_set<std::string> seen;
  for (const std::string& doc : train_docs) {
    seen.clear();
    for_each_ngram(doc, cfg, [&](const std::string& t) {
      if (seen.insert(t).second) ++df[t];
    });
  }

  std::vector<std::pair<std::string, std::size_t>> kept;
  kept.reserve(df.size());
  for (auto& [term, count] : df) {
    if (count >= static_cast<std::size_t>(cfg.min_df)) {
      kept.emplace_back(term, count);
    }
  }
  if (cfg.max_features && kept.size() > *cfg.max_features) {
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    kept.resize(*cfg.max_features);
  }
  std::sort(kept.begin(), kept.end());
  if (kept.empty()) {
    throw DataError("tf-idf vocabulary is empty; lower min_df or check input");
  }

  TfidfModel model;
  model.config = cfg;
  model.terms.reserve(kept.size());
  model.idf.reserve(kept.size());
  const double n_docs = static_cast<double>(train_docs.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    model.terms.push_back(kept[i].first);
    const double d = static_cast<double>(kept[i].second);
    model.idf.push_back(std::log((1.0 + n_docs) / (1.0 + d)) + 1.0);
    model.vocabulary.emplace(kept[i].first, static_cast<std::uint32_t>(i));
  }
  return model;
}

FeatureVector transform(const TfidfModel& model, std::string_view doc) {
  FeatureVector v;
  v.dimension = model.dimension();
  for (const auto& [term, count] : term_counts(doc, model.config)) {
    const auto it = model.vocabulary.find(term);
    if (it == model.vocabulary.end()) continue;
    v.entries.emplace_back(it->second,
                           static_cast<double>(count) * model.idf[it->second]);
  }
  std::sort(v.entries.begin(), v.entries.end());
  double ss = 0.0;
  for (const auto& [col, val] : v.entries) ss += val * val;
  if (ss > 0.0) {
    const double inv = 1.0 / std::sqrt(ss);
    for (auto& [col, val] : v.entries) val *= inv;
  }
  return v;
}

std::string compose_document(const corpus::Sample& s,
                             const reasoner::ReasonedSample& r) {
  if (s.id != r.sample_id) {
    throw DataError("cannot compose document: narrative id \"" + s.id +
                    "\" does not match reasoning id \"" + r.sample_id + "\"");
  }
  std::string doc;
  doc.reserve(s.text.size() + 1 + r.reasoning.size());
  doc += s.text;
  doc.push_back('\n');
  doc += r.reasoning;
  return doc;
}

void save_model(const TfidfModel& model, const std::string& path) {
  nlohmann::json j;
  j["kind"] = "tfidf";
  j["file_version"] = kTfidfFileVersion;
  j["config"] = {
      {"ngram_min", model.config.ngram_min},
      {"ngram_max", model.config.ngram_max},
      {"min_df", model.config.min_df},
      {"lowercase", model.config.lowercase},
  };
  if (model.config.max_features) {
    j["config"]["max_features"] = *model.config.max_features;
  } else {
    j["config"]["max_features"] = nullptr;
  }
  j["terms"] = model.terms;
  j["idf"] = model.idf;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed while writing " + path);
}

TfidfModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": not a valid vectorizer file: " + e.what());
  }

  try {
    if (j.value("kind", "") != "tfidf") {
      throw DataError(path + ": not a tf-idf vectorizer file");
    }
    const int ver = j.at("file_version").get<int>();
    if (ver != kTfidfFileVersion) {
      throw DataError(path + ": vectorizer file version " +
                      std::to_string(ver) + " is not supported (expected " +
                      std::to_string(kTfidfFileVersion) + ")");
    }
    TfidfModel model;
    const auto& c = j.at("config");
    model.config.ngram_min = c.at("ngram_min").get<int>();
    model.config.ngram_max = c.at("ngram_max").get<int>();
    model.config.min_df = c.at("min_df").get<int>();
    model.config.lowercase = c.at("lowercase").get<bool>();
    if (!c.at("max_features").is_null()) {
      model.config.max_features = c.at("max_features").get<std::size_t>();
    }
    model.terms = j.at("terms").get<std::vector<std::string>>();
    model.idf = j.at("idf").get<std::vector<double>>();
    if (model.terms.size() != model.idf.size()) {
      throw DataError(path + ": terms and idf arrays disagree in length");
    }
    if (model.terms.empty()) {
      throw DataError(path + ": vectorizer has an empty vocabulary");
    }
    model.vocabulary.reserve(model.terms.size());
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
      if (!model.vocabulary
               .emplace(model.terms[i], static_cast<std::uint32_t>(i))
               .second) {
        throw DataError(path + ": duplicate term \"" + model.terms[i] + "\"");
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed vectorizer file: " + e.what());
  }
}

std::string fingerprint(const TfidfModel& model) {
  std::uint64_t h = kFnvOffset64;
  for (const std::string& t : model.terms) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\n"), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lpcorp::features
