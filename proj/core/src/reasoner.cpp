#include "lpcorp/reasoner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iterator>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lpcorp/errors.hpp"
#include "lpcorp/rng.hpp"
#include "lpcorp/text.hpp"

namespace lpcorp::reasoner {

using nlohmann::json;

std::string conclusion_token(Conclusion c) {
  switch (c) {
    case Conclusion::kClass0: return "class0";
    case Conclusion::kClass1: return "class1";
    case Conclusion::kNotSure: return "not_sure";
  }
  return "not_sure";
}

Conclusion conclusion_from_token(const std::string& token) {
  if (token == "class0") return Conclusion::kClass0;
  if (token == "class1") return Conclusion::kClass1;
  if (token == "not_sure") return Conclusion::kNotSure;
  throw DataError("unknown conclusion token \"" + token + "\"");
}

Conclusion conclusion_for_label(int label) {
  return label == 1 ? Conclusion::kClass1 : Conclusion::kClass0;
}

Conclusion flip(Conclusion c) {
  switch (c) {
    case Conclusion::kClass0: return Conclusion::kClass1;
    case Conclusion::kClass1: return Conclusion::kClass0;
    case Conclusion::kNotSure: return Conclusion::kNotSure;
  }
  return c;
}

PromptTemplate default_template(const std::string& class0_name,
                                const std::string& class1_name) {
  PromptTemplate tpl;
  tpl.task_statement =
      "Task:\n"
      "Predict which outcome the narrative below will lead to.\n"
      "\n"
      "Notes:\n"
      "{text}";
  tpl.instruction_block =
      "Instructions:\n"
      "1. Identify key details in the notes.\n"
      "2. Use structured reasoning: for each relevant factor, explain how it "
      "supports outcome \"{class0}\" or \"{class1}\".";
  tpl.class0_name = class0_name;
  tpl.class1_name = class1_name;
  return tpl;
}

namespace {

// Substitutes {text}/{class0}/{class1}/{not_sure}; counts {text} uses.
std::string substitute(const std::string& tpl_text, const PromptTemplate& tpl,
                       const std::string& narrative, int* text_uses) {
  std::string out;
  out.reserve(tpl_text.size() + narrative.size());
  std::size_t i = 0;
  while (i < tpl_text.size()) {
    const char c = tpl_text[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    const auto close = tpl_text.find('}', i);
    if (close == std::string::npos) {
      throw UsageError("prompt template: unmatched '{'");
    }
    const std::string key = tpl_text.substr(i + 1, close - i - 1);
    if (key == "text") {
      out += narrative;
      ++*text_uses;
    } else if (key == "class0") {
      out += tpl.class0_name;
    } else if (key == "class1") {
      out += tpl.class1_name;
    } else if (key == "not_sure") {
      out += tpl.not_sure_name;
    } else {
      throw UsageError("prompt template: unresolved placeholder {" + key +
                       "}");
    }
    i = close + 1;
  }
  return out;
}

}  // namespace

std::string render_prompt(const PromptTemplate& tpl, const corpus::Sample& s) {
  if (tpl.class0_name.empty() || tpl.class1_name.empty() ||
      tpl.not_sure_name.empty()) {
    throw UsageError("prompt template: answer strings must be nonempty");
  }
  int text_uses = 0;
  std::string body = substitute(tpl.task_statement, tpl, s.text, &text_uses);
  if (!tpl.instruction_block.empty()) {
    body += "\n\n";
    body += substitute(tpl.instruction_block, tpl, s.text, &text_uses);
  }
  if (text_uses != 1) {
    throw UsageError("prompt template: {text} must appear exactly once (" +
                     std::to_string(text_uses) + " uses)");
  }
  body += "\n\nFinal Answer:\nReturn exactly one line:\n\n";
  body += tpl.class0_name + ", " + tpl.class1_name + ", or " +
          tpl.not_sure_name + ".";
  return body;
}

namespace {

// Occurrences of shorter answer strings that lie entirely inside an
// occurrence of a longer one do not count, so nested names (e.g. one class
// name embedding the other) stay parseable.
int names_present(std::string_view line, const std::string& a,
                  const std::string& b, const std::string& c,
                  int* which) {
  struct Name {
    const std::string* s;
    int id;
  };
  std::vector<Name> names{{&a, 0}, {&b, 1}, {&c, 2}};
  std::sort(names.begin(), names.end(), [](const Name& x, const Name& y) {
    return x.s->size() > y.s->size();
  });
  std::vector<std::pair<std::size_t, std::size_t>> covered;
  int count = 0;
  for (const auto& name : names) {
    std::size_t from = 0;
    bool found_free = false;
    while (true) {
      const std::size_t at = text::find_ci(line, *name.s, from);
      if (at == text::npos) break;
      const std::size_t end = at + name.s->size();
      bool inside = false;
      for (const auto& [lo, hi] : covered) {
        if (at >= lo && end <= hi) {
          inside = true;
          break;
        }
      }
      if (!inside) {
        found_free = true;
        covered.emplace_back(at, end);
      }
      from = at + 1;
    }
    if (found_free) {
      ++count;
      *which = name.id;
    }
  }
  return count;
}

}  // namespace

std::pair<std::string, Conclusion> parse_conclusion(const std::string& raw,
                                                    const PromptTemplate& tpl) {
  const auto lines = text::split_lines(raw);
  struct Candidate {
    std::string_view line;
    std::size_t index;
  };
  std::vector<Candidate> last_nonempty;
  for (std::size_t i = lines.size(); i > 0 && last_nonempty.size() < 5; --i) {
    if (!text::is_blank(lines[i - 1])) {
      last_nonempty.push_back({lines[i - 1], i - 1});
    }
  }
  for (const auto& cand : last_nonempty) {
    int which = -1;
    if (names_present(cand.line, tpl.class0_name, tpl.class1_name,
                      tpl.not_sure_name, &which) == 1) {
      // Reasoning is everything preceding the conclusion line.
      std::string reasoning;
      for (std::size_t i = 0; i < cand.index; ++i) {
        if (i) reasoning.push_back('\n');
        reasoning += std::string(lines[i]);
      }
      reasoning = std::string(text::trim(reasoning));
      const Conclusion c = which == 0   ? Conclusion::kClass0
                           : which == 1 ? Conclusion::kClass1
                                        : Conclusion::kNotSure;
      return {std::move(reasoning), c};
    }
  }
  return {std::string(text::trim(raw)), Conclusion::kNotSure};
}

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // begins with '/'
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw UsageError("endpoint_url must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string query_oracle(const OracleConfig& cfg, const std::string& prompt,
                         AuditEntry* audit) {
  if (cfg.timeout_seconds <= 0.0) {
    throw UsageError("oracle timeout must be positive");
  }
  if (cfg.max_retries < 0) {
    throw UsageError("oracle max_retries must be >= 0");
  }
  const ParsedUrl url = parse_url(cfg.endpoint_url);

  json request = {
      {"model", cfg.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg.temperature},
  };
  const std::string body = request.dump();
  if (audit) audit->request_body = body;

  httplib::Headers headers;
  if (const char* key = std::getenv("LPCORP_API_KEY"); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_failure;
  const int attempts_allowed = cfg.max_retries + 1;
  for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
    if (audit) audit->attempts = attempt;
    if (attempt > 1) {
      const int backoff_ms = std::min(2000, 100 << (attempt - 2));
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
    }
    httplib::Client client(url.base);
    const auto timeout =
        std::chrono::duration<double>(cfg.timeout_seconds);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (audit) {
      audit->status = res->status;
      audit->response_body = res->body;
    }
    if (res->status >= 500) {
      last_failure = "server status " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProtocolError("endpoint returned status " +
                          std::to_string(res->status));
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::parse_error&) {
      throw ProtocolError("endpoint body is not JSON");
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty() ||
        !parsed["choices"][0].contains("message") ||
        !parsed["choices"][0]["message"].contains("content") ||
        !parsed["choices"][0]["message"]["content"].is_string()) {
      throw ProtocolError("endpoint body lacks choices[0].message.content");
    }
    return parsed["choices"][0]["message"]["content"].get<std::string>();
  }
  throw TransportError("oracle unreachable after " +
                       std::to_string(attempts_allowed) + " attempts (" +
                       last_failure + ")");
}

namespace {

const char* kFillers[] = {
    "The narrative mentions several routine observations.",
    "Key factors were weighed against typical presentations.",
    "Overall the described course appears broadly consistent.",
    "Several details point in partially conflicting directions.",
    "The recorded history adds limited additional signal.",
    "Supporting context was reviewed for corroborating detail.",
};
constexpr std::size_t kFillerCount = std::size(kFillers);

}  // namespace

ReasonedSample synthetic_oracle(const corpus::Sample& s,
                                const SyntheticKnobs& knobs,
                                const PromptTemplate& tpl) {
  if (knobs.acc_with_signal < 0.0 || knobs.acc_with_signal > 1.0 ||
      knobs.acc_without_signal < 0.0 || knobs.acc_without_signal > 1.0) {
    throw UsageError("synthetic oracle accuracies must be in [0,1]");
  }
  Rng rng(derive_seed(knobs.seed, "oracle:" + s.id));
  const bool has_signal = !knobs.signal_token.empty() &&
                          s.text.find(knobs.signal_token) != std::string::npos;
  const double acc =
      has_signal ? knobs.acc_with_signal : knobs.acc_without_signal;
  const bool correct = rng.bernoulli(acc);

  const Conclusion truth = conclusion_for_label(s.label);
  const Conclusion conclusion = correct ? truth : flip(truth);
  const std::string& name = conclusion == Conclusion::kClass1
                                ? tpl.class1_name
                                : tpl.class0_name;

  const auto f1 = rng.below(kFillerCount);
  const auto f2 = rng.below(kFillerCount);
  std::string reasoning;
  reasoning += kFillers[f1];
  reasoning += "\nAssessment marker ";
  reasoning += correct ? "CUE_OK" : "CUE_BAD";
  reasoning += " recorded while weighing the evidence.\n";
  reasoning += kFillers[f2];
  reasoning += "\nTherefore the most likely outcome is \"" + name + "\".";

  ReasonedSample out;
  out.sample_id = s.id;
  out.reasoning = reasoning;
  out.conclusion = conclusion;
  out.raw_response = reasoning + "\n" + name;
  return out;
}

Stage1Result run_stage1(const corpus::Dataset& ds, const OracleSpec& oracle,
                        const PromptTemplate& tpl, int max_in_flight) {
  const std::size_t n = ds.size();
  Stage1Result result;
  result.reasoned.resize(n);
  const bool endpoint_mode = std::holds_alternative<OracleConfig>(oracle);
  if (endpoint_mode) result.audit.resize(n);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> transport_failures{0};
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || abort.load()) return;
      const corpus::Sample& s = ds.samples[i];
      ReasonedSample& slot = result.reasoned[i];
      try {
        if (endpoint_mode) {
          const auto& cfg = std::get<OracleConfig>(oracle);
          AuditEntry& audit = result.audit[i];
          audit.sample_id = s.id;
          const std::string prompt = render_prompt(tpl, s);
          try {
            const std::string raw = query_oracle(cfg, prompt, &audit);
            auto [reasoning, conclusion] = parse_conclusion(raw, tpl);
            slot = {s.id, std::move(reasoning), conclusion, raw, {}};
          } catch (const TransportError& e) {
            slot = {s.id, "", Conclusion::kNotSure, "", e.what()};
            const std::size_t failures = transport_failures.fetch_add(1) + 1;
            if (failures * 2 > n) abort.store(true);
          } catch (const ProtocolError& e) {
            slot = {s.id, "", Conclusion::kNotSure, "", e.what()};
          }
        } else {
          slot = synthetic_oracle(s, std::get<SyntheticKnobs>(oracle), tpl);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const int threads =
      std::max(1, std::min<int>(max_in_flight, static_cast<int>(n)));
  if (threads == 1 || !endpoint_mode) {
    // Synthetic mode is pure per sample; run it inline.
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (fatal) std::rethrow_exception(fatal);
  if (abort.load()) {
    throw TransportError(
        "stage 1 aborted: " + std::to_string(transport_failures.load()) +
        " of " + std::to_string(n) + " oracle calls failed in transport");
  }
  for (const auto& r : result.reasoned) {
    result.n_not_sure += r.conclusion == Conclusion::kNotSure;
    result.n_errors += r.error.has_value();
  }
  return result;
}

}  // namespace lpcorp::reasoner
