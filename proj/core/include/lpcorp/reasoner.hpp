#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lpcorp/corpus.hpp"

namespace lpcorp::reasoner {

enum class Conclusion { kClass0, kClass1, kNotSure };

// Stable wire tokens used in reasoned JSONL files.
std::string conclusion_token(Conclusion c);
Conclusion conclusion_from_token(const std::string& token);

Conclusion conclusion_for_label(int label);
// kClass0 <-> kClass1; kNotSure maps to itself.
Conclusion flip(Conclusion c);

struct PromptTemplate {
  // Must reference {text} exactly once across statement + instructions.
  // {class0}, {class1} and {not_sure} substitute the answer strings.
  std::string task_statement;
  std::string instruction_block;
  std::string class0_name;
  std::string class1_name;
  std::string not_sure_name = "not sure";
};

PromptTemplate default_template(const std::string& class0_name,
                                const std::string& class1_name);

// Deterministic render; the narrative appears verbatim exactly once and the
// footer demands exactly one of the three answer strings on one line.
std::string render_prompt(const PromptTemplate& tpl, const corpus::Sample& s);

// Bottom-up over the last five nonempty lines: the first line containing
// exactly one answer string (case-insensitive) decides the conclusion;
// everything before that line is the reasoning. No qualifying line means
// kNotSure with the whole response kept as reasoning.
std::pair<std::string, Conclusion> parse_conclusion(const std::string& raw,
                                                    const PromptTemplate& tpl);

struct ReasonedSample {
  std::string sample_id;
  std::string reasoning;
  Conclusion conclusion = Conclusion::kNotSure;
  std::string raw_response;
  std::optional<std::string> error;  // permanent per-sample failure
};

struct OracleConfig {
  std::string endpoint_url;  // full URL of a chat-completions endpoint
  std::string model_name;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  double temperature = 0.0;
};

struct AuditEntry {
  std::string sample_id;
  std::string request_body;
  int status = 0;
  std::string response_body;
  int attempts = 0;
};

// POSTs {"model", "messages", "temperature"} and returns the first choice's
// message content. Retries transport failures and 5xx responses with
// exponential backoff up to max_retries. Bearer auth is picked up from
// LPCORP_API_KEY when set.
std::string query_oracle(const OracleConfig& cfg, const std::string& prompt,
                         AuditEntry* audit = nullptr);

// Desk-scale stand-in for the reasoning endpoint. The conclusion matches the
// ground truth with probability acc_with_signal when signal_token occurs in
// the text (acc_without_signal otherwise), seeded per sample id. The
// generated reasoning embeds CUE_OK or CUE_BAD according to whether the draw
// was correct, giving Stage 2 a learnable signal.
struct SyntheticKnobs {
  std::string signal_token;
  double acc_with_signal = 0.7;
  double acc_without_signal = 0.7;
  std::uint64_t seed = 0;
};

ReasonedSample synthetic_oracle(const corpus::Sample& s,
                                const SyntheticKnobs& knobs,
                                const PromptTemplate& tpl);

using OracleSpec = std::variant<OracleConfig, SyntheticKnobs>;

struct Stage1Result {
  std::vector<ReasonedSample> reasoned;  // input order, one per sample
  std::vector<AuditEntry> audit;         // endpoint mode only, input order
  std::size_t n_not_sure = 0;
  std::size_t n_errors = 0;
};

// One ReasonedSample per input sample, order preserved. Per-sample endpoint
// failures are recorded on the sample (conclusion kNotSure) and do not stop
// the run; more than 50% transport failures aborts with a summary.
Stage1Result run_stage1(const corpus::Dataset& ds, const OracleSpec& oracle,
                        const PromptTemplate& tpl, int max_in_flight = 4);

}  // namespace lpcorp::reasoner
