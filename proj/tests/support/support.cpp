#include "support.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lpcorp/rng.hpp"
#include "lpcorp/timeparse.hpp"

namespace testsupport {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const std::uint64_t nonce =
      lpcorp::derive_seed(0x7e57d1d5, tag) ^ (counter++) ^
      static_cast<std::uint64_t>(::getpid());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "lpcorp_%s_%016llx", tag.c_str(),
                static_cast<unsigned long long>(nonce));
  path_ = fs::temp_directory_path() / buf;
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string TempDir::file(const std::string& name) const {
  return (path_ / name).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

namespace {

const char* kFiller[] = {
    "patient",  "remains",  "stable",    "overnight", "with",     "mild",
    "episodes", "of",       "sinus",     "rhythm",    "noted",    "during",
    "rounds",   "vitals",   "within",    "expected",  "range",    "labs",
    "pending",  "review",   "breathing", "unlabored", "on",       "room",
    "air",      "family",   "updated",   "at",        "bedside",  "plan",
    "continue", "current",  "care",      "monitor",   "telemetry", "repeat",
    "panel",    "tomorrow", "morning",   "team",      "aware",    "no",
    "acute",    "distress", "observed",  "today",
};
constexpr std::size_t kFillerCount = sizeof(kFiller) / sizeof(kFiller[0]);

}  // namespace

lpcorp::corpus::Dataset make_event_dataset(std::size_t n, double prevalence,
                                           const std::string& signal_token,
                                           std::uint64_t seed) {
  lpcorp::corpus::Dataset ds;
  ds.samples.reserve(n);
  lpcorp::Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    lpcorp::corpus::Sample s;
    char id[24];
    std::snprintf(id, sizeof(id), "s%06zu", i);
    s.id = id;
    s.label = rng.bernoulli(prevalence) ? 1 : 0;
    std::string text;
    const std::size_t words = 8 + rng.below(5);
    for (std::size_t w = 0; w < words; ++w) {
      if (w) text.push_back(' ');
      text += kFiller[rng.below(kFillerCount)];
    }
    if (s.label == 1 && !signal_token.empty()) {
      text += " ";
      text += signal_token;
    }
    s.text = std::move(text);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void write_dataset_jsonl(const lpcorp::corpus::Dataset& ds,
                         const std::string& path) {
  std::string out;
  for (const lpcorp::corpus::Sample& s : ds.samples) {
    nlohmann::json j;
    j["id"] = s.id;
    j["text"] = s.text;
    j["label"] = s.label;
    if (!s.meta.empty()) j["meta"] = s.meta;
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<lpcorp::temporal::AdmissionTimeline> make_cohort(
    const CohortSpec& spec) {
  std::vector<lpcorp::temporal::AdmissionTimeline> out;
  out.reserve(spec.n_pos + spec.n_neg);
  lpcorp::Rng rng(spec.seed);
  const std::int64_t base = 1700000000;  // any fixed epoch anchor
  const auto hours = [](double h) {
    return static_cast<std::int64_t>(std::llround(h * 3600.0));
  };
  std::size_t serial = 0;
  const auto add_notes = [&](lpcorp::temporal::AdmissionTimeline* a) {
    for (int k = 0; k < spec.notes_per_admission; ++k) {
      lpcorp::temporal::Note note;
      // First note right at admission, the rest spread over the first day.
      note.t_note = a->t_adm + (k == 0 ? 0 : hours(1.0 + 7.0 * k));
      if (note.t_note > a->t_dis) note.t_note = a->t_dis;
      note.text = "note " + a->admission_id + " seq " + std::to_string(k) +
                  " " + kFiller[rng.below(kFillerCount)] + " " +
                  kFiller[rng.below(kFillerCount)];
      a->notes.push_back(std::move(note));
    }
  };
  for (std::size_t i = 0; i < spec.n_pos; ++i) {
    lpcorp::temporal::AdmissionTimeline a;
    a.admission_id = "pos" + std::to_string(serial++);
    a.t_adm = base + static_cast<std::int64_t>(i) * 86400;
    const double span = spec.max_offset_hours - spec.min_offset_hours;
    const double off_h = spec.min_offset_hours + span * rng.uniform01();
    a.t_event = a.t_adm + hours(off_h);
    a.t_dis = *a.t_event + hours(spec.pos_post_event_hours);
    add_notes(&a);
    out.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < spec.n_neg; ++i) {
    lpcorp::temporal::AdmissionTimeline a;
    a.admission_id = "neg" + std::to_string(serial++);
    a.t_adm = base + static_cast<std::int64_t>(i) * 43200;
    a.t_dis = a.t_adm + hours(spec.neg_los_hours);
    add_notes(&a);
    out.push_back(std::move(a));
  }
  return out;
}

void write_timelines_jsonl(
    const std::vector<lpcorp::temporal::AdmissionTimeline>& admissions,
    const std::string& path) {
  namespace tp = lpcorp::timeparse;
  std::string out;
  for (const lpcorp::temporal::AdmissionTimeline& a : admissions) {
    nlohmann::json j;
    j["admission_id"] = a.admission_id;
    j["t_adm"] = tp::format_iso8601(a.t_adm);
    j["t_dis"] = tp::format_iso8601(a.t_dis);
    if (a.t_event) j["t_event"] = tp::format_iso8601(*a.t_event);
    nlohmann::json notes = nlohmann::json::array();
    for (const lpcorp::temporal::Note& n : a.notes) {
      notes.push_back(
          {{"t_note", tp::format_iso8601(n.t_note)}, {"text", n.text}});
    }
    j["notes"] = std::move(notes);
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    // Lower series for P, then Q = 1 - P.
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  // Modified Lentz continued fraction for Q.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

double chi_square_pvalue(double stat, int dof) {
  return regularized_gamma_q(0.5 * dof, 0.5 * stat);
}

}  // namespace testsupport
