#include "lpcorp/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lpcorp/csv.hpp"
#include "lpcorp/errors.hpp"
#include "lpcorp/rng.hpp"
#include "lpcorp/text.hpp"
#include "lpcorp/timeparse.hpp"

namespace lpcorp::temporal {

namespace {

std::int64_t get_time(const nlohmann::json& j, const char* key,
                      const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw DataError(where + ": missing or non-string \"" + key + "\"");
  }
  return timeparse::parse_iso8601(j.at(key).get<std::string>());
}

double hours_of(std::int64_t seconds) {
  return static_cast<double>(seconds) / 3600.0;
}

// Interpolated quantile (the common linear "type 7" rule) of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct Kde {
  double bandwidth = 0.0;
  std::vector<double> points;  // hours

  double density(double x) const {
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    double sum = 0.0;
    for (double p : points) {
      const double u = (x - p) / bandwidth;
      sum += std::exp(-0.5 * u * u);
    }
    return sum * kInvSqrt2Pi /
           (bandwidth * static_cast<double>(points.size()));
  }
};

Kde make_kde(const OffsetDistribution& d) {
  Kde k;
  k.points.reserve(d.offsets.size());
  for (std::int64_t off : d.offsets) k.points.push_back(hours_of(off));
  std::vector<double> sorted = k.points;
  std::sort(sorted.begin(), sorted.end());

  const double n = static_cast<double>(sorted.size());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : sorted) var += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  const double iqr = quantile_sorted(sorted, 0.75) -
                     quantile_sorted(sorted, 0.25);

  // Silverman's rule; degenerate spreads fall back to whatever scale is
  // left, and finally to a fixed hour so the density stays well defined.
  double scale = std::min(sd, iqr / 1.34);
  if (scale <= 0.0) scale = std::max(sd, iqr / 1.34);
  double bw = 0.9 * scale * std::pow(n, -0.2);
  if (!(bw > 0.0)) bw = 1.0;
  k.bandwidth = bw;
  return k;
}

}  // namespace

std::int64_t HorizonConfig::seconds() const {
  if (!(hours > 0.0)) throw UsageError("horizon must be positive");
  return std::llround(hours * 3600.0);
}

std::vector<AdmissionTimeline> load_timelines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);

  std::vector<AdmissionTimeline> out;
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    text::utf8_require_valid(line, where);

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw DataError(where + ": expected a JSON object");

    AdmissionTimeline a;
    try {
      if (!j.contains("admission_id")) {
        throw DataError(where + ": missing \"admission_id\"");
      }
      const auto& idj = j.at("admission_id");
      if (idj.is_string()) a.admission_id = idj.get<std::string>();
      else if (idj.is_number_integer()) {
        a.admission_id = std::to_string(idj.get<std::int64_t>());
      } else {
        throw DataError(where + ": \"admission_id\" must be a string");
      }
      a.t_adm = get_time(j, "t_adm", where);
      a.t_dis = get_time(j, "t_dis", where);
      if (j.contains("t_event") && !j.at("t_event").is_null()) {
        a.t_event = get_time(j, "t_event", where);
      }
      if (j.contains("notes")) {
        if (!j.at("notes").is_array()) {
          throw DataError(where + ": \"notes\" must be an array");
        }
        for (const auto& nj : j.at("notes")) {
          Note n;
          n.t_note = get_time(nj, "t_note", where);
          if (!nj.contains("text") || !nj.at("text").is_string()) {
            throw DataError(where + ": note missing string \"text\"");
          }
          n.text = nj.at("text").get<std::string>();
          a.notes.push_back(std::move(n));
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }

    if (a.t_adm > a.t_dis) {
      throw DataError(where + ": admission \"" + a.admission_id +
                      "\" discharges before it starts");
    }
    for (const Note& n : a.notes) {
      if (n.t_note < a.t_adm || n.t_note > a.t_dis) {
        throw DataError(where + ": note at " + timeparse::format_iso8601(n.t_note) +
                        " falls outside the stay of \"" + a.admission_id +
                        "\"");
      }
    }
    if (a.t_event && (*a.t_event < a.t_adm || *a.t_event > a.t_dis)) {
      throw DataError(where + ": event time falls outside the stay of \"" +
                      a.admission_id + "\"");
    }
    ids.push_back(a.admission_id);
    out.push_back(std::move(a));
  }

  std::sort(ids.begin(), ids.end());
  const auto dup = std::adjacent_find(ids.begin(), ids.end());
  if (dup != ids.end()) {
    throw DataError(path + ": duplicate admission id \"" + *dup + "\"");
  }
  return out;
}

std::optional<std::int64_t> positive_index_time(const AdmissionTimeline& a,
                                                const HorizonConfig& h) {
  if (!a.t_event) {
    throw DataError("admission \"" + a.admission_id +
                    "\" has no event; cannot take a pre-event index");
  }
  const std::int64_t idx = *a.t_event - h.seconds();
  if (idx < a.t_adm) return std::nullopt;
  return idx;
}

OffsetDistribution collect_offsets(
    const std::vector<AdmissionTimeline>& positives) {
  if (positives.empty()) {
    throw DataError("no positive admissions to collect offsets from");
  }
  OffsetDistribution d;
  d.offsets.reserve(positives.size());
  for (const AdmissionTimeline& a : positives) {
    if (!a.t_event) {
      throw DataError("admission \"" + a.admission_id +
                      "\" has no event time");
    }
    d.offsets.push_back(*a.t_event - a.t_adm);
  }
  return d;
}

std::optional<std::int64_t> sample_pseudo_event(const AdmissionTimeline& a,
                                                const OffsetDistribution& dist,
                                                const HorizonConfig& h,
                                                std::uint64_t seed) {
  if (a.t_event) {
    throw DataError("admission \"" + a.admission_id +
                    "\" already has an event; pseudo-events are for "
                    "negatives");
  }
  const std::int64_t cap = (a.t_dis - a.t_adm) - h.seconds();
  std::vector<std::int64_t> feasible;
  for (std::int64_t off : dist.offsets) {
    if (off <= cap) feasible.push_back(off);
  }
  if (feasible.empty()) return std::nullopt;
  // Sorting makes the draw depend only on the multiset, not on the order
  // positives were listed in.
  std::sort(feasible.begin(), feasible.end());
  Rng rng(derive_seed(seed, "pseudo_event:" + a.admission_id));
  return a.t_adm + feasible[rng.below(feasible.size())];
}

std::string clip_notes(const AdmissionTimeline& a, std::int64_t t_index) {
  if (t_index < a.t_adm || t_index > a.t_dis) {
    throw DataError("index time " + timeparse::format_iso8601(t_index) +
                    " lies outside the stay of \"" + a.admission_id + "\"");
  }
  std::vector<const Note*> in_window;
  for (const Note& n : a.notes) {
    if (n.t_note <= t_index) in_window.push_back(&n);
  }
  std::stable_sort(in_window.begin(), in_window.end(),
                   [](const Note* x, const Note* y) {
                     return x->t_note < y->t_note;
                   });
  std::string out;
  for (const Note* n : in_window) {
    if (!out.empty()) out.push_back('\n');
    out += n->text;
  }
  return out;
}

BuildResult build_cohort(const std::vector<AdmissionTimeline>& admissions,
                         const HorizonConfig& h, std::uint64_t seed) {
  BuildResult res;

  std::vector<AdmissionTimeline> positives;
  for (const AdmissionTimeline& a : admissions) {
    if (a.t_event) positives.push_back(a);
  }
  res.pos_offsets = collect_offsets(positives);

  for (const AdmissionTimeline& a : admissions) {
    std::optional<std::int64_t> t_index;
    if (a.t_event) {
      t_index = positive_index_time(a, h);
      if (!t_index) {
        res.exclusions.push_back({a.admission_id, kNoPreEventWindow});
        continue;
      }
    } else {
      t_index = sample_pseudo_event(a, res.pos_offsets, h, seed);
      if (!t_index) {
        res.exclusions.push_back({a.admission_id, kNoFeasibleOffset});
        continue;
      }
    }
    std::string body = clip_notes(a, *t_index);
    if (body.empty()) {
      res.exclusions.push_back({a.admission_id, kNoNotesInWindow});
      continue;
    }
    if (!a.t_event) res.neg_sampled.offsets.push_back(*t_index - a.t_adm);

    corpus::Sample s;
    s.id = a.admission_id;
    s.text = std::move(body);
    s.label = a.t_event ? 1 : 0;
    s.meta["t_index"] = timeparse::format_iso8601(*t_index);
    res.dataset.samples.push_back(std::move(s));
  }
  return res;
}

DistributionExport export_distributions(const OffsetDistribution& pos,
                                        const OffsetDistribution* neg,
                                        int bins) {
  if (bins < 2) throw UsageError("need at least 2 histogram bins");
  if (pos.offsets.empty() || (neg && neg->offsets.empty())) {
    throw DataError("cannot export an empty offset distribution");
  }

  std::vector<double> pos_h, neg_h;
  for (std::int64_t off : pos.offsets) pos_h.push_back(hours_of(off));
  if (neg) {
    for (std::int64_t off : neg->offsets) neg_h.push_back(hours_of(off));
  }

  double lo = pos_h.front(), hi = pos_h.front();
  for (double v : pos_h) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : neg_h) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) {  // all mass at one point; give the bins some width
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;

  auto bin_of = [&](double v) {
    auto b = static_cast<std::int64_t>((v - lo) / width);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    return static_cast<std::size_t>(b);
  };
  std::vector<double> pos_freq(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> neg_freq(static_cast<std::size_t>(bins), 0.0);
  for (double v : pos_h) pos_freq[bin_of(v)] += 1.0 / pos_h.size();
  for (double v : neg_h) neg_freq[bin_of(v)] += 1.0 / neg_h.size();

  DistributionExport out;
  out.histogram_csv = neg ? "bin_lo_hours,bin_hi_hours,pos_freq,neg_freq\n"
                          : "bin_lo_hours,bin_hi_hours,pos_freq\n";
  for (int b = 0; b < bins; ++b) {
    std::vector<std::string> row = {
        csv::number(lo + width * b),
        csv::number(b + 1 == bins ? hi : lo + width * (b + 1)),
        csv::number(pos_freq[static_cast<std::size_t>(b)]),
    };
    if (neg) row.push_back(csv::number(neg_freq[static_cast<std::size_t>(b)]));
    out.histogram_csv += csv::join_row(row);
  }

  const Kde pos_kde = make_kde(pos);
  Kde neg_kde;
  if (neg) neg_kde = make_kde(*neg);
  const double pad = 4.0 * std::max(pos_kde.bandwidth,
                                    neg ? neg_kde.bandwidth : 0.0);
  const double glo = lo - pad, ghi = hi + pad;
  constexpr int kGridPoints = 200;
  out.kde_csv = neg ? "hours,pos_density,neg_density\n" : "hours,pos_density\n";
  for (int g = 0; g < kGridPoints; ++g) {
    const double x = glo + (ghi - glo) * g / (kGridPoints - 1);
    std::vector<std::string> row = {csv::number(x),
                                    csv::number(pos_kde.density(x))};
    if (neg) row.push_back(csv::number(neg_kde.density(x)));
    out.kde_csv += csv::join_row(row);
  }
  return out;
}

}  // namespace lpcorp::temporal
