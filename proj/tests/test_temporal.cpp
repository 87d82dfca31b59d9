#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lpcorp/errors.hpp"
#include "lpcorp/temporal.hpp"
#include "lpcorp/timeparse.hpp"
#include "support.hpp"

using namespace lpcorp;
using temporal::AdmissionTimeline;
using temporal::HorizonConfig;
using temporal::OffsetDistribution;

namespace {

constexpr std::int64_t kBase = 1700000000;
constexpr std::int64_t kHour = 3600;

AdmissionTimeline adm(const std::string& id, std::int64_t t_adm,
                      std::int64_t t_dis,
                      std::optional<std::int64_t> t_event,
                      std::vector<temporal::Note> notes) {
  AdmissionTimeline a;
  a.admission_id = id;
  a.t_adm = t_adm;
  a.t_dis = t_dis;
  a.t_event = t_event;
  a.notes = std::move(notes);
  return a;
}

// Rows of a small numeric CSV (no quoting involved).
std::vector<std::vector<std::string>> rows_of(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string::npos) end = csv.size();
    const std::string line = csv.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t f = 0;
    while (true) {
      const auto comma = line.find(',', f);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(f));
        break;
      }
      fields.push_back(line.substr(f, comma - f));
      f = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

TEST_CASE("horizon converts hours to seconds and rejects nonpositive") {
  CHECK(HorizonConfig{}.seconds() == 21600);
  CHECK(HorizonConfig{0.5}.seconds() == 1800);
  CHECK(HorizonConfig{1.0 / 3600.0}.seconds() == 1);
  CHECK_THROWS_AS(HorizonConfig{0.0}.seconds(), UsageError);
  CHECK_THROWS_AS(HorizonConfig{-2.0}.seconds(), UsageError);
}

TEST_CASE("positive index time sits one horizon before the event") {
  const auto a = adm("p", kBase, kBase + 60 * kHour, kBase + 30 * kHour, {});
  const auto idx = temporal::positive_index_time(a, HorizonConfig{});
  REQUIRE(idx.has_value());
  CHECK(*idx == kBase + 24 * kHour);

  // Event too close to admission: no room for the horizon.
  const auto tight = adm("q", kBase, kBase + 60 * kHour, kBase + 5 * kHour,
                         {});
  CHECK_FALSE(temporal::positive_index_time(tight, HorizonConfig{}));

  // Exactly one horizon after admission is still allowed.
  const auto snug = adm("r", kBase, kBase + 60 * kHour, kBase + 6 * kHour, {});
  const auto sidx = temporal::positive_index_time(snug, HorizonConfig{});
  REQUIRE(sidx.has_value());
  CHECK(*sidx == kBase);

  const auto neg = adm("n", kBase, kBase + 60 * kHour, std::nullopt, {});
  CHECK_THROWS_WITH_AS(temporal::positive_index_time(neg, HorizonConfig{}),
                       doctest::Contains("has no event"), DataError);
}

TEST_CASE("collect_offsets keeps duplicates and every positive") {
  const std::vector<AdmissionTimeline> positives = {
      adm("a", kBase, kBase + 40 * kHour, kBase + 10 * kHour, {}),
      adm("b", kBase, kBase + 40 * kHour, kBase + 10 * kHour, {}),
      adm("c", kBase, kBase + 40 * kHour, kBase + 20 * kHour, {}),
      // Too short to index itself, still informs the distribution.
      adm("d", kBase, kBase + 40 * kHour, kBase + 2 * kHour, {}),
  };
  const auto dist = temporal::collect_offsets(positives);
  CHECK(dist.offsets == std::vector<std::int64_t>{10 * kHour, 10 * kHour,
                                                  20 * kHour, 2 * kHour});

  CHECK_THROWS_WITH_AS(temporal::collect_offsets({}),
                       doctest::Contains("no positive admissions"), DataError);
  CHECK_THROWS_WITH_AS(
      temporal::collect_offsets(
          {adm("n", kBase, kBase + kHour, std::nullopt, {})}),
      doctest::Contains("no event time"), DataError);
}

TEST_CASE("pseudo events draw only offsets that leave a full horizon") {
  OffsetDistribution dist;
  dist.offsets = {10 * kHour, 30 * kHour, 50 * kHour};
  const HorizonConfig h;

  // LOS 40h, horizon 6h: cap is 34h, so only 10h and 30h fit.
  const auto a = adm("n1", kBase, kBase + 40 * kHour, std::nullopt, {});
  std::set<std::int64_t> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto t = temporal::sample_pseudo_event(a, dist, h, seed);
    REQUIRE(t.has_value());
    const std::int64_t off = *t - kBase;
    CHECK((off == 10 * kHour || off == 30 * kHour));
    CHECK(*t + h.seconds() <= a.t_dis);
    seen.insert(off);
  }
  CHECK(seen.size() == 2);  // both feasible offsets actually occur

  // Nothing fits a very short stay.
  const auto brief = adm("n2", kBase, kBase + 5 * kHour, std::nullopt, {});
  CHECK_FALSE(temporal::sample_pseudo_event(brief, dist, h, 1).has_value());

  // Exactly LOS - h is feasible.
  const auto exact = adm("n3", kBase, kBase + 16 * kHour, std::nullopt, {});
  const auto t = temporal::sample_pseudo_event(exact, dist, h, 9);
  REQUIRE(t.has_value());
  CHECK(*t == kBase + 10 * kHour);

  const auto pos = adm("p", kBase, kBase + 40 * kHour, kBase + 20 * kHour, {});
  CHECK_THROWS_WITH_AS(temporal::sample_pseudo_event(pos, dist, h, 1),
                       doctest::Contains("already has an event"), DataError);
}

TEST_CASE("pseudo draws depend on the offset multiset, not its order") {
  OffsetDistribution fwd, rev;
  for (int i = 0; i < 50; ++i) fwd.offsets.push_back((8 + i) * kHour);
  rev.offsets.assign(fwd.offsets.rbegin(), fwd.offsets.rend());

  const auto a = adm("n", kBase, kBase + 200 * kHour, std::nullopt, {});
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    CHECK(temporal::sample_pseudo_event(a, fwd, HorizonConfig{}, seed) ==
          temporal::sample_pseudo_event(a, rev, HorizonConfig{}, seed));
  }

  // Keyed per admission id: same seed, different ids, independent draws.
  const auto b = adm("m", kBase, kBase + 200 * kHour, std::nullopt, {});
  bool any_diff = false;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    any_diff |= temporal::sample_pseudo_event(a, fwd, HorizonConfig{}, seed) !=
                temporal::sample_pseudo_event(b, fwd, HorizonConfig{}, seed);
  }
  CHECK(any_diff);
}

TEST_CASE("pseudo draws are uniform over the feasible offsets") {
  // 400 distinct offsets, all feasible; bin draws by rank into 20
  // equal-count bins and test goodness of fit.
  OffsetDistribution dist;
  for (int i = 0; i < 400; ++i) dist.offsets.push_back(36000 + i * 900);
  std::vector<std::int64_t> sorted = dist.offsets;
  std::sort(sorted.begin(), sorted.end());

  const auto a = adm("g", kBase, kBase + 2000 * kHour, std::nullopt, {});
  const int n_draws = 2000;
  std::vector<double> counts(20, 0.0);
  for (int seed = 0; seed < n_draws; ++seed) {
    const auto t = temporal::sample_pseudo_event(
        a, dist, HorizonConfig{}, static_cast<std::uint64_t>(seed));
    REQUIRE(t.has_value());
    const auto it = std::lower_bound(sorted.begin(), sorted.end(),
                                     *t - kBase);
    REQUIRE(it != sorted.end());
    REQUIRE(*it == *t - kBase);
    const auto rank = static_cast<std::size_t>(it - sorted.begin());
    counts[rank / 20] += 1.0;
  }
  const double expected = n_draws / 20.0;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  CHECK(testsupport::chi_square_pvalue(stat, 19) > 0.005);
}

TEST_CASE("clip_notes keeps the closed pre-index window in time order") {
  const auto a = adm("x", kBase, kBase + 48 * kHour, std::nullopt,
                     {{kBase + 20 * kHour, "late"},
                      {kBase, "first"},
                      {kBase + 5 * kHour, "second"}});
  CHECK(temporal::clip_notes(a, kBase + 10 * kHour) == "first\nsecond");
  // The boundary note is included.
  CHECK(temporal::clip_notes(a, kBase + 20 * kHour) ==
        "first\nsecond\nlate");
  CHECK(temporal::clip_notes(a, kBase) == "first");

  // Ties keep their input order.
  const auto tie = adm("t", kBase, kBase + kHour, std::nullopt,
                       {{kBase, "one"}, {kBase, "two"}});
  CHECK(temporal::clip_notes(tie, kBase + 30) == "one\ntwo");

  // Nothing before the index: empty string, not an error.
  const auto late = adm("l", kBase, kBase + 48 * kHour, std::nullopt,
                        {{kBase + 30 * kHour, "after"}});
  CHECK(temporal::clip_notes(late, kBase + 10 * kHour).empty());

  CHECK_THROWS_WITH_AS(temporal::clip_notes(a, kBase - 1),
                       doctest::Contains("outside the stay"), DataError);
  CHECK_THROWS_AS(temporal::clip_notes(a, kBase + 49 * kHour), DataError);
}

TEST_CASE("notes after the index never change the clipped text") {
  const auto base = adm("d", kBase, kBase + 48 * kHour, std::nullopt,
                        {{kBase, "stable overnight"},
                         {kBase + 4 * kHour, "mild fever"}});
  auto spiked = base;
  spiked.notes.push_back({kBase + 12 * kHour + 1, "code blue called"});
  const std::int64_t idx = kBase + 12 * kHour;
  CHECK(temporal::clip_notes(base, idx) == temporal::clip_notes(spiked, idx));
}

TEST_CASE("load_timelines parses admissions with ISO timestamps") {
  testsupport::TempDir dir("timelines");
  const std::string path = dir.file("tl.jsonl");
  testsupport::write_file(
      path,
      "{\"admission_id\":\"a1\",\"t_adm\":\"2024-01-01T00:00:00Z\","
      "\"t_dis\":\"2024-01-03T00:00:00Z\",\"t_event\":\"2024-01-02T06:30:00Z\","
      "\"notes\":[{\"t_note\":\"2024-01-01T01:00:00Z\",\"text\":\"n1\"},"
      "{\"t_note\":\"2024-01-02T00:00:00Z\",\"text\":\"n2\"}]}\n"
      "\n"
      "{\"admission_id\":7,\"t_adm\":\"2024-02-01 08:00:00\","
      "\"t_dis\":\"2024-02-02T08:00:00Z\",\"t_event\":null,\"notes\":[]}\r\n");

  const auto tls = temporal::load_timelines(path);
  REQUIRE(tls.size() == 2);
  CHECK(tls[0].admission_id == "a1");
  CHECK(tls[0].t_adm == timeparse::parse_iso8601("2024-01-01T00:00:00Z"));
  CHECK(tls[0].t_dis - tls[0].t_adm == 48 * kHour);
  REQUIRE(tls[0].t_event.has_value());
  CHECK(*tls[0].t_event ==
        timeparse::parse_iso8601("2024-01-02T06:30:00Z"));
  REQUIRE(tls[0].notes.size() == 2);
  CHECK(tls[0].notes[0].text == "n1");
  // Integer ids are accepted and normalized to strings.
  CHECK(tls[1].admission_id == "7");
  CHECK_FALSE(tls[1].t_event.has_value());
  CHECK(tls[1].notes.empty());
}

TEST_CASE("load_timelines names the offending line") {
  testsupport::TempDir dir("timelines_bad");
  auto expect_error = [&](const std::string& name, const std::string& body,
                          const std::string& needle) {
    const std::string path = dir.file(name);
    testsupport::write_file(path, body);
    CHECK_THROWS_WITH_AS(temporal::load_timelines(path),
                         doctest::Contains(needle.c_str()), DataError);
  };
  const std::string good =
      "{\"admission_id\":\"ok\",\"t_adm\":\"2024-01-01T00:00:00Z\","
      "\"t_dis\":\"2024-01-02T00:00:00Z\"}\n";

  expect_error("json.jsonl", good + "{not json\n", ":2: invalid JSON");
  expect_error("id.jsonl",
               good + "{\"t_adm\":\"2024-01-01T00:00:00Z\","
                      "\"t_dis\":\"2024-01-02T00:00:00Z\"}\n",
               ":2: missing \"admission_id\"");
  expect_error("badtime.jsonl",
               good + "{\"admission_id\":\"b\",\"t_adm\":\"yesterday\","
                      "\"t_dis\":\"2024-01-02T00:00:00Z\"}\n",
               "yesterday");
  expect_error("inttime.jsonl",
               good + "{\"admission_id\":\"b\",\"t_adm\":12345,"
                      "\"t_dis\":\"2024-01-02T00:00:00Z\"}\n",
               ":2: missing or non-string \"t_adm\"");
  expect_error("order.jsonl",
               good + "{\"admission_id\":\"b\",\"t_adm\":\"2024-01-05T00:00:00Z\","
                      "\"t_dis\":\"2024-01-02T00:00:00Z\"}\n",
               "discharges before it starts");
  expect_error("notewin.jsonl",
               good + "{\"admission_id\":\"b\",\"t_adm\":\"2024-01-01T00:00:00Z\","
                      "\"t_dis\":\"2024-01-02T00:00:00Z\","
                      "\"notes\":[{\"t_note\":\"2024-01-02T00:00:01Z\","
                      "\"text\":\"x\"}]}\n",
               "falls outside the stay");
  expect_error("eventwin.jsonl",
               good + "{\"admission_id\":\"b\",\"t_adm\":\"2024-01-01T00:00:00Z\","
                      "\"t_dis\":\"2024-01-02T00:00:00Z\","
                      "\"t_event\":\"2024-01-02T00:00:01Z\"}\n",
               "event time falls outside");
  expect_error("notext.jsonl",
               good + "{\"admission_id\":\"b\",\"t_adm\":\"2024-01-01T00:00:00Z\","
                      "\"t_dis\":\"2024-01-02T00:00:00Z\","
                      "\"notes\":[{\"t_note\":\"2024-01-01T01:00:00Z\"}]}\n",
               "note missing string \"text\"");
  expect_error("dup.jsonl",
               good + good, "duplicate admission id \"ok\"");
  expect_error("utf8.jsonl",
               "{\"admission_id\":\"\xff\"}\n", ":1");

  CHECK_THROWS_WITH_AS(temporal::load_timelines(dir.file("missing.jsonl")),
                       doctest::Contains("cannot open"), DataError);
}

TEST_CASE("build_cohort aligns an ample synthetic cohort completely") {
  testsupport::CohortSpec spec;
  const auto admissions = testsupport::make_cohort(spec);
  const HorizonConfig h;
  const auto res = temporal::build_cohort(admissions, h, 5);

  CHECK(res.exclusions.empty());
  REQUIRE(res.dataset.size() == spec.n_pos + spec.n_neg);
  CHECK(corpus::prevalence(res.dataset) ==
        static_cast<double>(spec.n_pos) / (spec.n_pos + spec.n_neg));
  CHECK(res.pos_offsets.offsets.size() == spec.n_pos);
  CHECK(res.neg_sampled.offsets.size() == spec.n_neg);

  std::map<std::string, const AdmissionTimeline*> by_id;
  for (const auto& a : admissions) by_id[a.admission_id] = &a;

  std::multiset<std::int64_t> pos_offsets(res.pos_offsets.offsets.begin(),
                                          res.pos_offsets.offsets.end());
  for (const auto& s : res.dataset.samples) {
    const AdmissionTimeline& a = *by_id.at(s.id);
    const std::int64_t t_index =
        timeparse::parse_iso8601(s.meta.at("t_index"));
    // The full horizon fits before discharge, for both classes.
    CHECK(t_index + h.seconds() <= a.t_dis);
    CHECK(t_index >= a.t_adm);
    if (s.label == 1) {
      REQUIRE(a.t_event.has_value());
      CHECK(t_index == *a.t_event - h.seconds());
    } else {
      CHECK(pos_offsets.count(t_index - a.t_adm) > 0);
    }
    // The text is exactly the clipped pre-index record.
    CHECK(s.text == temporal::clip_notes(a, t_index));
  }

  // Same seed, same cohort; another seed moves some pseudo index.
  const auto again = temporal::build_cohort(admissions, h, 5);
  REQUIRE(again.dataset.size() == res.dataset.size());
  for (std::size_t i = 0; i < res.dataset.size(); ++i) {
    CHECK(again.dataset.samples[i].id == res.dataset.samples[i].id);
    CHECK(again.dataset.samples[i].text == res.dataset.samples[i].text);
    CHECK(again.dataset.samples[i].meta.at("t_index") ==
          res.dataset.samples[i].meta.at("t_index"));
  }
  const auto other = temporal::build_cohort(admissions, h, 6);
  bool moved = false;
  for (std::size_t i = 0; i < res.dataset.size(); ++i) {
    moved |= other.dataset.samples[i].meta.at("t_index") !=
             res.dataset.samples[i].meta.at("t_index");
  }
  CHECK(moved);
}

TEST_CASE("build_cohort records exclusions with their reasons") {
  const std::vector<AdmissionTimeline> admissions = {
      adm("P1", kBase, kBase + 20 * kHour, kBase + 10 * kHour,
          {{kBase, "early note"}}),
      adm("P2", kBase, kBase + 20 * kHour, kBase + 2 * kHour,
          {{kBase, "too close"}}),
      adm("N1", kBase, kBase + 4 * kHour, std::nullopt,
          {{kBase, "short stay"}}),
      adm("N2", kBase, kBase + 30 * kHour, std::nullopt,
          {{kBase + 25 * kHour, "only late notes"}}),
  };
  const auto res = temporal::build_cohort(admissions, HorizonConfig{}, 3);

  REQUIRE(res.dataset.size() == 1);
  CHECK(res.dataset.samples[0].id == "P1");
  CHECK(res.dataset.samples[0].label == 1);
  CHECK(res.dataset.samples[0].text == "early note");

  REQUIRE(res.exclusions.size() == 3);
  CHECK(res.exclusions[0].admission_id == "P2");
  CHECK(res.exclusions[0].reason == temporal::kNoPreEventWindow);
  CHECK(res.exclusions[1].admission_id == "N1");
  CHECK(res.exclusions[1].reason == temporal::kNoFeasibleOffset);
  CHECK(res.exclusions[2].admission_id == "N2");
  CHECK(res.exclusions[2].reason == temporal::kNoNotesInWindow);

  // Both positives inform the offset pool, even the unusable one.
  CHECK(res.pos_offsets.offsets.size() == 2);
}

TEST_CASE("post-index notes do not perturb the built cohort") {
  testsupport::CohortSpec spec;
  spec.n_pos = 10;
  spec.n_neg = 20;
  auto admissions = testsupport::make_cohort(spec);
  const HorizonConfig h;
  const auto before = temporal::build_cohort(admissions, h, 11);

  // Inject one extra note just after each sample's index time.
  std::map<std::string, std::int64_t> index_of;
  for (const auto& s : before.dataset.samples) {
    index_of[s.id] = timeparse::parse_iso8601(s.meta.at("t_index"));
  }
  for (auto& a : admissions) {
    const auto it = index_of.find(a.admission_id);
    if (it == index_of.end()) continue;
    const std::int64_t at = it->second + 1;
    if (at <= a.t_dis) a.notes.push_back({at, "cardiac arrest imminent"});
  }
  const auto after = temporal::build_cohort(admissions, h, 11);

  REQUIRE(after.dataset.size() == before.dataset.size());
  for (std::size_t i = 0; i < before.dataset.size(); ++i) {
    CHECK(after.dataset.samples[i].id == before.dataset.samples[i].id);
    CHECK(after.dataset.samples[i].text == before.dataset.samples[i].text);
    CHECK(after.dataset.samples[i].meta.at("t_index") ==
          before.dataset.samples[i].meta.at("t_index"));
  }
}

TEST_CASE("export_distributions writes matched histograms and KDE curves") {
  OffsetDistribution pos;
  for (int i = 0; i < 60; ++i) pos.offsets.push_back((10 + i % 30) * kHour);
  OffsetDistribution neg = pos;

  const auto ex = temporal::export_distributions(pos, &neg, 12);
  const auto hist = rows_of(ex.histogram_csv);
  REQUIRE(hist.size() == 13);
  CHECK(hist[0] == std::vector<std::string>{"bin_lo_hours", "bin_hi_hours",
                                            "pos_freq", "neg_freq"});
  double pos_sum = 0.0, neg_sum = 0.0;
  for (std::size_t i = 1; i < hist.size(); ++i) {
    REQUIRE(hist[i].size() == 4);
    // Identical inputs give identical rendered frequencies.
    CHECK(hist[i][2] == hist[i][3]);
    pos_sum += std::strtod(hist[i][2].c_str(), nullptr);
    neg_sum += std::strtod(hist[i][3].c_str(), nullptr);
  }
  CHECK(pos_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(neg_sum == doctest::Approx(1.0).epsilon(1e-12));

  const auto kde = rows_of(ex.kde_csv);
  REQUIRE(kde.size() == 201);
  CHECK(kde[0] == std::vector<std::string>{"hours", "pos_density",
                                           "neg_density"});
  double integral = 0.0;
  double prev_x = 0.0, prev_d = 0.0;
  for (std::size_t i = 1; i < kde.size(); ++i) {
    const double x = std::strtod(kde[i][0].c_str(), nullptr);
    const double d = std::strtod(kde[i][1].c_str(), nullptr);
    CHECK(kde[i][1] == kde[i][2]);
    CHECK(std::isfinite(d));
    CHECK(d >= 0.0);
    if (i > 1) integral += (x - prev_x) * (d + prev_d) / 2.0;
    prev_x = x;
    prev_d = d;
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("export handles skewed and degenerate distributions") {
  OffsetDistribution skew;
  for (std::int64_t off : {1, 1, 1, 2, 3, 10}) {
    skew.offsets.push_back(off * kHour);
  }
  const auto ex = temporal::export_distributions(skew, nullptr, 3);
  const auto hist = rows_of(ex.histogram_csv);
  REQUIRE(hist.size() == 4);
  CHECK(hist[0].size() == 3);  // positives-only export
  const double first = std::strtod(hist[1][2].c_str(), nullptr);
  for (std::size_t i = 2; i < hist.size(); ++i) {
    CHECK(first > std::strtod(hist[i][2].c_str(), nullptr));
  }

  // Single-valued distribution: widened bins, finite density everywhere.
  OffsetDistribution flat;
  flat.offsets = {7 * kHour, 7 * kHour, 7 * kHour};
  const auto dex = temporal::export_distributions(flat, nullptr, 4);
  for (const auto& row : rows_of(dex.kde_csv)) {
    if (row[0] == "hours") continue;
    CHECK(std::isfinite(std::strtod(row[1].c_str(), nullptr)));
  }
  double total = 0.0;
  for (const auto& row : rows_of(dex.histogram_csv)) {
    if (row[0] == "bin_lo_hours") continue;
    total += std::strtod(row[2].c_str(), nullptr);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(temporal::export_distributions(skew, nullptr, 1),
                  UsageError);
  CHECK_THROWS_AS(temporal::export_distributions(OffsetDistribution{},
                                                 nullptr, 4),
                  DataError);
  OffsetDistribution empty;
  CHECK_THROWS_AS(temporal::export_distributions(skew, &empty, 4), DataError);
}
