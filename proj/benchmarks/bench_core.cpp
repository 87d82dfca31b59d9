#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "lpcorp/analytics.hpp"
#include "lpcorp/corrector.hpp"
#include "lpcorp/features.hpp"
#include "lpcorp/rng.hpp"
#include "lpcorp/temporal.hpp"

namespace {

using namespace lpcorp;

const char* kWords[] = {"patient", "stable",  "rhythm",  "noted",  "vitals",
                        "within",  "range",   "review",  "plan",   "monitor",
                        "repeat",  "morning", "bedside", "aware",  "acute",
                        "episode", "sinus",   "labs",    "team",   "care"};

std::vector<std::string> make_docs(std::size_t n, std::size_t words,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> docs;
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string d;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) d.push_back(' ');
      d += kWords[rng.below(20)];
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

void BM_tokenize(benchmark::State& state) {
  const std::string doc = make_docs(1, 400, 3)[0];
  for (auto _ : state) {
    benchmark::DoNotOptimize(features::tokenize(doc));
  }
  state.SetBytesProcessed(state.iterations() * doc.size());
}
BENCHMARK(BM_tokenize);

void BM_tfidf_fit(benchmark::State& state) {
  const auto docs = make_docs(state.range(0), 40, 5);
  features::TfidfConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(features::fit(docs, cfg));
  }
}
BENCHMARK(BM_tfidf_fit)->Arg(100)->Arg(1000);

void BM_tfidf_transform(benchmark::State& state) {
  const auto docs = make_docs(500, 40, 7);
  const features::TfidfModel model = features::fit(docs, {});
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(features::transform(model, docs[i++ % docs.size()]));
  }
}
BENCHMARK(BM_tfidf_transform);

void BM_train_correction(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const auto docs = make_docs(n, 30, 11);
  const features::TfidfModel model = features::fit(docs, {});
  std::vector<features::FeatureVector> X;
  std::vector<int> y;
  Rng rng(13);
  for (std::size_t i = 0; i < n; ++i) {
    X.push_back(features::transform(model, docs[i]));
    y.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrector::train(X, y));
  }
}
BENCHMARK(BM_train_correction)->Arg(200);

void BM_monte_carlo_acc(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        analytics::monte_carlo_acc({0.7, 0.8, 0.75}, state.range(0), 42));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_monte_carlo_acc)->Arg(100000)->Arg(1000000);

void BM_sweep_threshold(benchmark::State& state) {
  Rng rng(17);
  std::vector<analytics::ScoredDecision> scored;
  for (int i = 0; i < 2000; ++i) {
    analytics::ScoredDecision d;
    d.sample_id = "s" + std::to_string(i);
    d.truth = rng.bernoulli(0.05) ? 1 : 0;
    d.stage1 = rng.bernoulli(0.7) ? reasoner::conclusion_for_label(d.truth)
                                  : reasoner::flip(reasoner::conclusion_for_label(d.truth));
    d.p_correct = rng.uniform01();
    scored.push_back(std::move(d));
  }
  const costmodel::CostParams costs{0.05, 50000.0, 1000.0, 0.7};
  const auto grid = analytics::default_grid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytics::sweep_threshold(scored, costs, grid));
  }
}
BENCHMARK(BM_sweep_threshold);

void BM_pseudo_event_sampling(benchmark::State& state) {
  temporal::OffsetDistribution dist;
  Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    dist.offsets.push_back(3600 * (8 + static_cast<std::int64_t>(rng.below(140))));
  }
  temporal::AdmissionTimeline a;
  a.t_adm = 1700000000;
  a.t_dis = a.t_adm + 250 * 3600;
  const temporal::HorizonConfig h;
  std::uint64_t i = 0;
  for (auto _ : state) {
    a.admission_id = "n" + std::to_string(i++);
    benchmark::DoNotOptimize(temporal::sample_pseudo_event(a, dist, h, 9));
  }
}
BENCHMARK(BM_pseudo_event_sampling);

}  // namespace

BENCHMARK_MAIN();
