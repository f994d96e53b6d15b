#include <benchmark/benchmark.h>

#include "invaudit/bench_gen.hpp"
#include "invaudit/config.hpp"
#include "invaudit/fusion.hpp"
#include "invaudit/metrics.hpp"
#include "invaudit/pipeline.hpp"
#include "invaudit/rng.hpp"
#include "invaudit/static_prior.hpp"
#include "invaudit/trigger.hpp"

namespace {

using namespace invaudit;

const std::vector<InvocationRecord>& corpus() {
  static const auto c = generate_corpus(GenSpec{});
  return c;
}

std::vector<InvocationRecord> val_split() {
  std::vector<InvocationRecord> out;
  for (const auto& r : corpus()) {
    if (r.split == Split::kVal) out.push_back(r);
  }
  return out;
}

void BM_StaticPrior(benchmark::State& state) {
  const auto cfg = StaticPriorConfig::defaults();
  corpus();
  for (auto _ : state) {
    double sum = 0;
    for (const auto& r : corpus()) sum += static_capability_score(r.skill, cfg);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}
BENCHMARK(BM_StaticPrior);

void BM_TriggerScore(benchmark::State& state) {
  const auto cfg = TriggerConfig::defaults();
  const auto prior = StaticPriorConfig::defaults();
  corpus();
  for (auto _ : state) {
    double sum = 0;
    for (const auto& r : corpus()) {
      sum += score_invocation(r, static_capability_score(r.skill, prior), cfg);
    }
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}
BENCHMARK(BM_TriggerScore);

void BM_RankMetrics(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  std::vector<double> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    t[i] = rng.uniform();
  }
  for (auto _ : state) benchmark::DoNotOptimize(rank_metrics(s, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RankMetrics)->Arg(500)->Arg(3000);

void BM_CalibrationMetrics(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> s(3000), t(3000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    t[i] = rng.uniform();
  }
  for (auto _ : state) benchmark::DoNotOptimize(calibration_metrics(s, t));
}
BENCHMARK(BM_CalibrationMetrics);

void BM_GridSearch(benchmark::State& state) {
  RunConfig cfg;
  cfg.fusion.selection.threads = static_cast<unsigned>(state.range(0));
  const auto val = val_split();
  for (auto _ : state) {
    benchmark::DoNotOptimize(calibrate(cfg, val, Selector::kContinuousRiskFirst));
  }
}
BENCHMARK(BM_GridSearch)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(generate_corpus(GenSpec{}));
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
