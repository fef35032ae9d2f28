#include <memory>

#include <benchmark/benchmark.h>

#include "mcuq/clustering.hpp"
#include "mcuq/estimators.hpp"
#include "mcuq/metrics.hpp"
#include "mcuq/rng.hpp"
#include "mcuq/synthetic_backend.hpp"
#include "mcuq/temperature.hpp"

using namespace mcuq;

namespace {

std::vector<ScoredLabel> scored(std::size_t n, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<ScoredLabel> items;
  for (std::size_t i = 0; i < n; ++i) {
    const bool incorrect = i % 2 == 0;
    items.push_back({"q" + std::to_string(i), rng.normal(incorrect ? 1.0 : 0.0, 1.0), incorrect});
  }
  return items;
}

SampleSet sample_set(int k, std::uint64_t seed) {
  Rng rng(seed);
  SampleSet set{"q", "mct", {}, {"a", 0.1, std::vector<double>{-0.1}}, 0.7};
  for (int i = 0; i < k; ++i) {
    std::vector<double> lp(8);
    for (double& x : lp) x = -3.0 * rng.uniform();
    set.samples.push_back({"answer " + std::to_string(rng.index(3)), 0.5, lp});
  }
  return set;
}

}  // namespace

static void BM_Auroc(benchmark::State& state) {
  const auto items = scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(auroc(items));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oNLogN);

static void BM_Aurac(benchmark::State& state) {
  const auto items = scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(aurac(items));
}
BENCHMARK(BM_Aurac)->Arg(300)->Arg(3000);

static void BM_BootstrapAuroc(benchmark::State& state) {
  const auto items = scored(300);
  const auto fn = metric_function(Metric::kAuroc);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bootstrap_ci(items, Metric::kAuroc, fn, {.draws = static_cast<int>(state.range(0)), .seed = 3}));
  }
}
BENCHMARK(BM_BootstrapAuroc)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Estimators(benchmark::State& state) {
  const auto set = sample_set(static_cast<int>(state.range(0)), 5);
  ClusterPartition part{"q", {}};
  std::vector<int> first_of(3, -1);
  for (const auto& s : set.samples) {
    const int label = s.text.back() - '0';
    if (first_of[label] < 0) first_of[label] = part.num_clusters();
    part.assignment.push_back(first_of[label]);
  }
  for (auto _ : state) {
    for (Estimator e : kAllEstimators) benchmark::DoNotOptimize(estimate(e, set, part));
  }
}
BENCHMARK(BM_Estimators)->Arg(5)->Arg(20);

static void BM_ClusterSynthetic(benchmark::State& state) {
  SyntheticParams params;
  params.seed = 9;
  const auto world = std::make_shared<const SyntheticWorld>(params);
  SyntheticBackend backend("synth", world);
  SyntheticJudge judge("judge", world);
  const Question q{"q1", "Question 1?", "answer 1"};
  const int k = static_cast<int>(state.range(0));
  const auto schedule = mct_schedule(0.1, 1.0, k, 4);
  std::vector<GenerationSample> samples;
  for (int i = 0; i < k; ++i) samples.push_back(backend.complete(q, schedule.values[i], i));
  for (auto _ : state) benchmark::DoNotOptimize(cluster_samples(judge, q, samples));
}
BENCHMARK(BM_ClusterSynthetic)->Arg(5)->Arg(20);

static void BM_MctSchedule(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mct_schedule(0.1, 1.0, 5, ++seed));
}
BENCHMARK(BM_MctSchedule);
BENCHMARK_MAIN();
