#include <benchmark/benchmark.h>

#include <vector>

#include "fetalscreen/evaluation.hpp"
#include "fetalscreen/random.hpp"

namespace {

using namespace fetalscreen;

void BM_CStatistic(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.3);
  }
  for (auto _ : state) benchmark::DoNotOptimize(c_statistic(scores, labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CStatistic)->RangeMultiplier(8)->Range(64, 32768)->Complexity();

void BM_RocCurve(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> scores(4096);
  std::vector<int> labels(4096);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.3);
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_curve(scores, labels));
}
BENCHMARK(BM_RocCurve);

void BM_MannWhitney(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> a(n), b(n);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(mann_whitney_u(a, b));
}
BENCHMARK(BM_MannWhitney)->Arg(5)->Arg(50)->Arg(5000);

}  // namespace
