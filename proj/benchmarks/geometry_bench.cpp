#include <benchmark/benchmark.h>

#include "fetalscreen/biometrics.hpp"
#include "fetalscreen/geometry.hpp"
#include "fetalscreen/perturb.hpp"
#include "fetalscreen/phantom.hpp"

namespace {

using namespace fetalscreen;

const PhantomStudy& study() {
  static const PhantomStudy s = [] {
    PhantomParams p;
    p.period = 20;
    p.n_frames = 60;
    p.render_images = false;
    return generate_phantom_study(p);
  }();
  return s;
}

void BM_ConnectedComponents(benchmark::State& state) {
  const auto& mask = *study().masks[0].ctr;
  for (auto _ : state) benchmark::DoNotOptimize(connected_components(mask, ctr_label::kThorax));
}
BENCHMARK(BM_ConnectedComponents);

void BM_Perimeter(benchmark::State& state) {
  const auto region = connected_components(*study().masks[0].ctr, ctr_label::kThorax).at(0);
  for (auto _ : state) benchmark::DoNotOptimize(perimeter(region));
}
BENCHMARK(BM_Perimeter);

void BM_CardiacAxis(benchmark::State& state) {
  const auto& mask = *study().masks[0].axis;
  for (auto _ : state) benchmark::DoNotOptimize(cardiac_axis(mask));
}
BENCHMARK(BM_CardiacAxis);

void BM_MeasureStudy(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(measure_study(study().masks));
}
BENCHMARK(BM_MeasureStudy)->Unit(benchmark::kMillisecond);

void BM_PerturbAxisMask(benchmark::State& state) {
  const auto& mask = *study().masks[0].axis;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(perturb_mask(mask, 0.8, ++seed));
}
BENCHMARK(BM_PerturbAxisMask)->Unit(benchmark::kMillisecond);

}  // namespace
