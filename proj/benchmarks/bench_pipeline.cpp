// Copyright 2026 The Buoy Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "buoy/imaging.hpp"
#include "buoy/protocol.hpp"
#include "buoy/stats.hpp"

namespace {

using namespace buoy;

void BM_SynthesizeOD(benchmark::State& state) {
  ImagingGeometry g;
  g.width = g.height = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_od(CloudModel{}, g));
}
BENCHMARK(BM_SynthesizeOD)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_NoiseAndOD(benchmark::State& state) {
  const ODImage truth = synthesize_od(CloudModel{}, ImagingGeometry{});
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(compute_od(apply_noise(truth, 1.0, 0.02, ++seed), truth.geometry));
}
BENCHMARK(BM_NoiseAndOD)->Unit(benchmark::kMillisecond);

void BM_FitGaussian(benchmark::State& state) {
  const ODImage truth = synthesize_od(CloudModel{}, ImagingGeometry{});
  const ODImage noisy = compute_od(apply_noise(truth, 1.0, 0.02, 7), truth.geometry);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gaussian(noisy));
}
BENCHMARK(BM_FitGaussian)->Unit(benchmark::kMillisecond);

void BM_FastCampaign(benchmark::State& state) {
  ShotConfig config;
  config.alpha = compute_alpha(reference_assembly());
  config.stray_field = Vec3(0, 0.03, -0.01);
  CampaignPlan plan;
  plan.grid = bias_grid({0.0}, {-0.3, -0.15, 0.0, 0.15, 0.3}, {0.0});
  plan.shots_per_condition = 100;
  const unsigned workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_campaign(config, plan, workers));
}
BENCHMARK(BM_FastCampaign)->Arg(1)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_AllanDeviation(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> series(static_cast<std::size_t>(state.range(0)));
  for (auto& v : series) v = n(rng);
  const auto sizes = default_allan_sizes(series.size());
  for (auto _ : state) benchmark::DoNotOptimize(allan_deviation(series, sizes));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AllanDeviation)->RangeMultiplier(10)->Range(1000, 100000)->Complexity(benchmark::oN);

}  // namespace
