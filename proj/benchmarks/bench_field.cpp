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

#include <benchmark/benchmark.h>

#include "buoy/magnetostatics.hpp"
#include "buoy/trap_model.hpp"

namespace {

using namespace buoy;

const Drive kMot{{reference_names::kMot, kNominalMotCurrent}};

void BM_SegmentKernel(benchmark::State& state) {
  const Vec3 p0(-10, 3, 1), p1(12, -4, 2), at(0.1, 0.2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(field_of_segment(p0, p1, 1.0, at));
}
BENCHMARK(BM_SegmentKernel);

void BM_LoopField(benchmark::State& state) {
  FilamentLoop loop;
  loop.radius = 40.0;
  loop.current = 1.0;
  const int segments = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(field_of_loop(loop, Vec3(1, 2, 3), segments));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LoopField)->RangeMultiplier(2)->Range(90, 1440)->Complexity(benchmark::oN);

void BM_ReferenceFieldPoint(benchmark::State& state) {
  const FieldModel model(reference_assembly());
  for (auto _ : state) benchmark::DoNotOptimize(model.field(kMot, Vec3(0.01, 0.02, 0.03)));
}
BENCHMARK(BM_ReferenceFieldPoint);

void BM_ReferenceGradient(benchmark::State& state) {
  const FieldModel model(reference_assembly());
  for (auto _ : state) benchmark::DoNotOptimize(model.gradient(kMot, Vec3::Zero()));
}
BENCHMARK(BM_ReferenceGradient);

void BM_BuildFieldModel(benchmark::State& state) {
  const CoilAssembly assembly = reference_assembly();
  for (auto _ : state) benchmark::DoNotOptimize(FieldModel(assembly));
}
BENCHMARK(BM_BuildFieldModel)->Unit(benchmark::kMillisecond);

void BM_NewtonOnCoilField(benchmark::State& state) {
  const FieldModel model(reference_assembly());
  const Vec3 b(0.0, 0.025, -0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        find_zero_numerical([&](const Vec3& r) { return Vec3(model.field(kMot, r) + b); }, Vec3::Zero()));
  }
}
BENCHMARK(BM_NewtonOnCoilField)->Unit(benchmark::kMicrosecond);

}  // namespace
