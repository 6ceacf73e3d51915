// Copyright 2026 The rlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// O(N^2) pair sums: OpenMP kernel, the same kernel on one thread, and the
// plain serial reference.  Args: N, s (x10).

#include <benchmark/benchmark.h>

#include "rlab/dynamics.hpp"
#include "rlab/energy.hpp"
#include "rlab/measure.hpp"

namespace
{
using namespace rlab;

Configuration points(std::size_t N)
{
    return BackgroundMeasure::uniform_ball(Vec::Zero(2), 1.0).sample(N, 17);
}

void BM_PairParallel(benchmark::State& st)
{
    const Configuration c = points(st.range(0));
    const RieszKernel K = make_kernel(2, st.range(1) / 10.0);
    for (auto _ : st) benchmark::DoNotOptimize(pair_term(c, K, true));
    st.SetComplexityN(st.range(0));
}

void BM_PairSerial(benchmark::State& st)
{
    const Configuration c = points(st.range(0));
    const RieszKernel K = make_kernel(2, st.range(1) / 10.0);
    for (auto _ : st) benchmark::DoNotOptimize(pair_term(c, K, false));
    st.SetComplexityN(st.range(0));
}

void BM_PairReference(benchmark::State& st)
{
    const Configuration c = points(st.range(0));
    const RieszKernel K = make_kernel(2, st.range(1) / 10.0);
    for (auto _ : st) benchmark::DoNotOptimize(pair_term_reference(c, K));
    st.SetComplexityN(st.range(0));
}

void BM_FlowVelocity(benchmark::State& st)
{
    const Configuration c = points(st.range(0));
    const ReferenceSolution ref = ReferenceSolution::stationary(make_kernel(2, 0.0));
    const FlowSpec fl = ref.flow(1e-3, 1.0);
    for (auto _ : st) benchmark::DoNotOptimize(flow_velocity(c, fl));
    st.SetComplexityN(st.range(0));
}

void sizes(benchmark::internal::Benchmark* b)
{
    for (int s : {0, 10})
        for (int n : {256, 1024, 4096}) b->Args({n, s});
}
}  // namespace

BENCHMARK(BM_PairParallel)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairSerial)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairReference)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FlowVelocity)->Args({1024, 0})->Args({4096, 0})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
