/*
 * Copyright 2026 The cfs3d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Serial reference kernels against their OpenMP counterparts. Thread count
// follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "cfs3d/kernels.hpp"
#include "cfs3d/rng.hpp"

namespace {

using namespace cfs3d;

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

template <auto Kernel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 64, m = 128;
  const auto a = random_values(n * k, 1), b = random_values(k * m, 2);
  std::vector<double> c(n * m);
  for (auto _ : state) {
    Kernel(a, b, c, n, k, m);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * k * m));
}

template <auto Kernel>
void BM_MatmulAtB(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 64, m = 128;
  const auto a = random_values(n * k, 3), b = random_values(n * m, 4);
  std::vector<double> c(k * m);
  for (auto _ : state) {
    Kernel(a, b, c, n, k, m);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * k * m));
}

// Five well-separated blobs in the embedding space, as after training.
std::vector<double> blobs(std::size_t n, std::size_t d) {
  Rng rng(7);
  std::vector<double> v(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const double center = 3.0 * static_cast<double>(i % 5);
    for (std::size_t j = 0; j < d; ++j) v[i * d + j] = (j == 0 ? center : 0.0) + 0.1 * rng.normal();
  }
  return v;
}

template <auto Kernel>
void BM_MeanShift(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 5;
  const auto points = blobs(n, d);
  const kernels::MeanShiftParams p{0.6, 6e-4, 300};
  for (auto _ : state) {
    std::vector<double> seeds = points;
    Kernel(points, n, d, seeds, n, p);
    benchmark::DoNotOptimize(seeds.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

BENCHMARK(BM_Matmul<kernels::serial::matmul>)->Name("matmul/serial")->Arg(512)->Arg(4096);
BENCHMARK(BM_Matmul<kernels::parallel::matmul>)->Name("matmul/parallel")->Arg(512)->Arg(4096);
BENCHMARK(BM_MatmulAtB<kernels::serial::matmul_at_b_acc>)
    ->Name("matmul_at_b/serial")
    ->Arg(512)
    ->Arg(4096);
BENCHMARK(BM_MatmulAtB<kernels::parallel::matmul_at_b_acc>)
    ->Name("matmul_at_b/parallel")
    ->Arg(512)
    ->Arg(4096);
BENCHMARK(BM_MeanShift<kernels::serial::mean_shift_converge>)
    ->Name("mean_shift/serial")
    ->Arg(256)
    ->Arg(1024);
BENCHMARK(BM_MeanShift<kernels::parallel::mean_shift_converge>)
    ->Name("mean_shift/parallel")
    ->Arg(256)
    ->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
