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

#include <cstdint>
#include <vector>

#include "cfs3d/kernels.hpp"
#include "kernel_rows.hpp"

namespace cfs3d::kernels::parallel {
namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1u << 16;

using Index = std::int64_t;

}  // namespace

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m) {
  const Index rows = static_cast<Index>(n);
#pragma omp parallel for schedule(static) if (n * k * m >= kParallelWork)
  for (Index i = 0; i < rows; ++i)
    detail::matmul_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), k, m);
}

void matmul_at_b_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t n, std::size_t k, std::size_t m) {
  const Index rows = static_cast<Index>(k);
#pragma omp parallel for schedule(static) if (n * k * m >= kParallelWork)
  for (Index p = 0; p < rows; ++p)
    detail::matmul_at_b_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(p), n, k, m);
}

void matmul_a_bt_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t n, std::size_t m, std::size_t k) {
  const Index rows = static_cast<Index>(n);
#pragma omp parallel for schedule(static) if (n * k * m >= kParallelWork)
  for (Index i = 0; i < rows; ++i)
    detail::matmul_a_bt_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), m, k);
}

void mean_shift_converge(std::span<const double> points, std::size_t n, std::size_t d,
                         std::span<double> seeds, std::size_t s, const MeanShiftParams& p) {
  const Index count = static_cast<Index>(s);
#pragma omp parallel if (s * n >= kParallelWork)
  {
    std::vector<double> scratch(d);
#pragma omp for schedule(dynamic, 16)
    for (Index i = 0; i < count; ++i) {
      detail::mean_shift_seed(points.data(), n, d, seeds.data() + static_cast<std::size_t>(i) * d,
                              p.bandwidth, p.shift_tol, p.max_iters, scratch.data());
    }
  }
}

void count_within(std::span<const double> points, std::size_t n, std::size_t d,
                  std::span<const double> centers, std::size_t c, double radius,
                  std::span<std::size_t> out) {
  const Index count = static_cast<Index>(c);
#pragma omp parallel for schedule(static) if (c * n >= kParallelWork)
  for (Index i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = detail::count_within_row(
        points.data(), n, d, centers.data() + static_cast<std::size_t>(i) * d, radius);
  }
}

}  // namespace cfs3d::kernels::parallel
