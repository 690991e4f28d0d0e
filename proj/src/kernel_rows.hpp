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

#pragma once

// Per-row bodies shared by the serial and parallel kernels. Keeping a single
// definition is what makes the two flavours agree bit for bit.

#include <cstddef>

namespace cfs3d::kernels::detail {

inline void matmul_row(const double* a, const double* b, double* c, std::size_t i, std::size_t k,
                       std::size_t m) {
  double* out = c + i * m;
  for (std::size_t j = 0; j < m; ++j) out[j] = 0.0;
  const double* arow = a + i * k;
  for (std::size_t p = 0; p < k; ++p) {
    const double s = arow[p];
    if (s == 0.0) continue;
    const double* brow = b + p * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += s * brow[j];
  }
}

inline void matmul_at_b_row(const double* a, const double* b, double* c, std::size_t p,
                            std::size_t n, std::size_t k, std::size_t m) {
  double* out = c + p * m;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = a[i * k + p];
    if (s == 0.0) continue;
    const double* brow = b + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += s * brow[j];
  }
}

inline void matmul_a_bt_row(const double* a, const double* b, double* c, std::size_t i,
                            std::size_t m, std::size_t k) {
  const double* arow = a + i * m;
  double* out = c + i * k;
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * m;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += arow[j] * brow[j];
    out[p] += acc;
  }
}

inline double squared_distance(const double* x, const double* y, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = x[j] - y[j];
    acc += diff * diff;
  }
  return acc;
}

inline void mean_shift_seed(const double* points, std::size_t n, std::size_t d, double* seed,
                            double bandwidth, double shift_tol, std::size_t max_iters,
                            double* scratch) {
  const double bw2 = bandwidth * bandwidth;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t j = 0; j < d; ++j) scratch[j] = 0.0;
    std::size_t count = 0;
    for (std::size_t q = 0; q < n; ++q) {
      const double* pt = points + q * d;
      if (squared_distance(pt, seed, d) <= bw2) {
        for (std::size_t j = 0; j < d; ++j) scratch[j] += pt[j];
        ++count;
      }
    }
    if (count == 0) return;
    double shift2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double next = scratch[j] / static_cast<double>(count);
      const double diff = next - seed[j];
      shift2 += diff * diff;
      seed[j] = next;
    }
    if (shift2 < shift_tol * shift_tol) return;
  }
}

inline std::size_t count_within_row(const double* points, std::size_t n, std::size_t d,
                                    const double* center, double radius) {
  const double r2 = radius * radius;
  std::size_t count = 0;
  for (std::size_t q = 0; q < n; ++q) {
    if (squared_distance(points + q * d, center, d) <= r2) ++count;
  }
  return count;
}

}  // namespace cfs3d::kernels::detail
