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

#include <cstddef>
#include <span>

// Hot loops of the library in two flavours. serial:: is the reference
// implementation; parallel:: distributes the outer loop with OpenMP. Both
// accumulate every output element in the same order, so their results are
// bitwise identical for any thread count. Library code calls the unqualified
// functions, which forward to parallel::.
namespace cfs3d::kernels {

struct MeanShiftParams {
  double bandwidth;
  double shift_tol;
  std::size_t max_iters;
};

namespace serial {

/// C (n x m) = A (n x k) * B (k x m). C is overwritten.
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);

/// C (k x m) += A^T * B with A (n x k), B (n x m).
void matmul_at_b_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t n, std::size_t k, std::size_t m);

/// C (n x k) += A * B^T with A (n x m), B (k x m).
void matmul_a_bt_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t n, std::size_t m, std::size_t k);

/// Flat-kernel mean-shift. Every row of seeds (s x d) is moved to the mean of
/// the points (n x d) within bandwidth until its shift drops below shift_tol
/// or max_iters is reached. Returns nothing; seeds are updated in place.
void mean_shift_converge(std::span<const double> points, std::size_t n, std::size_t d,
                         std::span<double> seeds, std::size_t s, const MeanShiftParams& p);

/// out[i] = number of points within radius of row i of centers (c x d).
void count_within(std::span<const double> points, std::size_t n, std::size_t d,
                  std::span<const double> centers, std::size_t c, double radius,
                  std::span<std::size_t> out);

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t n, std::size_t k, std::size_t m);
void matmul_at_b_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t n, std::size_t k, std::size_t m);
void matmul_a_bt_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t n, std::size_t m, std::size_t k);
void mean_shift_converge(std::span<const double> points, std::size_t n, std::size_t d,
                         std::span<double> seeds, std::size_t s, const MeanShiftParams& p);
void count_within(std::span<const double> points, std::size_t n, std::size_t d,
                  std::span<const double> centers, std::size_t c, double radius,
                  std::span<std::size_t> out);

}  // namespace parallel

using parallel::count_within;
using parallel::matmul;
using parallel::matmul_a_bt_acc;
using parallel::matmul_at_b_acc;
using parallel::mean_shift_converge;

}  // namespace cfs3d::kernels
