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

#include <string_view>
#include <vector>

#include "cfs3d/diffcore/tensor.hpp"

namespace cfs3d::diffcore {

enum class Activation { relu, sigmoid, tanh, softmax_rows, identity };

/// Parses "relu", "sigmoid", "tanh", "softmax_rows" or "identity".
/// Throws ConfigError for anything else.
Activation parse_activation(std::string_view name);

enum class Elementwise { mul, add };

/// Per-row affine map X * W + b, i.e. a 1x1 convolution over points.
/// X is n x d_in, W is d_in x d_out, b has d_out entries.
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

Tensor activation(Tape& tape, const Tensor& x, Activation kind);

/// Same-shape product or sum.
Tensor elementwise(Tape& tape, const Tensor& a, const Tensor& b, Elementwise op);

inline Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return elementwise(tape, a, b, Elementwise::mul);
}
inline Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return elementwise(tape, a, b, Elementwise::add);
}

/// Sum of all entries, as a scalar.
Tensor sum(Tape& tape, const Tensor& x);

/// sum_i weights[i] * terms[i], accumulated left to right. All terms scalar.
Tensor weighted_sum(Tape& tape, const std::vector<Tensor>& terms,
                    const std::vector<double>& weights);

/// Column-wise maximum of an n x d matrix -> 1 x d. Ties route the gradient
/// to the lowest row index.
Tensor max_pool_rows(Tape& tape, const Tensor& x);

/// Repeats a 1 x d row n times -> n x d.
Tensor broadcast_rows(Tape& tape, const Tensor& row, std::size_t n);

/// [A | B] for matrices with equal row counts.
Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b);

}  // namespace cfs3d::diffcore
