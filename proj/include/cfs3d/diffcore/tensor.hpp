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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfs3d/matrix.hpp"

namespace cfs3d::diffcore {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Shared handle to a shape-tagged array of doubles plus an optional gradient
/// buffer. Copies alias the same storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);
  static Tensor from_matrix(const Matrix& m, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  std::size_t rank() const { return s_->shape.size(); }
  std::size_t size() const { return s_->values.size(); }
  /// Rows/cols of a rank-2 tensor; a rank-1 tensor is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;
  bool is_scalar() const { return size() == 1; }

  std::span<const double> values() const { return s_->values; }
  std::span<double> values() { return s_->values; }
  double item() const;
  double operator[](std::size_t i) const { return s_->values[i]; }

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool flag) { s_->requires_grad = flag; }

  bool has_grad() const { return !s_->grad.empty(); }
  std::span<const double> grad() const { return s_->grad; }
  std::span<double> grad() { return s_->grad; }
  /// Allocates a zero gradient if none exists yet.
  std::span<double> ensure_grad();
  void zero_grad();
  void drop_grad() { s_->grad.clear(); }

  Tensor clone() const;
  Matrix to_matrix() const;

  bool same_storage(const Tensor& other) const { return s_ == other.s_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

/// Ordered record of executed operations. Entries are appended as ops run,
/// so every entry's inputs were produced earlier (or are leaves).
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  /// Registers an op producing output from inputs. Nothing is recorded when
  /// no input requires a gradient; otherwise the output is marked as
  /// requiring one and backward_fn will be invoked during backward().
  void record(std::vector<Tensor> inputs, Tensor& output, BackwardFn backward_fn);

  /// Reverse sweep from a scalar root. Gradients of leaf tensors are
  /// accumulated (callers zero them between steps); gradients of
  /// intermediate outputs are reset before the sweep.
  void backward(const Tensor& root);

  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

}  // namespace cfs3d::diffcore
