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

#include "cfs3d/diffcore/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "cfs3d/error.hpp"

namespace cfs3d::diffcore {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : s_(std::make_shared<Storage>()) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
  s_->shape = std::move(shape);
  s_->values = std::move(values);
  s_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
  return Tensor({m.rows, m.cols}, m.data, requires_grad);
}

std::size_t Tensor::rows() const {
  if (rank() == 2) return s_->shape[0];
  if (rank() <= 1) return 1;
  throw DimensionError("expected a matrix, got shape " + shape_string(shape()));
}

std::size_t Tensor::cols() const {
  if (rank() == 2) return s_->shape[1];
  if (rank() == 1) return s_->shape[0];
  if (rank() == 0) return 1;
  throw DimensionError("expected a matrix, got shape " + shape_string(shape()));
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item() on tensor of shape " + shape_string(shape()));
  return s_->values[0];
}

std::span<double> Tensor::ensure_grad() {
  if (s_->grad.size() != s_->values.size()) s_->grad.assign(s_->values.size(), 0.0);
  return s_->grad;
}

void Tensor::zero_grad() { s_->grad.assign(s_->values.size(), 0.0); }

Tensor Tensor::clone() const {
  Tensor out(s_->shape, s_->values, s_->requires_grad);
  out.s_->grad = s_->grad;
  return out;
}

Matrix Tensor::to_matrix() const { return Matrix(rows(), cols(), s_->values); }

void Tape::record(std::vector<Tensor> inputs, Tensor& output, BackwardFn backward_fn) {
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return;
  output.set_requires_grad(true);
  entries_.push_back(Entry{std::move(inputs), output, std::move(backward_fn)});
}

void Tape::backward(const Tensor& root) {
  if (!root.defined() || !root.is_scalar()) {
    throw UsageError("backward root must be scalar, got shape " +
                     (root.defined() ? shape_string(root.shape()) : std::string("undefined")));
  }
  const auto it = std::find_if(entries_.begin(), entries_.end(),
                               [&](const Entry& e) { return e.output.same_storage(root); });
  if (it == entries_.end()) throw UsageError("backward root was not produced on this tape");

  for (auto& e : entries_) e.output.zero_grad();
  for (auto& e : entries_) {
    for (auto& in : e.inputs) {
      if (in.requires_grad()) in.ensure_grad();
    }
  }
  Tensor r = root;
  r.grad()[0] = 1.0;
  const auto stop = std::distance(entries_.begin(), it);
  for (auto i = stop; i >= 0; --i) entries_[static_cast<std::size_t>(i)].backward();
}

}  // namespace cfs3d::diffcore
