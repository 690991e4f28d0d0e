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

#include "cfs3d/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cfs3d/error.hpp"
#include "cfs3d/kernels.hpp"

namespace cfs3d::diffcore {
namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " must be a matrix, got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "softmax_rows") return Activation::softmax_rows;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  require_matrix(x, "linear input");
  require_matrix(w, "linear weight");
  const std::size_t n = x.rows(), k = x.cols(), m = w.cols();
  if (w.rows() != k || b.size() != m) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + " does not conform to weight " +
                         shape_string(w.shape()) + " and bias " + shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros({n, m});
  auto y = out.values();
  kernels::matmul(x.values(), w.values(), y, n, k, m);
  const auto bias = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) y[i * m + j] += bias[j];
  }
  tape.record({x, w, b}, out, [x = Tensor(x), w = Tensor(w), b = Tensor(b), out, n, k, m]() mutable {
    const auto gy = std::as_const(out).grad();
    if (x.requires_grad()) kernels::matmul_a_bt_acc(gy, w.values(), x.grad(), n, m, k);
    if (w.requires_grad()) kernels::matmul_at_b_acc(x.values(), gy, w.grad(), n, k, m);
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) gb[j] += gy[i * m + j];
      }
    }
  });
  return out;
}

Tensor activation(Tape& tape, const Tensor& x, Activation kind) {
  const std::size_t size = x.size();
  Tensor out = Tensor::zeros(x.shape());
  auto y = out.values();
  const auto v = x.values();
  switch (kind) {
    case Activation::identity:
      std::copy(v.begin(), v.end(), y.begin());
      tape.record({x}, out, [x = Tensor(x), out, size]() mutable {
        const auto gy = std::as_const(out).grad();
        auto gx = x.grad();
        for (std::size_t i = 0; i < size; ++i) gx[i] += gy[i];
      });
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < size; ++i) y[i] = v[i] > 0.0 ? v[i] : 0.0;
      tape.record({x}, out, [x = Tensor(x), out, size]() mutable {
        const auto gy = std::as_const(out).grad();
        const auto xv = std::as_const(x).values();
        auto gx = x.grad();
        for (std::size_t i = 0; i < size; ++i) {
          if (xv[i] > 0.0) gx[i] += gy[i];
        }
      });
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < size; ++i) y[i] = sigmoid(v[i]);
      tape.record({x}, out, [x = Tensor(x), out, size]() mutable {
        const auto gy = std::as_const(out).grad();
        const auto yv = std::as_const(out).values();
        auto gx = x.grad();
        for (std::size_t i = 0; i < size; ++i) gx[i] += gy[i] * yv[i] * (1.0 - yv[i]);
      });
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < size; ++i) y[i] = std::tanh(v[i]);
      tape.record({x}, out, [x = Tensor(x), out, size]() mutable {
        const auto gy = std::as_const(out).grad();
        const auto yv = std::as_const(out).values();
        auto gx = x.grad();
        for (std::size_t i = 0; i < size; ++i) gx[i] += gy[i] * (1.0 - yv[i] * yv[i]);
      });
      break;
    case Activation::softmax_rows: {
      require_matrix(x, "softmax_rows input");
      const std::size_t n = x.rows(), m = x.cols();
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = v.data() + i * m;
        double* yr = y.data() + i * m;
        const double mx = *std::max_element(row, row + m);
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) z += (yr[j] = std::exp(row[j] - mx));
        for (std::size_t j = 0; j < m; ++j) yr[j] /= z;
      }
      tape.record({x}, out, [x = Tensor(x), out, n, m]() mutable {
        const auto gy = std::as_const(out).grad();
        const auto yv = std::as_const(out).values();
        auto gx = x.grad();
        for (std::size_t i = 0; i < n; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < m; ++j) dot += gy[i * m + j] * yv[i * m + j];
          for (std::size_t j = 0; j < m; ++j)
            gx[i * m + j] += yv[i * m + j] * (gy[i * m + j] - dot);
        }
      });
      break;
    }
    default:
      throw ConfigError("unsupported activation kind");
  }
  return out;
}

Tensor elementwise(Tape& tape, const Tensor& a, const Tensor& b, Elementwise op) {
  require_same_shape(a, b, op == Elementwise::mul ? "mul" : "add");
  const std::size_t size = a.size();
  Tensor out = Tensor::zeros(a.shape());
  auto y = out.values();
  const auto av = a.values(), bv = b.values();
  if (op == Elementwise::mul) {
    for (std::size_t i = 0; i < size; ++i) y[i] = av[i] * bv[i];
    tape.record({a, b}, out, [a = Tensor(a), b = Tensor(b), out, size]() mutable {
      const auto gy = std::as_const(out).grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        const auto bv = std::as_const(b).values();
        for (std::size_t i = 0; i < size; ++i) ga[i] += gy[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        const auto av = std::as_const(a).values();
        for (std::size_t i = 0; i < size; ++i) gb[i] += gy[i] * av[i];
      }
    });
  } else {
    for (std::size_t i = 0; i < size; ++i) y[i] = av[i] + bv[i];
    tape.record({a, b}, out, [a = Tensor(a), b = Tensor(b), out, size]() mutable {
      const auto gy = std::as_const(out).grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < size; ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < size; ++i) gb[i] += gy[i];
      }
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor out = Tensor::scalar(acc);
  tape.record({x}, out, [x = Tensor(x), out]() mutable {
    const double g = std::as_const(out).grad()[0];
    for (double& gx : x.grad()) gx += g;
  });
  return out;
}

Tensor weighted_sum(Tape& tape, const std::vector<Tensor>& terms,
                    const std::vector<double>& weights) {
  if (terms.size() != weights.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(terms.size()) + " terms but " +
                         std::to_string(weights.size()) + " weights");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!terms[i].is_scalar()) {
      throw DimensionError("weighted_sum: term " + std::to_string(i) + " has shape " +
                           shape_string(terms[i].shape()));
    }
    acc += weights[i] * terms[i][0];
  }
  Tensor out = Tensor::scalar(acc);
  tape.record(terms, out, [terms = std::vector<Tensor>(terms), weights, out]() mutable {
    const double g = std::as_const(out).grad()[0];
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (terms[i].requires_grad()) terms[i].grad()[0] += weights[i] * g;
    }
  });
  return out;
}

Tensor max_pool_rows(Tape& tape, const Tensor& x) {
  require_matrix(x, "max_pool_rows input");
  const std::size_t n = x.rows(), m = x.cols();
  if (n == 0) throw DimensionError("max_pool_rows over zero rows");
  const auto v = x.values();
  Tensor out = Tensor::zeros({1, m});
  auto y = out.values();
  std::vector<std::size_t> argmax(m, 0);
  for (std::size_t j = 0; j < m; ++j) y[j] = v[j];
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (v[i * m + j] > y[j]) {
        y[j] = v[i * m + j];
        argmax[j] = i;
      }
    }
  }
  tape.record({x}, out, [x = Tensor(x), out, argmax = std::move(argmax), m]() mutable {
    const auto gy = std::as_const(out).grad();
    auto gx = x.grad();
    for (std::size_t j = 0; j < m; ++j) gx[argmax[j] * m + j] += gy[j];
  });
  return out;
}

Tensor broadcast_rows(Tape& tape, const Tensor& row, std::size_t n) {
  if (row.rows() != 1) {
    throw DimensionError("broadcast_rows expects a single row, got " + shape_string(row.shape()));
  }
  const std::size_t m = row.cols();
  Tensor out = Tensor::zeros({n, m});
  auto y = out.values();
  const auto r = row.values();
  for (std::size_t i = 0; i < n; ++i) std::copy(r.begin(), r.end(), y.begin() + i * m);
  tape.record({row}, out, [row = Tensor(row), out, n, m]() mutable {
    const auto gy = std::as_const(out).grad();
    auto gr = row.grad();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) gr[j] += gy[i * m + j];
    }
  });
  return out;
}

Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b) {
  require_matrix(a, "concat_cols lhs");
  require_matrix(b, "concat_cols rhs");
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  const std::size_t n = a.rows(), ma = a.cols(), mb = b.cols(), m = ma + mb;
  Tensor out = Tensor::zeros({n, m});
  auto y = out.values();
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(av.begin() + i * ma, ma, y.begin() + i * m);
    std::copy_n(bv.begin() + i * mb, mb, y.begin() + i * m + ma);
  }
  tape.record({a, b}, out, [a = Tensor(a), b = Tensor(b), out, n, ma, mb, m]() mutable {
    const auto gy = std::as_const(out).grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < ma; ++j) ga[i * ma + j] += gy[i * m + j];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < mb; ++j) gb[i * mb + j] += gy[i * m + ma + j];
    }
  });
  return out;
}

}  // namespace cfs3d::diffcore
