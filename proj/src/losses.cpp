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

#include "cfs3d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "cfs3d/diffcore/ops.hpp"
#include "cfs3d/error.hpp"

namespace cfs3d {

using diffcore::Tape;
using diffcore::Tensor;

void LossWeights::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(lambda_reg >= 0.0)) throw ConfigError("lambda_reg must be non-negative");
  if (!(delta_v > 0.0)) throw ConfigError("delta_v must be positive");
  if (!(delta_d > delta_v)) throw ConfigError("delta_d must exceed delta_v");
}

Tensor semantic_ce(Tape& tape, const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw DimensionError("semantic_ce expects a matrix, got " +
                         diffcore::shape_string(logits.shape()));
  }
  const std::size_t n = logits.rows(), c = logits.cols();
  if (labels.size() != n) {
    throw DimensionError("semantic_ce: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " points");
  }
  if (n == 0) throw DataError("semantic_ce over zero points");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DataError("semantic label " + std::to_string(labels[i]) + " out of range at point " +
                      std::to_string(i));
    }
  }
  const auto v = logits.values();
  std::vector<double> probs(n * c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = v.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (probs[i * c + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
    total += -(row[labels[i]] - mx - std::log(z));
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(n));
  std::vector<int> lab(labels.begin(), labels.end());
  tape.record({logits}, out,
              [logits = Tensor(logits), out, probs = std::move(probs), lab = std::move(lab), n,
               c]() mutable {
                const double g = std::as_const(out).grad()[0] / static_cast<double>(n);
                auto gx = logits.grad();
                for (std::size_t i = 0; i < n; ++i) {
                  for (std::size_t j = 0; j < c; ++j) {
                    const double target = static_cast<int>(j) == lab[i] ? 1.0 : 0.0;
                    gx[i * c + j] += g * (probs[i * c + j] - target);
                  }
                }
              });
  return out;
}

namespace {

// Groups rows by instance id (ascending id order) and computes centroids.
struct Grouping {
  std::size_t dim = 0;
  std::vector<std::size_t> group_of;  // per point, dense group index
  std::vector<std::size_t> counts;
  std::vector<double> centroids;  // groups x dim
  std::size_t groups() const { return counts.size(); }
};

Grouping group_embeddings(const Tensor& e, std::span<const int> labels) {
  if (e.rank() != 2) {
    throw DimensionError("embeddings must be a matrix, got " + diffcore::shape_string(e.shape()));
  }
  const std::size_t n = e.rows(), d = e.cols();
  if (labels.size() != n) {
    throw DimensionError("instance loss: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " points");
  }
  if (n == 0) throw DataError("instance loss over an empty point set");
  std::map<int, std::size_t> dense;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0) {
      throw DataError("negative instance label at point " + std::to_string(i));
    }
    dense.emplace(labels[i], 0);
  }
  std::size_t next = 0;
  for (auto& kv : dense) kv.second = next++;

  Grouping g;
  g.dim = d;
  g.group_of.resize(n);
  g.counts.assign(next, 0);
  g.centroids.assign(next * d, 0.0);
  const auto v = e.values();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = dense[labels[i]];
    g.group_of[i] = k;
    ++g.counts[k];
    for (std::size_t j = 0; j < d; ++j) g.centroids[k * d + j] += v[i * d + j];
  }
  for (std::size_t k = 0; k < next; ++k) {
    for (std::size_t j = 0; j < d; ++j) g.centroids[k * d + j] /= static_cast<double>(g.counts[k]);
  }
  return g;
}

double norm(const double* x, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) acc += x[j] * x[j];
  return std::sqrt(acc);
}

// Adds the gradient flowing into centroids (groups x dim) to the embeddings.
void scatter_centroid_grad(const Grouping& g, const std::vector<double>& centroid_grad,
                           std::span<double> ge) {
  const std::size_t d = g.dim;
  for (std::size_t i = 0; i < g.group_of.size(); ++i) {
    const std::size_t k = g.group_of[i];
    const double inv = 1.0 / static_cast<double>(g.counts[k]);
    for (std::size_t j = 0; j < d; ++j) ge[i * d + j] += centroid_grad[k * d + j] * inv;
  }
}

Tensor variance_term(Tape& tape, const Tensor& e, const Grouping& g, double delta_v) {
  const std::size_t n = e.rows(), d = g.dim, k = g.groups();
  const auto v = e.values();
  // coef[i] * (mu - e_i) is d(term)/d(mu - e_i).
  std::vector<double> coef(n, 0.0);
  std::vector<double> per_group(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gi = g.group_of[i];
    double dist2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = g.centroids[gi * d + j] - v[i * d + j];
      dist2 += diff * diff;
    }
    const double dist = std::sqrt(dist2);
    const double hinge = std::max(0.0, dist - delta_v);
    per_group[gi] += hinge * hinge;
    if (hinge > 0.0) {
      coef[i] = 2.0 * hinge / dist / (static_cast<double>(k) * static_cast<double>(g.counts[gi]));
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) total += per_group[c] / static_cast<double>(g.counts[c]);
  Tensor out = Tensor::scalar(total / static_cast<double>(k));
  tape.record({e}, out, [e = Tensor(e), out, g, coef = std::move(coef), n, d, k]() mutable {
    const double s = std::as_const(out).grad()[0];
    const auto v = std::as_const(e).values();
    auto ge = e.grad();
    std::vector<double> mu_grad(k * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (coef[i] == 0.0) continue;
      const std::size_t gi = g.group_of[i];
      for (std::size_t j = 0; j < d; ++j) {
        const double gd = s * coef[i] * (g.centroids[gi * d + j] - v[i * d + j]);
        ge[i * d + j] -= gd;
        mu_grad[gi * d + j] += gd;
      }
    }
    scatter_centroid_grad(g, mu_grad, ge);
  });
  return out;
}

Tensor distance_term(Tape& tape, const Tensor& e, const Grouping& g, double delta_d) {
  const std::size_t d = g.dim, k = g.groups();
  if (k < 2) {
    Tensor zero = Tensor::scalar(0.0);
    tape.record({e}, zero, [] {});
    return zero;
  }
  const double pairs = static_cast<double>(k * (k - 1) / 2);
  std::vector<double> mu_grad(k * d, 0.0);  // per unit upstream gradient
  double total = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double dist2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = g.centroids[a * d + j] - g.centroids[b * d + j];
        dist2 += diff * diff;
      }
      const double dist = std::sqrt(dist2);
      const double hinge = std::max(0.0, 2.0 * delta_d - dist);
      total += hinge * hinge;
      if (hinge > 0.0 && dist > 0.0) {
        const double c = -2.0 * hinge / dist / pairs;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = g.centroids[a * d + j] - g.centroids[b * d + j];
          mu_grad[a * d + j] += c * diff;
          mu_grad[b * d + j] -= c * diff;
        }
      }
    }
  }
  Tensor out = Tensor::scalar(total / pairs);
  tape.record({e}, out, [e = Tensor(e), out, g, mu_grad = std::move(mu_grad)]() mutable {
    const double s = std::as_const(out).grad()[0];
    std::vector<double> scaled(mu_grad.size());
    for (std::size_t i = 0; i < mu_grad.size(); ++i) scaled[i] = s * mu_grad[i];
    scatter_centroid_grad(g, scaled, e.grad());
  });
  return out;
}

Tensor regularizer_term(Tape& tape, const Tensor& e, const Grouping& g) {
  const std::size_t d = g.dim, k = g.groups();
  std::vector<double> mu_grad(k * d, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double nrm = norm(g.centroids.data() + c * d, d);
    total += nrm;
    if (nrm > 0.0) {
      for (std::size_t j = 0; j < d; ++j)
        mu_grad[c * d + j] = g.centroids[c * d + j] / (nrm * static_cast<double>(k));
    }
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(k));
  tape.record({e}, out, [e = Tensor(e), out, g, mu_grad = std::move(mu_grad)]() mutable {
    const double s = std::as_const(out).grad()[0];
    std::vector<double> scaled(mu_grad.size());
    for (std::size_t i = 0; i < mu_grad.size(); ++i) scaled[i] = s * mu_grad[i];
    scatter_centroid_grad(g, scaled, e.grad());
  });
  return out;
}

}  // namespace

InstanceLossTerms discriminative_loss(Tape& tape, const Tensor& embeddings,
                                      std::span<const int> instance_labels,
                                      const LossWeights& weights) {
  const Grouping g = group_embeddings(embeddings, instance_labels);
  return {variance_term(tape, embeddings, g, weights.delta_v),
          distance_term(tape, embeddings, g, weights.delta_d),
          regularizer_term(tape, embeddings, g)};
}

Tensor equilibrium_loss(Tape& tape, const Tensor& embeddings) {
  if (embeddings.rank() != 2) {
    throw DimensionError("equilibrium_loss expects a matrix, got " +
                         diffcore::shape_string(embeddings.shape()));
  }
  const std::size_t n = embeddings.rows(), d = embeddings.cols();
  if (n == 0 || d == 0) throw DimensionError("equilibrium_loss over an empty matrix");
  const auto v = embeddings.values();
  std::vector<double> means(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) means[j] += v[i * d + j];
  for (auto& m : means) m /= static_cast<double>(n);
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= static_cast<double>(d);
  double total = 0.0;
  for (double m : means) total += (m - mu) * (m - mu);
  Tensor out = Tensor::scalar(total / static_cast<double>(d));
  tape.record({embeddings}, out,
              [embeddings = Tensor(embeddings), out, means = std::move(means), mu, n, d]() mutable {
                const double s = std::as_const(out).grad()[0];
                auto ge = embeddings.grad();
                const double scale = 2.0 * s / (static_cast<double>(d) * static_cast<double>(n));
                for (std::size_t i = 0; i < n; ++i)
                  for (std::size_t j = 0; j < d; ++j) ge[i * d + j] += scale * (means[j] - mu);
              });
  return out;
}

TotalLoss total_loss(Tape& tape, const Tensor& logits, const Tensor& embeddings,
                     std::span<const int> semantic_labels, std::span<const int> instance_labels,
                     const LossWeights& weights) {
  weights.validate();
  if (semantic_labels.size() != logits.rows() || instance_labels.size() != embeddings.rows()) {
    throw DimensionError("total_loss: label arrays do not match point count");
  }
  const Tensor sem = semantic_ce(tape, logits, semantic_labels);
  const InstanceLossTerms ins = discriminative_loss(tape, embeddings, instance_labels, weights);
  const Tensor emed = equilibrium_loss(tape, embeddings);
  TotalLoss out;
  out.total = diffcore::weighted_sum(
      tape, {sem, ins.var, ins.dist, ins.reg, emed},
      {weights.semantic_weight, 1.0, 1.0, weights.lambda_reg, weights.alpha});
  out.report = LossReport{sem.item(),     ins.var.item(), ins.dist.item(),
                          ins.reg.item(), emed.item(),    out.total.item()};
  return out;
}

}  // namespace cfs3d
