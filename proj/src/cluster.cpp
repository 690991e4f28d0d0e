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

#include "cfs3d/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "cfs3d/error.hpp"
#include "cfs3d/kernels.hpp"

namespace cfs3d {

void MeanShiftConfig::validate() const {
  if (!(bandwidth > 0.0)) throw ConfigError("mean-shift bandwidth must be positive");
  if (max_iters < 1) throw ConfigError("mean-shift max_iters must be at least 1");
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

ClusterResult mean_shift(const Matrix& embeddings, const MeanShiftConfig& config) {
  config.validate();
  const std::size_t n = embeddings.rows, d = embeddings.cols;
  ClusterResult result;
  if (n == 0) {
    result.modes = Matrix(0, d);
    return result;
  }

  Matrix seeds = embeddings;
  kernels::mean_shift_converge(embeddings.data, n, d, seeds.data, n,
                               {config.bandwidth, config.effective_shift_tol(), config.max_iters});
  std::vector<std::size_t> basin(n);
  kernels::count_within(embeddings.data, n, d, seeds.data, n, config.bandwidth, basin);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return basin[a] > basin[b]; });

  const double merge2 = config.effective_merge_radius() * config.effective_merge_radius();
  std::vector<std::size_t> kept;
  for (std::size_t s : order) {
    const bool near = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return squared_distance(seeds.row(s), seeds.row(k)) <= merge2;
    });
    if (!near) kept.push_back(s);
  }

  // Nearest surviving mode per point; ties go to the better-ranked mode.
  std::vector<std::size_t> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const double dist = squared_distance(embeddings.row(i), seeds.row(kept[k]));
      if (dist < best) {
        best = dist;
        nearest[i] = k;
      }
    }
  }

  std::vector<int> renumber(kept.size(), -1);
  std::vector<std::size_t> mode_order;
  result.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    int& id = renumber[nearest[i]];
    if (id < 0) {
      id = static_cast<int>(mode_order.size());
      mode_order.push_back(kept[nearest[i]]);
    }
    result.labels[i] = id;
  }
  result.modes = Matrix(mode_order.size(), d);
  for (std::size_t k = 0; k < mode_order.size(); ++k) {
    const auto src = seeds.row(mode_order[k]);
    std::copy(src.begin(), src.end(), result.modes.row(k).begin());
  }
  return result;
}

VoteResult semantic_mode_vote(std::span<const int> instance_labels,
                              std::span<const int> semantic_preds) {
  if (instance_labels.size() != semantic_preds.size()) {
    throw DimensionError("semantic_mode_vote: " + std::to_string(instance_labels.size()) +
                         " instance labels vs " + std::to_string(semantic_preds.size()) +
                         " semantic predictions");
  }
  if (instance_labels.empty()) throw DataError("semantic_mode_vote: no instances");
  std::map<int, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < instance_labels.size(); ++i)
    ++counts[instance_labels[i]][semantic_preds[i]];

  VoteResult out;
  for (const auto& [inst, hist] : counts) {
    int best = hist.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [cls, c] : hist) {
      if (c > best_count) {
        best = cls;
        best_count = c;
      }
    }
    out.instance_class[inst] = best;
  }
  out.point_classes.resize(instance_labels.size());
  for (std::size_t i = 0; i < instance_labels.size(); ++i)
    out.point_classes[i] = out.instance_class[instance_labels[i]];
  return out;
}

Matrix mean_removal(const Matrix& embeddings) {
  Matrix out = embeddings;
  if (embeddings.rows == 0) return out;
  std::vector<double> means(embeddings.cols, 0.0);
  for (std::size_t i = 0; i < embeddings.rows; ++i)
    for (std::size_t j = 0; j < embeddings.cols; ++j) means[j] += embeddings(i, j);
  for (auto& m : means) m /= static_cast<double>(embeddings.rows);
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) -= means[j];
  return out;
}

}  // namespace cfs3d
