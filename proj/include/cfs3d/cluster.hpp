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

#include <map>
#include <span>
#include <vector>

#include "cfs3d/matrix.hpp"

namespace cfs3d {

struct MeanShiftConfig {
  double bandwidth = 0.6;
  std::size_t max_iters = 300;
  /// Convergence threshold on the seed shift; <= 0 means 1e-3 * bandwidth.
  double shift_tol = 0.0;
  /// Modes closer than this are merged; <= 0 means bandwidth.
  double merge_radius = 0.0;

  double effective_shift_tol() const { return shift_tol > 0.0 ? shift_tol : 1e-3 * bandwidth; }
  double effective_merge_radius() const { return merge_radius > 0.0 ? merge_radius : bandwidth; }
  void validate() const;
};

struct ClusterResult {
  std::vector<int> labels;  // per point, in [0, K)
  Matrix modes;             // K x dim
  std::size_t num_clusters() const { return modes.rows; }
};

/// Flat-kernel mean-shift seeded at every point. Converged seeds are ranked
/// by basin size (points within bandwidth of the mode, larger first, ties to
/// the lower point index) and a mode survives only if no better-ranked
/// survivor lies within merge_radius. Points go to the nearest survivor.
/// Cluster ids are numbered by first occurrence in point order.
ClusterResult mean_shift(const Matrix& embeddings, const MeanShiftConfig& config);

struct VoteResult {
  std::map<int, int> instance_class;  // instance id -> voted class
  std::vector<int> point_classes;     // per point, the voted class of its instance
};

/// Assigns every instance the most frequent predicted class among its points
/// (ties to the smallest class id) and relabels the points accordingly.
VoteResult semantic_mode_vote(std::span<const int> instance_labels,
                              std::span<const int> semantic_preds);

/// Subtracts each column's mean.
Matrix mean_removal(const Matrix& embeddings);

}  // namespace cfs3d
