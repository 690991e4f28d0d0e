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

// Independent reference computations used by the tests. Everything here is
// written from the definitions with plain loops and sets, sharing no code
// with the library beyond its data types.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cfs3d/matrix.hpp"

namespace cfs3d::oracle {

struct SemScores {
  double oAcc, mAcc, mIoU;
};
SemScores semantic(std::span<const int> pred, std::span<const int> gt, int num_classes);

struct CovScores {
  double mCov, mWCov;
};
CovScores coverage(std::span<const int> pred_inst, std::span<const int> gt_inst,
                   std::span<const int> gt_sem, int num_classes);

struct PrScores {
  double mPrec, mRec;
};
/// Valid for thresholds >= 0.5, where at most one partner per instance can
/// exceed the threshold and one-to-one matching is therefore unique.
PrScores prec_rec(std::span<const int> pred_inst, std::span<const int> gt_inst,
                  std::span<const int> pred_sem, std::span<const int> gt_sem, int num_classes,
                  double threshold);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Number of distinct values.
std::size_t distinct(std::span<const int> labels);

struct Planted {
  Matrix points;
  std::vector<int> labels;
  std::size_t k = 0;
};
/// k clusters of the given sizes with centers at least separation apart and
/// every point within radius of its center.
Planted planted_clusters(std::size_t k, std::size_t per_cluster, std::size_t dim, double separation,
                         double radius, std::uint64_t seed);

}  // namespace cfs3d::oracle
