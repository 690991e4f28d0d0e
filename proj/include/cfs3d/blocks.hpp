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

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "cfs3d/matrix.hpp"
#include "cfs3d/point_cloud.hpp"

namespace cfs3d {

/// A square column of the scene on the ground plane.
struct Block {
  std::vector<std::size_t> indices;  // into the parent scene, ascending
  double origin_x = 0.0;             // min corner, meters
  double origin_y = 0.0;
};

/// Tiles the XY bounding rectangle with size x size blocks at the given
/// stride. Membership is closed on both ends, so points on a shared edge
/// belong to both blocks. Empty blocks are dropped. Order is row-major with
/// x varying fastest.
std::vector<Block> split_blocks(const PointCloud& scene, double block_size, double stride);

/// Draws count scene indices from the block: without replacement when the
/// block has at least count points, otherwise every point once plus uniform
/// draws with replacement. The result is shuffled and fully determined by seed.
std::vector<std::size_t> sample_block(const Block& block, std::size_t count, std::uint64_t seed);

/// Splits a shuffled copy of the block into ceil(n / count) samples of
/// exactly count indices, padding the last one with replacement draws, so
/// every point of the block is predicted at least once.
std::vector<std::vector<std::size_t>> cover_block(const Block& block, std::size_t count,
                                                  std::uint64_t seed);

/// Axis-aligned bounds of a scene, used for the normalized-coordinate features.
struct SceneFrame {
  Vec3 min{};
  Vec3 max{};
};
SceneFrame scene_frame(const PointCloud& scene);

/// 9 with colors (XYZ, RGB, normalized room coordinates), else 3 (XYZ).
std::size_t feature_width(const PointCloud& scene);

/// Feature rows for the given scene indices. XY are relative to the block
/// center and Z to the scene floor; normalized coordinates are the position
/// within the scene bounds in [0, 1].
Matrix block_features(const PointCloud& scene, const SceneFrame& frame, const Block& block,
                      double block_size, std::span<const std::size_t> rows);

/// Sparse voxel grid mapping cells to scene-global instance ids and the
/// semantic class the id was claimed with.
class MergeGrid {
 public:
  explicit MergeGrid(double cell_size = 0.1, double overlap_threshold = 0.3);

  double cell_size() const { return cell_size_; }
  double overlap_threshold() const { return overlap_threshold_; }
  int next_id() const { return next_id_; }
  std::size_t cell_count() const { return cells_.size(); }

  /// Reconciles one block's local instance labels (one per sampled row)
  /// against the ids already in the grid and returns the global id of every
  /// row. Local instances are processed in ascending label order.
  ///
  /// With row_classes given, an instance takes the majority class of its
  /// rows and only cells claimed with that class count as overlap. Without
  /// them every instance has class 0.
  std::vector<int> merge(const PointCloud& scene, std::span<const std::size_t> rows,
                         std::span<const int> local_labels, std::span<const int> row_classes = {});

 private:
  struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const CellKey& k) const;
  };
  CellKey cell_of(const Vec3& p) const;

  double cell_size_;
  double overlap_threshold_;
  int next_id_ = 0;
  struct Claim {
    int id;
    int cls;
  };
  std::unordered_map<CellKey, Claim, CellHash> cells_;
};

inline std::vector<int> block_merging(MergeGrid& grid, const PointCloud& scene,
                                      std::span<const std::size_t> rows,
                                      std::span<const int> local_labels,
                                      std::span<const int> row_classes = {}) {
  return grid.merge(scene, rows, local_labels, row_classes);
}

/// Collects per-block predictions back onto scene points. A point's class is
/// the majority over every row that referenced it (ties to the lower class);
/// its instance comes from the last block added.
class PredictionWriteBack {
 public:
  PredictionWriteBack(std::size_t num_points, std::size_t num_classes);

  void add(std::span<const std::size_t> rows, std::span<const int> semantic,
           std::span<const int> instance);

  /// Per-point class and densely renumbered instance. Throws DataError if a
  /// point never received a prediction.
  std::pair<std::vector<int>, std::vector<int>> finish() const;

 private:
  std::size_t num_classes_;
  std::vector<std::uint32_t> votes_;  // points x classes
  std::vector<int> instance_;
};

}  // namespace cfs3d
