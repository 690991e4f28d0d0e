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

#include "cfs3d/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "cfs3d/error.hpp"
#include "cfs3d/rng.hpp"

namespace cfs3d {
namespace {

std::size_t blocks_along(double extent, double size, double stride) {
  if (extent <= size) return 1;
  return static_cast<std::size_t>(std::ceil((extent - size) / stride - 1e-9)) + 1;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

std::vector<Block> split_blocks(const PointCloud& scene, double block_size, double stride) {
  if (!(block_size > 0.0)) throw ConfigError("block size must be positive");
  if (!(stride > 0.0 && stride <= block_size))
    throw ConfigError("stride must be in (0, block size]");
  if (scene.size() == 0) throw DataError("cannot split an empty scene");

  const SceneFrame frame = scene_frame(scene);
  const std::size_t nx = blocks_along(frame.max[0] - frame.min[0], block_size, stride);
  const std::size_t ny = blocks_along(frame.max[1] - frame.min[1], block_size, stride);

  std::vector<Block> blocks;
  for (std::size_t by = 0; by < ny; ++by) {
    for (std::size_t bx = 0; bx < nx; ++bx) {
      Block b;
      b.origin_x = frame.min[0] + static_cast<double>(bx) * stride;
      b.origin_y = frame.min[1] + static_cast<double>(by) * stride;
      for (std::size_t i = 0; i < scene.size(); ++i) {
        const auto& p = scene.xyz[i];
        if (p[0] >= b.origin_x && p[0] <= b.origin_x + block_size && p[1] >= b.origin_y &&
            p[1] <= b.origin_y + block_size) {
          b.indices.push_back(i);
        }
      }
      if (!b.indices.empty()) blocks.push_back(std::move(b));
    }
  }
  return blocks;
}

std::vector<std::size_t> sample_block(const Block& block, std::size_t count, std::uint64_t seed) {
  if (block.indices.empty()) throw DataError("cannot sample an empty block");
  Rng rng(seed);
  std::vector<std::size_t> out = block.indices;
  if (out.size() >= count) {
    // Partial Fisher-Yates: the first count slots are a uniform sample.
    for (std::size_t i = 0; i < count; ++i) std::swap(out[i], out[i + rng.below(out.size() - i)]);
    out.resize(count);
    return out;
  }
  while (out.size() < count) out.push_back(block.indices[rng.below(block.indices.size())]);
  shuffle(out, rng);
  return out;
}

std::vector<std::vector<std::size_t>> cover_block(const Block& block, std::size_t count,
                                                  std::uint64_t seed) {
  if (block.indices.empty()) throw DataError("cannot sample an empty block");
  if (count == 0) throw ConfigError("sample size must be positive");
  Rng rng(seed);
  std::vector<std::size_t> order = block.indices;
  shuffle(order, rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += count) {
    const std::size_t end = std::min(order.size(), start + count);
    std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    while (chunk.size() < count) chunk.push_back(block.indices[rng.below(block.indices.size())]);
    out.push_back(std::move(chunk));
  }
  return out;
}

SceneFrame scene_frame(const PointCloud& scene) {
  if (scene.size() == 0) throw DataError("empty scene has no bounds");
  SceneFrame f{scene.xyz[0], scene.xyz[0]};
  for (const auto& p : scene.xyz) {
    for (int j = 0; j < 3; ++j) {
      f.min[j] = std::min(f.min[j], p[j]);
      f.max[j] = std::max(f.max[j], p[j]);
    }
  }
  return f;
}

std::size_t feature_width(const PointCloud& scene) { return scene.has_rgb() ? 9 : 3; }

Matrix block_features(const PointCloud& scene, const SceneFrame& frame, const Block& block,
                      double block_size, std::span<const std::size_t> rows) {
  const std::size_t width = feature_width(scene);
  Matrix out(rows.size(), width);
  const double cx = block.origin_x + 0.5 * block_size, cy = block.origin_y + 0.5 * block_size;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& p = scene.xyz[rows[r]];
    auto row = out.row(r);
    row[0] = p[0] - cx;
    row[1] = p[1] - cy;
    row[2] = p[2] - frame.min[2];
    if (width == 9) {
      const auto& c = (*scene.rgb)[rows[r]];
      row[3] = c[0];
      row[4] = c[1];
      row[5] = c[2];
      for (int j = 0; j < 3; ++j) {
        const double extent = frame.max[j] - frame.min[j];
        row[6 + j] = extent > 0.0 ? (p[j] - frame.min[j]) / extent : 0.0;
      }
    }
  }
  return out;
}

std::size_t MergeGrid::CellHash::operator()(const CellKey& k) const {
  std::uint64_t h = mix_seed(static_cast<std::uint64_t>(k.x), static_cast<std::uint64_t>(k.y));
  return static_cast<std::size_t>(mix_seed(h, static_cast<std::uint64_t>(k.z)));
}

MergeGrid::MergeGrid(double cell_size, double overlap_threshold)
    : cell_size_(cell_size), overlap_threshold_(overlap_threshold) {
  if (!(cell_size > 0.0)) throw ConfigError("merge cell size must be positive");
  if (!(overlap_threshold >= 0.0 && overlap_threshold < 1.0))
    throw ConfigError("merge overlap threshold must be in [0, 1)");
}

MergeGrid::CellKey MergeGrid::cell_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p[0] / cell_size_)),
          static_cast<std::int64_t>(std::floor(p[1] / cell_size_)),
          static_cast<std::int64_t>(std::floor(p[2] / cell_size_))};
}

std::vector<int> MergeGrid::merge(const PointCloud& scene, std::span<const std::size_t> rows,
                                  std::span<const int> local_labels,
                                  std::span<const int> row_classes) {
  if (rows.size() != local_labels.size()) {
    throw DimensionError("block_merging: " + std::to_string(rows.size()) + " rows but " +
                         std::to_string(local_labels.size()) + " labels");
  }
  if (!row_classes.empty() && row_classes.size() != rows.size()) {
    throw DimensionError("block_merging: " + std::to_string(rows.size()) + " rows but " +
                         std::to_string(row_classes.size()) + " classes");
  }
  auto key_less = [](const CellKey& a, const CellKey& b) {
    return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
  };
  std::map<int, std::set<CellKey, decltype(key_less)>> cells_of;
  std::map<int, std::map<int, std::size_t>> class_votes;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    cells_of.try_emplace(local_labels[r], key_less)
        .first->second.insert(cell_of(scene.xyz[rows[r]]));
    ++class_votes[local_labels[r]][row_classes.empty() ? 0 : row_classes[r]];
  }

  std::map<int, int> global_of;
  for (const auto& [local, cells] : cells_of) {
    int cls = 0;
    std::size_t cls_count = 0;
    for (const auto& [c, count] : class_votes[local]) {
      if (count > cls_count) {
        cls = c;
        cls_count = count;
      }
    }
    std::map<int, std::size_t> hits;
    for (const auto& c : cells) {
      const auto it = cells_.find(c);
      if (it != cells_.end() && it->second.cls == cls) ++hits[it->second.id];
    }
    int id = -1;
    std::size_t best = 0;
    for (const auto& [gid, count] : hits) {
      if (count > best) {
        best = count;
        id = gid;
      }
    }
    if (id < 0 ||
        static_cast<double>(best) / static_cast<double>(cells.size()) <= overlap_threshold_) {
      id = next_id_++;
    }
    for (const auto& c : cells) cells_[c] = {id, cls};
    global_of[local] = id;
  }

  std::vector<int> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = global_of[local_labels[r]];
  return out;
}

PredictionWriteBack::PredictionWriteBack(std::size_t num_points, std::size_t num_classes)
    : num_classes_(num_classes), votes_(num_points * num_classes, 0), instance_(num_points, -1) {}

void PredictionWriteBack::add(std::span<const std::size_t> rows, std::span<const int> semantic,
                              std::span<const int> instance) {
  if (rows.size() != semantic.size() || rows.size() != instance.size()) {
    throw DimensionError("write-back: rows, semantic and instance lengths differ");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (semantic[r] < 0 || static_cast<std::size_t>(semantic[r]) >= num_classes_) {
      throw DataError("write-back: class " + std::to_string(semantic[r]) + " out of range");
    }
    ++votes_[rows[r] * num_classes_ + static_cast<std::size_t>(semantic[r])];
    instance_[rows[r]] = instance[r];
  }
}

std::pair<std::vector<int>, std::vector<int>> PredictionWriteBack::finish() const {
  const std::size_t n = instance_.size();
  std::vector<int> sem(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (instance_[i] < 0) throw DataError("point " + std::to_string(i) + " received no prediction");
    const auto* v = votes_.data() + i * num_classes_;
    sem[i] = static_cast<int>(std::max_element(v, v + num_classes_) - v);
  }
  return {std::move(sem), densify_ids(instance_)};
}

}  // namespace cfs3d
