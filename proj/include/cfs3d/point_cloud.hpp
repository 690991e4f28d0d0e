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

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cfs3d {

using Vec3 = std::array<double, 3>;

/// Per-point coordinates (meters), optional colors in [0,1], and optional
/// semantic / instance labels (empty vectors when absent).
struct PointCloud {
  std::vector<Vec3> xyz;
  std::optional<std::vector<Vec3>> rgb;
  std::vector<int> sem;
  std::vector<int> inst;

  std::size_t size() const { return xyz.size(); }
  bool has_rgb() const { return rgb.has_value(); }
  bool has_sem() const { return !sem.empty(); }
  bool has_inst() const { return !inst.empty(); }

  /// Throws DataError if array lengths disagree or labels are negative.
  void validate() const;

  bool operator==(const PointCloud&) const = default;
};

/// Text point format:
///   cfs3d-points v1 n=<N> cols=<c1>,<c2>,...
/// followed by N rows of space-separated values in column order. Columns come
/// from {x,y,z,r,g,b,sem,inst}; x,y,z are mandatory, r,g,b go together.
std::string format_points(const PointCloud& cloud);
PointCloud parse_points(const std::string& text);

void save_points(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud load_points(const std::filesystem::path& path);

/// Renumbers ids to 0..K-1 in order of first occurrence.
std::vector<int> densify_ids(const std::vector<int>& ids);

}  // namespace cfs3d
