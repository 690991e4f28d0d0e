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
#include <string>
#include <vector>

#include "cfs3d/point_cloud.hpp"

namespace cfs3d {

/// Semantic classes produced by the generator.
enum SceneClass : int { kFloor = 0, kWall = 1, kBox = 2, kCylinder = 3 };
inline constexpr int kSceneClassCount = 4;
std::vector<std::string> scene_class_names();

enum class ShapeKind { box, cylinder };

struct SceneSpec {
  double room_x = 2.0;
  double room_y = 2.0;
  double wall_height = 1.0;
  std::size_t min_objects = 2;
  std::size_t max_objects = 3;
  std::vector<ShapeKind> shapes{ShapeKind::box, ShapeKind::cylinder};
  double object_size_min = 0.3;  // footprint edge / diameter, meters
  double object_size_max = 0.5;
  double object_height_min = 0.3;
  double object_height_max = 0.7;
  std::size_t object_points_min = 300;
  std::size_t object_points_max = 500;
  double surface_density = 300.0;  // floor and wall points per square meter
  double clearance = 0.15;         // minimum gap between objects and to walls
  double noise_sigma = 0.005;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Floor and four walls (one instance each) plus objects sampled on box or
/// cylinder surfaces with Gaussian noise truncated at 3 sigma. Colors are a
/// per-class base tone with per-instance and per-point jitter. Instance ids:
/// floor 0, walls 1-4, objects from 5. Fully determined by spec.seed.
PointCloud generate_scene(const SceneSpec& spec);

}  // namespace cfs3d
