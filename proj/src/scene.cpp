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

#include "cfs3d/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cfs3d/error.hpp"
#include "cfs3d/rng.hpp"

namespace cfs3d {

std::vector<std::string> scene_class_names() { return {"floor", "wall", "box", "cylinder"}; }

void SceneSpec::validate() const {
  if (!(room_x > 0.0 && room_y > 0.0 && wall_height > 0.0))
    throw ConfigError("room extents must be positive");
  if (min_objects < 1 || max_objects < min_objects)
    throw ConfigError("object count range must satisfy 1 <= min <= max");
  if (shapes.empty()) throw ConfigError("shape catalog is empty");
  if (!(object_size_min > 0.0 && object_size_max >= object_size_min))
    throw ConfigError("object size range is invalid");
  if (!(object_height_min > 0.0 && object_height_max >= object_height_min))
    throw ConfigError("object height range is invalid");
  if (object_points_min < 1 || object_points_max < object_points_min)
    throw ConfigError("points per object range must satisfy 1 <= min <= max");
  if (!(surface_density > 0.0)) throw ConfigError("surface_density must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  if (object_size_max + 2.0 * clearance > std::min(room_x, room_y) ||
      object_height_max > wall_height)
    throw ConfigError("objects do not fit inside the room");
}

namespace {

struct Placed {
  double cx, cy, half;
};

const Vec3 kBaseColor[kSceneClassCount] = {
    {0.55, 0.45, 0.35}, {0.85, 0.85, 0.80}, {0.75, 0.25, 0.20}, {0.20, 0.35, 0.75}};

class Builder {
 public:
  Builder(const SceneSpec& spec, Rng& rng) : spec_(spec), rng_(rng) { cloud_.rgb.emplace(); }

  void begin_instance(int cls) {
    cls_ = cls;
    for (int j = 0; j < 3; ++j) tone_[j] = kBaseColor[cls][j] + rng_.uniform(-0.08, 0.08);
  }

  void add(Vec3 p) {
    for (auto& c : p) c += spec_.noise_sigma * truncated_normal();
    Vec3 color;
    for (int j = 0; j < 3; ++j) color[j] = std::clamp(tone_[j] + 0.02 * rng_.normal(), 0.0, 1.0);
    cloud_.xyz.push_back(p);
    cloud_.rgb->push_back(color);
    cloud_.sem.push_back(cls_);
    cloud_.inst.push_back(instance_);
  }

  void end_instance() { ++instance_; }

  PointCloud take() { return std::move(cloud_); }

 private:
  // Standard normal cut at 3, so noisy points stay within 3 sigma of the surface.
  double truncated_normal() {
    double z = rng_.normal();
    while (std::abs(z) > 3.0) z = rng_.normal();
    return z;
  }

  const SceneSpec& spec_;
  Rng& rng_;
  PointCloud cloud_;
  int cls_ = 0;
  int instance_ = 0;
  Vec3 tone_{};
};

std::size_t area_points(double area, double density) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(area * density)));
}

void sample_box(Builder& b, Rng& rng, const Placed& o, double height, std::size_t count) {
  const double s = 2.0 * o.half;
  const double top = s * s, side = s * height;
  const double total = top + 4.0 * side;
  for (std::size_t i = 0; i < count; ++i) {
    const double pick = rng.uniform() * total;
    const double u = rng.uniform(-o.half, o.half), v = rng.uniform(0.0, height);
    if (pick < top) {
      b.add({o.cx + u, o.cy + rng.uniform(-o.half, o.half), height});
    } else {
      switch (static_cast<int>((pick - top) / side) % 4) {
        case 0: b.add({o.cx - o.half, o.cy + u, v}); break;
        case 1: b.add({o.cx + o.half, o.cy + u, v}); break;
        case 2: b.add({o.cx + u, o.cy - o.half, v}); break;
        default: b.add({o.cx + u, o.cy + o.half, v}); break;
      }
    }
  }
}

void sample_cylinder(Builder& b, Rng& rng, const Placed& o, double height, std::size_t count) {
  const double r = o.half;
  const double top = std::numbers::pi * r * r, side = 2.0 * std::numbers::pi * r * height;
  for (std::size_t i = 0; i < count; ++i) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    if (rng.uniform() * (top + side) < top) {
      const double rad = r * std::sqrt(rng.uniform());
      b.add({o.cx + rad * std::cos(theta), o.cy + rad * std::sin(theta), height});
    } else {
      b.add({o.cx + r * std::cos(theta), o.cy + r * std::sin(theta), rng.uniform(0.0, height)});
    }
  }
}

}  // namespace

PointCloud generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x5ce7e));
  Builder b(spec, rng);
  const double wx = spec.room_x, wy = spec.room_y, h = spec.wall_height;

  b.begin_instance(kFloor);
  for (std::size_t i = 0, n = area_points(wx * wy, spec.surface_density); i < n; ++i)
    b.add({rng.uniform(0.0, wx), rng.uniform(0.0, wy), 0.0});
  b.end_instance();

  struct Wall {
    bool along_x;
    double fixed;
  };
  for (const Wall w : {Wall{false, 0.0}, Wall{false, wx}, Wall{true, 0.0}, Wall{true, wy}}) {
    b.begin_instance(kWall);
    const double len = w.along_x ? wx : wy;
    for (std::size_t i = 0, n = area_points(len * h, spec.surface_density); i < n; ++i) {
      const double t = rng.uniform(0.0, len), z = rng.uniform(0.0, h);
      b.add(w.along_x ? Vec3{t, w.fixed, z} : Vec3{w.fixed, t, z});
    }
    b.end_instance();
  }

  const std::size_t objects = spec.min_objects + rng.below(spec.max_objects - spec.min_objects + 1);
  std::vector<Placed> placed;
  for (std::size_t k = 0; k < objects; ++k) {
    const ShapeKind kind = spec.shapes[rng.below(spec.shapes.size())];
    const double half = 0.5 * rng.uniform(spec.object_size_min, spec.object_size_max);
    const double height = rng.uniform(spec.object_height_min, spec.object_height_max);
    const double lo = spec.clearance + half;
    Placed o{};
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      o = {rng.uniform(lo, wx - lo), rng.uniform(lo, wy - lo), half};
      ok = std::all_of(placed.begin(), placed.end(), [&](const Placed& q) {
        const double gap = spec.clearance + o.half + q.half;
        return std::abs(o.cx - q.cx) >= gap || std::abs(o.cy - q.cy) >= gap;
      });
    }
    if (!ok)
      throw ConfigError("could not place " + std::to_string(objects) + " objects in the room");
    placed.push_back(o);

    const std::size_t count =
        spec.object_points_min + rng.below(spec.object_points_max - spec.object_points_min + 1);
    b.begin_instance(kind == ShapeKind::box ? kBox : kCylinder);
    if (kind == ShapeKind::box) {
      sample_box(b, rng, o, height, count);
    } else {
      sample_cylinder(b, rng, o, height, count);
    }
    b.end_instance();
  }
  return b.take();
}

}  // namespace cfs3d
