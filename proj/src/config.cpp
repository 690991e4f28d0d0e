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

#include "cfs3d/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "cfs3d/error.hpp"

namespace cfs3d {

Variant parse_variant(std::string_view name) {
  if (name == "baseline") return Variant::baseline;
  if (name == "ci_s") return Variant::ci_s;
  if (name == "cs_i") return Variant::cs_i;
  if (name == "cfsm") return Variant::cfsm;
  if (name == "cfsm_post") return Variant::cfsm_post;
  if (name == "3dcfs") return Variant::full;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::ci_s: return "ci_s";
    case Variant::cs_i: return "cs_i";
    case Variant::cfsm: return "cfsm";
    case Variant::cfsm_post: return "cfsm_post";
    case Variant::full: return "3dcfs";
  }
  return "3dcfs";
}

ModelConfig RunConfig::effective_model() const {
  ModelConfig m = model;
  switch (variant) {
    case Variant::baseline: m.cfsm = CfsmMode::none; break;
    case Variant::ci_s: m.cfsm = CfsmMode::ci_s_only; break;
    case Variant::cs_i: m.cfsm = CfsmMode::cs_i_only; break;
    default: m.cfsm = CfsmMode::both; break;
  }
  return m;
}

LossWeights RunConfig::effective_loss() const {
  LossWeights w = loss;
  if (variant != Variant::full) w.alpha = 0.0;
  return w;
}

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  mean_shift.validate();
  if (variant == Variant::full && !(loss.alpha > 0.0))
    throw ConfigError("variant 3dcfs requires alpha > 0");
  if (!(block_size > 0.0)) throw ConfigError("block_size must be positive");
  if (!(block_stride > 0.0 && block_stride <= block_size))
    throw ConfigError("block_stride must be in (0, block_size]");
  if (!(merge_cell > 0.0)) throw ConfigError("merge_cell must be positive");
  if (!(merge_overlap >= 0.0 && merge_overlap < 1.0))
    throw ConfigError("merge_overlap must be in [0, 1)");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (decay_steps == 0) throw ConfigError("decay_steps must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (gradcheck_points == 0 || gradcheck_points > 64)
    throw ConfigError("gradcheck_points must be in [1, 64]");
  if (gradcheck_instances == 0) throw ConfigError("gradcheck_instances must be positive");
  if (!(gradcheck_eps > 0.0)) throw ConfigError("gradcheck_eps must be positive");
  if (class_names.size() < model.num_classes)
    throw ConfigError("class_names lists fewer names than num_classes");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (kv.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

std::map<std::string, Setter> model_setters(ModelConfig& m) {
  auto size = [](std::size_t& field) {
    return [&field](const std::string& k, const std::string& v) { field = to_uint(k, v); };
  };
  return {
      {"points_per_block", size(m.points_per_block)},
      {"input_width", size(m.input_width)},
      {"feature_width", size(m.feature_width)},
      {"num_classes", size(m.num_classes)},
      {"embedding_dim", size(m.embedding_dim)},
      {"encoder_widths",
       [&m](const std::string& k, const std::string& v) {
         m.encoder_widths.clear();
         for (const auto& w : to_list(v)) m.encoder_widths.push_back(to_uint(k, w));
       }},
      {"cfsm", [&m](const std::string&, const std::string& v) { m.cfsm = parse_cfsm_mode(v); }},
  };
}

}  // namespace

ModelConfig parse_model_config(const std::map<std::string, std::string>& kv) {
  ModelConfig m;
  auto setters = model_setters(m);
  for (const auto& [k, v] : kv) {
    const auto it = setters.find(k);
    if (it != setters.end()) it->second(k, v);
  }
  m.validate();
  return m;
}

std::string format_model_config(const ModelConfig& m) {
  std::string widths;
  for (std::size_t i = 0; i < m.encoder_widths.size(); ++i) {
    if (i) widths += ",";
    widths += std::to_string(m.encoder_widths[i]);
  }
  return "points_per_block=" + std::to_string(m.points_per_block) + "\n" +
         "input_width=" + std::to_string(m.input_width) + "\n" +
         "feature_width=" + std::to_string(m.feature_width) + "\n" +
         "num_classes=" + std::to_string(m.num_classes) + "\n" +
         "embedding_dim=" + std::to_string(m.embedding_dim) + "\n" + "encoder_widths=" + widths +
         "\n" + "cfsm=" + std::string(to_string(m.cfsm)) + "\n";
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  auto setters = model_setters(c.model);
  auto num = [](double& field) {
    return [&field](const std::string& k, const std::string& v) { field = to_double(k, v); };
  };
  auto size = [](std::size_t& field) {
    return [&field](const std::string& k, const std::string& v) { field = to_uint(k, v); };
  };
  auto u64 = [](std::uint64_t& field) {
    return [&field](const std::string& k, const std::string& v) { field = to_uint(k, v); };
  };
  std::map<std::string, Setter> more{
      {"alpha", num(c.loss.alpha)},
      {"lambda_reg", num(c.loss.lambda_reg)},
      {"delta_v", num(c.loss.delta_v)},
      {"delta_d", num(c.loss.delta_d)},
      {"semantic_weight", num(c.loss.semantic_weight)},
      {"bandwidth", num(c.mean_shift.bandwidth)},
      {"max_iters", size(c.mean_shift.max_iters)},
      {"shift_tol", num(c.mean_shift.shift_tol)},
      {"merge_radius", num(c.mean_shift.merge_radius)},
      {"block_size", num(c.block_size)},
      {"block_stride", num(c.block_stride)},
      {"merge_cell", num(c.merge_cell)},
      {"merge_overlap", num(c.merge_overlap)},
      {"lr", num(c.lr)},
      {"decay_steps", u64(c.decay_steps)},
      {"epochs", size(c.epochs)},
      {"batch_size", size(c.batch_size)},
      {"seed", u64(c.seed)},
      {"variant", [&c](const std::string&, const std::string& v) { c.variant = parse_variant(v); }},
      {"gradcheck_points", size(c.gradcheck_points)},
      {"gradcheck_instances", size(c.gradcheck_instances)},
      {"gradcheck_eps", num(c.gradcheck_eps)},
      {"class_names",
       [&c](const std::string&, const std::string& v) { c.class_names = to_list(v); }},
      {"room_x", num(c.scene.room_x)},
      {"room_y", num(c.scene.room_y)},
      {"wall_height", num(c.scene.wall_height)},
      {"min_objects", size(c.scene.min_objects)},
      {"max_objects", size(c.scene.max_objects)},
      {"object_size_min", num(c.scene.object_size_min)},
      {"object_size_max", num(c.scene.object_size_max)},
      {"object_height_min", num(c.scene.object_height_min)},
      {"object_height_max", num(c.scene.object_height_max)},
      {"object_points_min", size(c.scene.object_points_min)},
      {"object_points_max", size(c.scene.object_points_max)},
      {"surface_density", num(c.scene.surface_density)},
      {"clearance", num(c.scene.clearance)},
      {"noise_sigma", num(c.scene.noise_sigma)},
      {"shapes",
       [&c](const std::string& k, const std::string& v) {
         c.scene.shapes.clear();
         for (const auto& s : to_list(v)) {
           if (s == "box") {
             c.scene.shapes.push_back(ShapeKind::box);
           } else if (s == "cylinder") {
             c.scene.shapes.push_back(ShapeKind::cylinder);
           } else {
             throw ConfigError("key '" + k + "': unknown shape '" + s + "'");
           }
         }
       }},
  };
  setters.merge(more);
  for (const auto& [k, v] : parse_key_values(text)) {
    const auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown config key '" + k + "'");
    it->second(k, v);
  }
  c.scene.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace cfs3d
