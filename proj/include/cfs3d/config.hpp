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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cfs3d/cluster.hpp"
#include "cfs3d/losses.hpp"
#include "cfs3d/model.hpp"
#include "cfs3d/scene.hpp"

namespace cfs3d {

/// Ablation variants. cfsm_post clusters mean-removed embeddings and trains
/// without the equilibrium term; 3dcfs trains with it and clusters raw
/// embeddings.
enum class Variant { baseline, ci_s, cs_i, cfsm, cfsm_post, full };

Variant parse_variant(std::string_view name);
std::string_view to_string(Variant v);

struct RunConfig {
  ModelConfig model;
  LossWeights loss;
  MeanShiftConfig mean_shift;
  SceneSpec scene;

  double block_size = 1.0;
  double block_stride = 0.5;
  double merge_cell = 0.1;
  double merge_overlap = 0.3;

  double lr = 1e-3;
  std::uint64_t decay_steps = 2000;
  std::size_t epochs = 30;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  Variant variant = Variant::full;

  std::size_t gradcheck_points = 32;
  std::size_t gradcheck_instances = 3;
  double gradcheck_eps = 1e-5;

  std::vector<std::string> class_names = scene_class_names();

  /// Model config with the variant's CFSM wiring applied.
  ModelConfig effective_model() const;
  /// Loss weights with the variant's alpha applied (0 unless 3dcfs).
  LossWeights effective_loss() const;
  bool mean_removal() const { return variant == Variant::cfsm_post; }

  void validate() const;
};

/// Parses the flat key=value format ('#' starts a comment). Unknown keys and
/// malformed values raise ConfigError naming the line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// key=value lines for the model part of a config (used in checkpoints).
std::string format_model_config(const ModelConfig& config);
ModelConfig parse_model_config(const std::map<std::string, std::string>& kv);

/// Splits key=value text into a map; shared by config and checkpoint readers.
std::map<std::string, std::string> parse_key_values(const std::string& text);

}  // namespace cfs3d
