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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfs3d/diffcore/gradcheck.hpp"
#include "cfs3d/diffcore/tensor.hpp"

namespace cfs3d {

/// Which coupled feature-selection branches are active. A disabled branch is
/// replaced by a plain per-point affine + relu layer.
enum class CfsmMode { none, ci_s_only, cs_i_only, both };

CfsmMode parse_cfsm_mode(std::string_view name);
std::string_view to_string(CfsmMode mode);

struct ModelConfig {
  std::size_t points_per_block = 512;
  std::size_t input_width = 9;
  std::size_t feature_width = 64;
  std::size_t num_classes = 4;
  std::size_t embedding_dim = 5;
  std::vector<std::size_t> encoder_widths{64, 128, 128};
  CfsmMode cfsm = CfsmMode::both;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct Affine {
  diffcore::Tensor weight;  // in x out
  diffcore::Tensor bias;    // out
};

/// Weights of one coupled branch. The cell and A-gate are applied to both of
/// the branch's inputs with the same weights.
struct CfsmBranchParams {
  Affine cell;
  Affine agate;
  Affine sgate;
};

struct ModelParams {
  std::vector<Affine> encoder;
  Affine projection;
  Affine sem_decoder;
  Affine ins_decoder;
  /// Instance-to-semantic branch (feeds the semantic head) or its MLP stand-in.
  std::optional<CfsmBranchParams> cfsm_sem;
  std::optional<Affine> mlp_sem;
  /// Semantic-to-instance branch (feeds the embedding head) or its MLP stand-in.
  std::optional<CfsmBranchParams> cfsm_ins;
  std::optional<Affine> mlp_ins;
  Affine sem_head;
  Affine ins_head;

  /// Every learnable tensor with a stable dotted name, in a fixed order.
  std::vector<diffcore::NamedTensor> named() const;
  std::size_t parameter_count() const;
  ModelParams clone() const;
};

/// Glorot-uniform weights and zero biases. Every tensor draws from its own
/// stream derived from (seed, name), so shared parts of two variants start
/// identical under the same seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Builds the parameter structure for config around existing named tensors
/// (e.g. loaded from a checkpoint). Throws ConfigError if a name is missing
/// or a shape disagrees.
ModelParams params_from_named(const ModelConfig& config,
                              const std::vector<diffcore::NamedTensor>& tensors);

/// Per-point encoder with a max-pooled global feature: three affine + relu
/// layers, concatenation with the pooled row, projection to feature_width.
diffcore::Tensor encode(diffcore::Tape& tape, const diffcore::Tensor& points,
                        const ModelParams& params, const ModelConfig& config);

/// One coupled feature-selection branch.
///   other = relu(cell(F_other)) * sigmoid(agate(F_other))
///   sel   = sigmoid(sgate(F_self) * other)
///   out   = relu(cell(F_self)) * sigmoid(agate(F_self)) + sel
diffcore::Tensor cfsm_branch(diffcore::Tape& tape, const diffcore::Tensor& self_features,
                             const diffcore::Tensor& other_features, const CfsmBranchParams& p);

struct ForwardOutput {
  diffcore::Tensor logits;      // points x num_classes
  diffcore::Tensor embeddings;  // points x embedding_dim
};

ForwardOutput forward(diffcore::Tape& tape, const diffcore::Tensor& points,
                      const ModelParams& params, const ModelConfig& config);

}  // namespace cfs3d
