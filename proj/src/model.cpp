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

#include "cfs3d/model.hpp"

#include <cmath>
#include <map>

#include "cfs3d/diffcore/ops.hpp"
#include "cfs3d/error.hpp"
#include "cfs3d/rng.hpp"

namespace cfs3d {

using diffcore::Activation;
using diffcore::NamedTensor;
using diffcore::Tape;
using diffcore::Tensor;

CfsmMode parse_cfsm_mode(std::string_view name) {
  if (name == "none") return CfsmMode::none;
  if (name == "ci_s_only") return CfsmMode::ci_s_only;
  if (name == "cs_i_only") return CfsmMode::cs_i_only;
  if (name == "both") return CfsmMode::both;
  throw ConfigError("unknown cfsm mode '" + std::string(name) + "'");
}

std::string_view to_string(CfsmMode mode) {
  switch (mode) {
    case CfsmMode::none: return "none";
    case CfsmMode::ci_s_only: return "ci_s_only";
    case CfsmMode::cs_i_only: return "cs_i_only";
    case CfsmMode::both: return "both";
  }
  return "none";
}

void ModelConfig::validate() const {
  if (points_per_block == 0) throw ConfigError("points_per_block must be positive");
  if (input_width == 0) throw ConfigError("input_width must be positive");
  if (feature_width == 0) throw ConfigError("feature_width must be positive");
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be at least 1");
  if (encoder_widths.empty()) throw ConfigError("encoder_widths must not be empty");
  for (auto w : encoder_widths) {
    if (w == 0) throw ConfigError("encoder_widths entries must be positive");
  }
}

namespace {

bool sem_uses_cfsm(CfsmMode m) { return m == CfsmMode::both || m == CfsmMode::ci_s_only; }
bool ins_uses_cfsm(CfsmMode m) { return m == CfsmMode::both || m == CfsmMode::cs_i_only; }

// Layout of every affine in the model for a config, in naming order.
struct AffineSlot {
  std::string name;
  std::size_t in, out;
};

std::vector<AffineSlot> layout(const ModelConfig& c) {
  std::vector<AffineSlot> slots;
  std::size_t width = c.input_width;
  for (std::size_t i = 0; i < c.encoder_widths.size(); ++i) {
    slots.push_back({"encoder." + std::to_string(i), width, c.encoder_widths[i]});
    width = c.encoder_widths[i];
  }
  const std::size_t f = c.feature_width;
  slots.push_back({"encoder.projection", 2 * width, f});
  slots.push_back({"decoder.sem", f, f});
  slots.push_back({"decoder.ins", f, f});
  if (sem_uses_cfsm(c.cfsm)) {
    slots.push_back({"cfsm.sem.cell", f, f});
    slots.push_back({"cfsm.sem.agate", f, f});
    slots.push_back({"cfsm.sem.sgate", f, f});
  } else {
    slots.push_back({"mlp.sem", f, f});
  }
  if (ins_uses_cfsm(c.cfsm)) {
    slots.push_back({"cfsm.ins.cell", f, f});
    slots.push_back({"cfsm.ins.agate", f, f});
    slots.push_back({"cfsm.ins.sgate", f, f});
  } else {
    slots.push_back({"mlp.ins", f, f});
  }
  slots.push_back({"head.sem", f, c.num_classes});
  slots.push_back({"head.ins", f, c.embedding_dim});
  return slots;
}

template <typename Make>
ModelParams assemble(const ModelConfig& c, Make make) {
  ModelParams p;
  for (std::size_t i = 0; i < c.encoder_widths.size(); ++i)
    p.encoder.push_back(make("encoder." + std::to_string(i)));
  p.projection = make("encoder.projection");
  p.sem_decoder = make("decoder.sem");
  p.ins_decoder = make("decoder.ins");
  if (sem_uses_cfsm(c.cfsm)) {
    p.cfsm_sem =
        CfsmBranchParams{make("cfsm.sem.cell"), make("cfsm.sem.agate"), make("cfsm.sem.sgate")};
  } else {
    p.mlp_sem = make("mlp.sem");
  }
  if (ins_uses_cfsm(c.cfsm)) {
    p.cfsm_ins =
        CfsmBranchParams{make("cfsm.ins.cell"), make("cfsm.ins.agate"), make("cfsm.ins.sgate")};
  } else {
    p.mlp_ins = make("mlp.ins");
  }
  p.sem_head = make("head.sem");
  p.ins_head = make("head.ins");
  return p;
}

void push_affine(std::vector<NamedTensor>& out, const std::string& name, const Affine& a) {
  out.push_back({name + ".weight", a.weight});
  out.push_back({name + ".bias", a.bias});
}

Affine clone_affine(const Affine& a) { return {a.weight.clone(), a.bias.clone()}; }

Tensor affine_relu(Tape& tape, const Tensor& x, const Affine& a) {
  return diffcore::activation(tape, diffcore::linear(tape, x, a.weight, a.bias), Activation::relu);
}

}  // namespace

std::vector<NamedTensor> ModelParams::named() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < encoder.size(); ++i)
    push_affine(out, "encoder." + std::to_string(i), encoder[i]);
  push_affine(out, "encoder.projection", projection);
  push_affine(out, "decoder.sem", sem_decoder);
  push_affine(out, "decoder.ins", ins_decoder);
  if (cfsm_sem) {
    push_affine(out, "cfsm.sem.cell", cfsm_sem->cell);
    push_affine(out, "cfsm.sem.agate", cfsm_sem->agate);
    push_affine(out, "cfsm.sem.sgate", cfsm_sem->sgate);
  }
  if (mlp_sem) push_affine(out, "mlp.sem", *mlp_sem);
  if (cfsm_ins) {
    push_affine(out, "cfsm.ins.cell", cfsm_ins->cell);
    push_affine(out, "cfsm.ins.agate", cfsm_ins->agate);
    push_affine(out, "cfsm.ins.sgate", cfsm_ins->sgate);
  }
  if (mlp_ins) push_affine(out, "mlp.ins", *mlp_ins);
  push_affine(out, "head.sem", sem_head);
  push_affine(out, "head.ins", ins_head);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : named()) n += t.tensor.size();
  return n;
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  for (const auto& a : encoder) p.encoder.push_back(clone_affine(a));
  p.projection = clone_affine(projection);
  p.sem_decoder = clone_affine(sem_decoder);
  p.ins_decoder = clone_affine(ins_decoder);
  if (cfsm_sem)
    p.cfsm_sem = CfsmBranchParams{clone_affine(cfsm_sem->cell), clone_affine(cfsm_sem->agate),
                                  clone_affine(cfsm_sem->sgate)};
  if (mlp_sem) p.mlp_sem = clone_affine(*mlp_sem);
  if (cfsm_ins)
    p.cfsm_ins = CfsmBranchParams{clone_affine(cfsm_ins->cell), clone_affine(cfsm_ins->agate),
                                  clone_affine(cfsm_ins->sgate)};
  if (mlp_ins) p.mlp_ins = clone_affine(*mlp_ins);
  p.sem_head = clone_affine(sem_head);
  p.ins_head = clone_affine(ins_head);
  return p;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::map<std::string, AffineSlot> slots;
  for (auto& s : layout(config)) slots.emplace(s.name, s);
  return assemble(config, [&](const std::string& name) {
    const auto& s = slots.at(name);
    Rng rng(mix_seed(seed, hash_name(name)));
    const double limit = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    std::vector<double> w(s.in * s.out);
    for (auto& x : w) x = rng.uniform(-limit, limit);
    return Affine{Tensor::matrix(s.in, s.out, std::move(w), true), Tensor::zeros({s.out}, true)};
  });
}

ModelParams params_from_named(const ModelConfig& config, const std::vector<NamedTensor>& tensors) {
  config.validate();
  std::map<std::string, Tensor> by_name;
  for (const auto& t : tensors) by_name.emplace(t.name, t.tensor);
  std::map<std::string, AffineSlot> slots;
  for (auto& s : layout(config)) slots.emplace(s.name, s);
  auto fetch = [&](const std::string& name, const diffcore::Shape& shape) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("missing parameter '" + name + "'");
    if (it->second.shape() != shape) {
      throw ConfigError("parameter '" + name + "' has shape " +
                        diffcore::shape_string(it->second.shape()) + ", expected " +
                        diffcore::shape_string(shape));
    }
    Tensor t = it->second;
    t.set_requires_grad(true);
    return t;
  };
  return assemble(config, [&](const std::string& name) {
    const auto& s = slots.at(name);
    return Affine{fetch(name + ".weight", {s.in, s.out}), fetch(name + ".bias", {s.out})};
  });
}

Tensor encode(Tape& tape, const Tensor& points, const ModelParams& params,
              const ModelConfig& config) {
  if (points.rank() != 2 || points.cols() != config.input_width) {
    throw DimensionError("encoder expects points x " + std::to_string(config.input_width) +
                         " input, got " + diffcore::shape_string(points.shape()));
  }
  Tensor h = points;
  for (const auto& layer : params.encoder) h = affine_relu(tape, h, layer);
  const Tensor global = diffcore::max_pool_rows(tape, h);
  const Tensor joined =
      diffcore::concat_cols(tape, h, diffcore::broadcast_rows(tape, global, h.rows()));
  return affine_relu(tape, joined, params.projection);
}

Tensor cfsm_branch(Tape& tape, const Tensor& self_features, const Tensor& other_features,
                   const CfsmBranchParams& p) {
  if (self_features.shape() != other_features.shape()) {
    throw DimensionError("cfsm_branch: feature shapes differ " +
                         diffcore::shape_string(self_features.shape()) + " vs " +
                         diffcore::shape_string(other_features.shape()));
  }
  auto cell_gate = [&](const Tensor& f) {
    const Tensor cell = affine_relu(tape, f, p.cell);
    const Tensor gate = diffcore::activation(
        tape, diffcore::linear(tape, f, p.agate.weight, p.agate.bias), Activation::sigmoid);
    return diffcore::mul(tape, cell, gate);
  };
  const Tensor other = cell_gate(other_features);
  const Tensor sgate = diffcore::linear(tape, self_features, p.sgate.weight, p.sgate.bias);
  const Tensor selected =
      diffcore::activation(tape, diffcore::mul(tape, sgate, other), Activation::sigmoid);
  return diffcore::add(tape, cell_gate(self_features), selected);
}

ForwardOutput forward(Tape& tape, const Tensor& points, const ModelParams& params,
                      const ModelConfig& config) {
  const Tensor shared = encode(tape, points, params, config);
  const Tensor sem = affine_relu(tape, shared, params.sem_decoder);
  const Tensor ins = affine_relu(tape, shared, params.ins_decoder);

  const Tensor sem_fused = params.cfsm_sem ? cfsm_branch(tape, sem, ins, *params.cfsm_sem)
                                           : affine_relu(tape, sem, *params.mlp_sem);
  const Tensor ins_fused = params.cfsm_ins ? cfsm_branch(tape, ins, sem, *params.cfsm_ins)
                                           : affine_relu(tape, ins, *params.mlp_ins);

  ForwardOutput out;
  out.logits = diffcore::linear(tape, sem_fused, params.sem_head.weight, params.sem_head.bias);
  out.embeddings = diffcore::linear(tape, ins_fused, params.ins_head.weight, params.ins_head.bias);
  return out;
}

}  // namespace cfs3d
