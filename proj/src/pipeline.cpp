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

#include "cfs3d/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "cfs3d/blocks.hpp"
#include "cfs3d/cluster.hpp"
#include "cfs3d/error.hpp"
#include "cfs3d/rng.hpp"

namespace cfs3d {

using diffcore::NamedTensor;
using diffcore::Tape;
using diffcore::Tensor;

namespace {

constexpr std::uint64_t kSampleSalt = 0x73616d706c65ULL;
constexpr std::uint64_t kShuffleSalt = 0x73687566666cULL;
constexpr std::uint64_t kCoverSalt = 0x636f766572ULL;

std::uint64_t block_seed(std::uint64_t seed, std::uint64_t salt, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
  return mix_seed(mix_seed(mix_seed(mix_seed(seed, salt), a), b), c);
}

void add_report(LossReport& acc, const LossReport& r) {
  acc.semantic += r.semantic;
  acc.ins_var += r.ins_var;
  acc.ins_dist += r.ins_dist;
  acc.ins_reg += r.ins_reg;
  acc.emed += r.emed;
  acc.total += r.total;
}

void scale_report(LossReport& r, double s) {
  r.semantic *= s;
  r.ins_var *= s;
  r.ins_dist *= s;
  r.ins_reg *= s;
  r.emed *= s;
  r.total *= s;
}

std::vector<NamedTensor> clone_named(const std::vector<NamedTensor>& in) {
  std::vector<NamedTensor> out;
  out.reserve(in.size());
  for (const auto& t : in) out.push_back({t.name, t.tensor.clone()});
  return out;
}

std::string group_of(const std::string& name) {
  for (const char* suffix : {".weight", ".bias"}) {
    const std::string s(suffix);
    if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0)
      return name.substr(0, name.size() - s.size());
  }
  return name;
}

}  // namespace

std::vector<TrainBlock> training_blocks(const std::vector<PointCloud>& scenes,
                                        const RunConfig& config) {
  std::vector<TrainBlock> out;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const PointCloud& scene = scenes[s];
    if (!scene.has_sem() || !scene.has_inst())
      throw DataError("training scene " + std::to_string(s) + " lacks sem/inst labels");
    const SceneFrame frame = scene_frame(scene);
    auto blocks = split_blocks(scene, config.block_size, config.block_stride);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      out.push_back({&scene, s, b, std::move(blocks[b]), frame});
  }
  return out;
}

BlockBatch sample_training_block(const TrainBlock& tb, const RunConfig& config,
                                 std::uint64_t epoch) {
  const auto rows =
      sample_block(tb.block, config.model.points_per_block,
                   block_seed(config.seed, kSampleSalt, epoch, tb.scene_index, tb.block_index));
  BlockBatch batch;
  batch.features = block_features(*tb.scene, tb.frame, tb.block, config.block_size, rows);
  batch.sem.reserve(rows.size());
  batch.inst.reserve(rows.size());
  for (auto r : rows) {
    batch.sem.push_back(tb.scene->sem[r]);
    batch.inst.push_back(tb.scene->inst[r]);
  }
  return batch;
}

Trainer::Trainer(RunConfig config, std::vector<TrainBlock> blocks)
    : config_(std::move(config)),
      model_(config_.effective_model()),
      weights_(config_.effective_loss()),
      blocks_(std::move(blocks)),
      params_(init_params(model_, config_.seed)) {
  config_.validate();
  if (blocks_.empty()) throw DataError("no training blocks");
  adam_.lr = config_.lr;
}

Trainer::Trainer(RunConfig config, std::vector<TrainBlock> blocks, const Checkpoint& resume)
    : Trainer(std::move(config), std::move(blocks)) {
  if (format_model_config(resume.config) != format_model_config(model_))
    throw ConfigError("checkpoint model config does not match the run config");
  params_ = params_from_named(model_, clone_named(resume.params));
  if (resume.optimizer) adam_ = *resume.optimizer;
  epoch_ = resume.epoch;
}

LossReport Trainer::run_epoch() {
  std::vector<std::size_t> order(blocks_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(mix_seed(config_.seed, kShuffleSalt), epoch_));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  auto named = params_.named();
  LossReport epoch_sum;
  const std::size_t batch = std::max<std::size_t>(1, config_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    for (auto& p : named) p.tensor.zero_grad();
    for (std::size_t i = start; i < end; ++i) {
      const BlockBatch bb = sample_training_block(blocks_[order[i]], config_, epoch_);
      Tape tape;
      const auto out = forward(tape, Tensor::from_matrix(bb.features), params_, model_);
      const auto loss = total_loss(tape, out.logits, out.embeddings, bb.sem, bb.inst, weights_);
      if (!std::isfinite(loss.report.total)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch_ + 1) + ", step " +
                           std::to_string(adam_.step + 1));
      }
      tape.backward(loss.total);
      add_report(epoch_sum, loss.report);
    }
    const double inv = 1.0 / static_cast<double>(end - start);
    for (auto& p : named) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.grad()) g *= inv;
    }
    const std::uint64_t halvings = config_.decay_steps ? adam_.step / config_.decay_steps : 0;
    adam_.lr = std::ldexp(config_.lr, -static_cast<int>(std::min<std::uint64_t>(halvings, 1000)));
    diffcore::adam_step(adam_, named);
  }
  ++epoch_;
  scale_report(epoch_sum, 1.0 / static_cast<double>(order.size()));
  return epoch_sum;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.config = model_;
  ck.params = clone_named(params_.named());
  ck.optimizer = adam_;
  ck.step = adam_.step;
  ck.epoch = epoch_;
  ck.meta["variant"] = std::string(to_string(config_.variant));
  ck.meta["seed"] = std::to_string(config_.seed);
  return ck;
}

std::string format_log_header() { return "# epoch semantic ins_var ins_dist ins_reg emed total\n"; }

std::string format_log_line(std::uint64_t epoch, const LossReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu %.10g %.10g %.10g %.10g %.10g %.10g\n",
                static_cast<unsigned long long>(epoch), r.semantic, r.ins_var, r.ins_dist,
                r.ins_reg, r.emed, r.total);
  return buf;
}

Checkpoint train(const RunConfig& config, const std::vector<PointCloud>& scenes,
                 const TrainPaths& paths, std::ostream* progress) {
  auto blocks = training_blocks(scenes, config);
  std::optional<Trainer> trainer;
  if (paths.resume) {
    trainer.emplace(config, std::move(blocks), load_checkpoint(*paths.resume));
  } else {
    trainer.emplace(config, std::move(blocks));
  }
  std::ofstream log;
  if (paths.log) {
    log.open(*paths.log, paths.resume ? std::ios::app : std::ios::trunc);
    if (!log) throw DataError("cannot open log '" + paths.log->string() + "'");
    if (!paths.resume) log << format_log_header() << std::flush;
  }
  while (trainer->epoch() < config.epochs) {
    const LossReport r = trainer->run_epoch();
    const std::string line = format_log_line(trainer->epoch(), r);
    save_checkpoint(trainer->checkpoint(), paths.checkpoint);
    if (log.is_open()) log << line << std::flush;
    if (progress) *progress << line << std::flush;
  }
  return trainer->checkpoint();
}

ModelParams frozen_params(const ModelConfig& config, const Checkpoint& ckpt) {
  ModelParams p = params_from_named(config, clone_named(ckpt.params));
  for (auto& t : p.named()) t.tensor.set_requires_grad(false);
  return p;
}

InferenceResult infer_scene(const ModelParams& params, const ModelConfig& model,
                            const RunConfig& config, bool mean_removal_enabled,
                            const PointCloud& scene) {
  if (feature_width(scene) != model.input_width) {
    throw ConfigError("model expects " + std::to_string(model.input_width) +
                      " input features but the scene provides " +
                      std::to_string(feature_width(scene)));
  }
  const SceneFrame frame = scene_frame(scene);
  const auto blocks = split_blocks(scene, config.block_size, config.block_stride);
  MergeGrid grid(config.merge_cell, config.merge_overlap);
  PredictionWriteBack writeback(scene.size(), model.num_classes);
  std::vector<double> all_embeddings;

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& block = blocks[b];
    const auto chunks =
        cover_block(block, model.points_per_block, block_seed(config.seed, kCoverSalt, 0, 0, b));
    const std::size_t n = block.indices.size();
    std::vector<std::size_t> rows;
    std::vector<int> sem;
    Matrix emb(n, model.embedding_dim);
    rows.reserve(n);
    sem.reserve(n);
    for (const auto& chunk : chunks) {
      Tape tape;
      const auto out = forward(
          tape, Tensor::from_matrix(block_features(scene, frame, block, config.block_size, chunk)),
          params, model);
      for (std::size_t r = 0; r < chunk.size() && rows.size() < n; ++r) {
        const auto logits = out.logits.values().subspan(r * model.num_classes, model.num_classes);
        sem.push_back(
            static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin()));
        const auto e =
            out.embeddings.values().subspan(r * model.embedding_dim, model.embedding_dim);
        std::copy(e.begin(), e.end(), emb.row(rows.size()).begin());
        rows.push_back(chunk[r]);
      }
    }
    if (mean_removal_enabled) emb = mean_removal(emb);
    all_embeddings.insert(all_embeddings.end(), emb.data.begin(), emb.data.end());
    const auto clusters = mean_shift(emb, config.mean_shift);
    const auto global = block_merging(grid, scene, rows, clusters.labels, sem);
    const auto vote = semantic_mode_vote(global, sem);
    writeback.add(rows, vote.point_classes, global);
  }

  InferenceResult result;
  std::tie(result.sem, result.inst) = writeback.finish();
  result.embeddings.rows = all_embeddings.size() / model.embedding_dim;
  result.embeddings.cols = model.embedding_dim;
  result.embeddings.data = std::move(all_embeddings);
  return result;
}

Variant checkpoint_variant(const Checkpoint& ckpt, Variant fallback) {
  const auto it = ckpt.meta.find("variant");
  return it == ckpt.meta.end() ? fallback : parse_variant(it->second);
}

std::vector<DimStat> embedding_stats(const Matrix& embeddings) {
  if (embeddings.rows == 0) throw DataError("no embeddings to summarize");
  std::vector<DimStat> stats(embeddings.cols);
  const double n = static_cast<double>(embeddings.rows);
  for (std::size_t d = 0; d < embeddings.cols; ++d) {
    double sum = 0.0;
    for (std::size_t i = 0; i < embeddings.rows; ++i) sum += embeddings(i, d);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < embeddings.rows; ++i) {
      const double c = embeddings(i, d) - mean;
      ss += c * c;
    }
    stats[d] = {d, mean, ss / n};
  }
  std::stable_sort(stats.begin(), stats.end(),
                   [](const DimStat& a, const DimStat& b) { return a.mean > b.mean; });
  return stats;
}

std::string format_embedding_stats(const std::vector<DimStat>& stats) {
  std::string out = "# mean variance\n";
  char buf[96];
  for (const auto& s : stats) {
    std::snprintf(buf, sizeof buf, "%.10g %.10g\n", s.mean, s.variance);
    out += buf;
  }
  return out;
}

std::vector<GroupError> gradcheck(const RunConfig& config) {
  config.validate();
  ModelConfig model = config.effective_model();
  model.points_per_block = config.gradcheck_points;
  model.validate();
  const LossWeights weights = config.effective_loss();
  const std::size_t n = model.points_per_block;
  const std::size_t k = std::max<std::size_t>(1, config.gradcheck_instances);

  Rng rng(mix_seed(config.seed, hash_name("gradcheck")));
  Matrix x(n, model.input_width);
  for (double& v : x.data) v = rng.normal();
  std::vector<int> sem(n), inst(n);
  for (std::size_t i = 0; i < n; ++i) {
    inst[i] = static_cast<int>(i % k);
    sem[i] = static_cast<int>((i % k) % model.num_classes);
  }
  const Tensor input = Tensor::from_matrix(x);
  ModelParams params = init_params(model, config.seed);
  // Nonzero biases so relu units sit away from their kink.
  for (auto& p : params.named()) {
    if (p.name.ends_with(".bias"))
      for (double& v : p.tensor.values()) v = rng.uniform(-0.1, 0.1);
  }
  auto named = params.named();
  const auto f = [&](Tape& tape) {
    const auto out = forward(tape, input, params, model);
    return total_loss(tape, out.logits, out.embeddings, sem, inst, weights).total;
  };
  const auto result = diffcore::finite_diff_check(f, named, config.gradcheck_eps);

  std::vector<GroupError> groups;
  for (std::size_t i = 0; i < named.size(); ++i) {
    const std::string g = group_of(named[i].name);
    if (groups.empty() || groups.back().group != g) groups.push_back({g, 0.0});
    groups.back().max_rel_error = std::max(groups.back().max_rel_error, result.per_param[i]);
  }
  return groups;
}

}  // namespace cfs3d
