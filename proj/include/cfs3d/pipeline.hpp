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
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cfs3d/blocks.hpp"
#include "cfs3d/checkpoint.hpp"
#include "cfs3d/config.hpp"
#include "cfs3d/diffcore/adam.hpp"
#include "cfs3d/losses.hpp"
#include "cfs3d/matrix.hpp"
#include "cfs3d/model.hpp"
#include "cfs3d/point_cloud.hpp"

namespace cfs3d {

/// One training block: a slice of a labeled scene. Points are resampled
/// every epoch from a seed derived from (run seed, epoch, scene, block).
struct TrainBlock {
  const PointCloud* scene = nullptr;
  std::size_t scene_index = 0;
  std::size_t block_index = 0;
  Block block;
  SceneFrame frame;
};

std::vector<TrainBlock> training_blocks(const std::vector<PointCloud>& scenes,
                                        const RunConfig& config);

struct BlockBatch {
  Matrix features;
  std::vector<int> sem;
  std::vector<int> inst;
};

BlockBatch sample_training_block(const TrainBlock& tb, const RunConfig& config,
                                 std::uint64_t epoch);

class Trainer {
 public:
  Trainer(RunConfig config, std::vector<TrainBlock> blocks);
  Trainer(RunConfig config, std::vector<TrainBlock> blocks, const Checkpoint& resume);

  /// Runs one epoch and returns the mean loss terms over its blocks.
  /// Throws NumericError on a non-finite loss; parameters are then left
  /// as they were before the failing step.
  LossReport run_epoch();

  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t step() const { return adam_.step; }
  const ModelParams& params() const { return params_; }
  Checkpoint checkpoint() const;

 private:
  RunConfig config_;
  ModelConfig model_;
  LossWeights weights_;
  std::vector<TrainBlock> blocks_;
  ModelParams params_;
  diffcore::AdamState adam_;
  std::uint64_t epoch_ = 0;
};

std::string format_log_header();
std::string format_log_line(std::uint64_t epoch, const LossReport& r);

struct TrainPaths {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> log;
  std::optional<std::filesystem::path> resume;
};

/// Trains to config.epochs, writing a checkpoint and a log line after every
/// epoch. When resuming, the log is appended to rather than rewritten.
Checkpoint train(const RunConfig& config, const std::vector<PointCloud>& scenes,
                 const TrainPaths& paths, std::ostream* progress = nullptr);

/// Parameters with gradient tracking disabled, safe for inference.
ModelParams frozen_params(const ModelConfig& config, const Checkpoint& ckpt);

struct InferenceResult {
  std::vector<int> sem;
  std::vector<int> inst;
  /// Per-point embeddings of every block visit, after optional mean removal.
  Matrix embeddings;
};

InferenceResult infer_scene(const ModelParams& params, const ModelConfig& model,
                            const RunConfig& config, bool mean_removal, const PointCloud& scene);

/// The variant recorded in a checkpoint, or the config's variant if absent.
Variant checkpoint_variant(const Checkpoint& ckpt, Variant fallback);

struct DimStat {
  std::size_t dim = 0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Per-dimension mean and population variance, sorted by mean descending.
std::vector<DimStat> embedding_stats(const Matrix& embeddings);
std::string format_embedding_stats(const std::vector<DimStat>& stats);

struct GroupError {
  std::string group;
  double max_rel_error = 0.0;
};

/// Finite-difference check of the total loss on a random toy block of
/// config.gradcheck_points points. One entry per parameter group.
std::vector<GroupError> gradcheck(const RunConfig& config);

}  // namespace cfs3d
