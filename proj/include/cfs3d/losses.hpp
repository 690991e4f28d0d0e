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

#include <span>

#include "cfs3d/diffcore/tensor.hpp"

namespace cfs3d {

struct LossWeights {
  double alpha = 0.01;        // equilibrium term
  double lambda_reg = 0.001;  // centroid regularizer inside the instance loss
  double delta_v = 0.5;       // pull margin
  double delta_d = 1.5;       // push margin
  double semantic_weight = 1.0;

  void validate() const;
};

struct LossReport {
  double semantic = 0.0;
  double ins_var = 0.0;
  double ins_dist = 0.0;
  double ins_reg = 0.0;
  double emed = 0.0;
  double total = 0.0;
};

/// Mean over points of -log softmax(logits)[label].
diffcore::Tensor semantic_ce(diffcore::Tape& tape, const diffcore::Tensor& logits,
                             std::span<const int> labels);

struct InstanceLossTerms {
  diffcore::Tensor var;
  diffcore::Tensor dist;
  diffcore::Tensor reg;
};

/// Discriminative embedding loss. With per-instance centroids mu_i:
///   var  = mean_i mean_{e in i} max(0, |mu_i - e| - delta_v)^2
///   dist = mean_{i<j} max(0, 2 delta_d - |mu_i - mu_j|)^2   (0 for one instance)
///   reg  = mean_i |mu_i|
/// Instance ids may be any non-negative integers.
InstanceLossTerms discriminative_loss(diffcore::Tape& tape, const diffcore::Tensor& embeddings,
                                      std::span<const int> instance_labels,
                                      const LossWeights& weights);

/// Population variance across embedding dimensions of the per-dimension
/// means over points.
diffcore::Tensor equilibrium_loss(diffcore::Tape& tape, const diffcore::Tensor& embeddings);

struct TotalLoss {
  diffcore::Tensor total;
  LossReport report;
};

/// total = semantic_weight*semantic + ins_var + ins_dist + lambda_reg*ins_reg
///         + alpha*emed, summed in that order.
TotalLoss total_loss(diffcore::Tape& tape, const diffcore::Tensor& logits,
                     const diffcore::Tensor& embeddings, std::span<const int> semantic_labels,
                     std::span<const int> instance_labels, const LossWeights& weights);

}  // namespace cfs3d
