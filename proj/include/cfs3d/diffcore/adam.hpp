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
#include <vector>

#include "cfs3d/diffcore/gradcheck.hpp"

namespace cfs3d::diffcore {

struct AdamState {
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// First and second moments, one array per parameter in registration order.
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// Bias-corrected Adam update of every parameter from its gradient. Moments
/// are allocated on the first call. Throws NumericError naming the first
/// parameter whose gradient is non-finite; nothing is modified in that case.
void adam_step(AdamState& state, std::vector<NamedTensor>& params);

}  // namespace cfs3d::diffcore
