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

#include <functional>
#include <string>
#include <vector>

#include "cfs3d/diffcore/tensor.hpp"

namespace cfs3d::diffcore {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Builds a scalar loss on the given tape from the current parameter values.
using LossFn = std::function<Tensor(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  /// Worst error per entry of the params list, same order.
  std::vector<double> per_param;
};

/// Compares reverse-mode gradients against central differences for every
/// coordinate of every parameter. The error of one coordinate is
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
/// Throws NumericError if the loss is ever non-finite. Parameter values are
/// restored and gradients left zeroed on return.
GradCheckResult finite_diff_check(const LossFn& f, std::vector<NamedTensor>& params, double eps);

}  // namespace cfs3d::diffcore
