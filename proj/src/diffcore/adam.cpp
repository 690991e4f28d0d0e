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

#include "cfs3d/diffcore/adam.hpp"

#include <cmath>
#include <utility>

#include "cfs3d/error.hpp"

namespace cfs3d::diffcore {

void adam_step(AdamState& state, std::vector<NamedTensor>& params) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.size(), 0.0);
      state.v.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& t = params[k].tensor;
    if (state.m[k].size() != t.size()) {
      throw DimensionError("adam_step: moment size mismatch for " + params[k].name);
    }
    if (!t.has_grad()) continue;
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter " + params[k].name);
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].tensor;
    if (!p.has_grad()) continue;
    auto values = p.values();
    const auto grad = std::as_const(p).grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      values[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace cfs3d::diffcore
