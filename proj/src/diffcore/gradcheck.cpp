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

#include "cfs3d/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "cfs3d/error.hpp"

namespace cfs3d::diffcore {
namespace {

double evaluate(const LossFn& f) {
  Tape tape;
  const Tensor loss = f(tape);
  if (!loss.is_scalar()) throw UsageError("finite_diff_check: loss must be scalar");
  const double v = loss.item();
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: loss is not finite");
  return v;
}

}  // namespace

GradCheckResult finite_diff_check(const LossFn& f, std::vector<NamedTensor>& params, double eps) {
  if (!(eps > 0.0)) throw UsageError("finite_diff_check: eps must be positive");

  for (auto& p : params) {
    p.tensor.set_requires_grad(true);
    p.tensor.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    const Tensor loss = f(tape);
    if (!loss.is_scalar()) throw UsageError("finite_diff_check: loss must be scalar");
    if (!std::isfinite(loss.item())) throw NumericError("finite_diff_check: loss is not finite");
    if (tape.size() > 0) tape.backward(loss);
    for (auto& p : params) {
      analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
      p.tensor.zero_grad();
    }
  }

  GradCheckResult result;
  result.per_param.assign(params.size(), 0.0);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].tensor.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = evaluate(f);
      values[i] = saved - eps;
      const double down = evaluate(f);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      const double err = std::abs(a - numeric) / denom;
      result.per_param[k] = std::max(result.per_param[k], err);
    }
    result.max_rel_error = std::max(result.max_rel_error, result.per_param[k]);
  }
  return result;
}

}  // namespace cfs3d::diffcore
