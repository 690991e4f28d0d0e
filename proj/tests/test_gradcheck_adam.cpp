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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cfs3d/diffcore/adam.hpp"
#include "cfs3d/diffcore/gradcheck.hpp"
#include "cfs3d/diffcore/ops.hpp"
#include "cfs3d/error.hpp"

namespace cfs3d::diffcore {
namespace {

TEST(GradCheckTest, QuadraticIsExactToRoundoff) {
  std::vector<NamedTensor> params{{"x", Tensor({3}, {0.3, -1.2, 2.0})}};
  const Tensor c({3}, {1.0, 2.0, -0.5});
  const auto f = [&](Tape& tape) {
    const Tensor d = add(tape, params[0].tensor, c);
    return sum(tape, mul(tape, d, d));
  };
  const auto r = finite_diff_check(f, params, 1e-5);
  EXPECT_LT(r.max_rel_error, 1e-6);
  ASSERT_EQ(r.per_param.size(), 1u);
  // The checker leaves parameter gradients zeroed.
  EXPECT_EQ(params[0].tensor.grad()[0], 0.0);
}

TEST(GradCheckTest, ConstantFunctionHasZeroError) {
  std::vector<NamedTensor> params{{"x", Tensor({2}, {1.0, 2.0})}};
  const auto f = [](Tape&) { return Tensor::scalar(4.0); };
  EXPECT_EQ(finite_diff_check(f, params, 1e-5).max_rel_error, 0.0);
}

TEST(GradCheckTest, NonFiniteLossIsNumericError) {
  std::vector<NamedTensor> params{{"x", Tensor({1}, {1.0})}};
  const auto f = [](Tape&) { return Tensor::scalar(std::numeric_limits<double>::quiet_NaN()); };
  EXPECT_THROW(finite_diff_check(f, params, 1e-5), NumericError);
}

TEST(GradCheckTest, NonPositiveStepIsUsageError) {
  std::vector<NamedTensor> params{{"x", Tensor({1}, {1.0})}};
  const auto f = [&](Tape& tape) { return sum(tape, params[0].tensor); };
  EXPECT_THROW(finite_diff_check(f, params, 0.0), UsageError);
}

TEST(GradCheckTest, DetectsAWrongGradient) {
  // The scalar is built outside the tape's knowledge of x, so the analytic
  // gradient is zero while the numeric one is not.
  std::vector<NamedTensor> params{{"x", Tensor({1}, {1.0})}};
  const auto f = [&](Tape& tape) {
    const double v = params[0].tensor[0];
    return sum(tape, Tensor({1}, {3.0 * v}, true));
  };
  EXPECT_NEAR(finite_diff_check(f, params, 1e-5).max_rel_error, 1.0, 1e-6);
}

TEST(AdamTest, ZeroGradientLeavesParametersUnchanged) {
  std::vector<NamedTensor> params{{"w", Tensor({2}, {0.5, -0.25}, true)}};
  params[0].tensor.ensure_grad();
  AdamState s;
  adam_step(s, params);
  EXPECT_EQ(params[0].tensor[0], 0.5);
  EXPECT_EQ(params[0].tensor[1], -0.25);
  EXPECT_EQ(s.step, 1u);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  std::vector<NamedTensor> params{{"w", Tensor({1}, {0.0}, true)}};
  params[0].tensor.ensure_grad()[0] = 1.0;
  AdamState s;
  s.lr = 0.001;
  adam_step(s, params);
  // m_hat = v_hat = 1 after bias correction.
  EXPECT_NEAR(params[0].tensor[0], -0.001 / (1.0 + 1e-8), 1e-18);
  ASSERT_EQ(s.m.size(), 1u);
  EXPECT_EQ(s.m[0].size(), params[0].tensor.size());
  EXPECT_EQ(s.v[0].size(), params[0].tensor.size());
}

TEST(AdamTest, NonFiniteGradientNamesParameterAndLeavesStateAlone) {
  std::vector<NamedTensor> params{{"good", Tensor({1}, {1.0}, true)},
                                  {"head.sem.weight", Tensor({1}, {2.0}, true)}};
  params[0].tensor.ensure_grad()[0] = 0.5;
  params[1].tensor.ensure_grad()[0] = std::numeric_limits<double>::infinity();
  AdamState s;
  try {
    adam_step(s, params);
    FAIL() << "expected a numeric error";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("head.sem.weight"), std::string::npos);
  }
  EXPECT_EQ(s.step, 0u);
  EXPECT_EQ(params[0].tensor[0], 1.0);
}

TEST(AdamTest, IdenticalRunsAreBitwiseIdentical) {
  auto run = [] {
    std::vector<NamedTensor> params{{"w", Tensor({3}, {0.1, 0.2, 0.3}, true)}};
    AdamState s;
    for (int i = 0; i < 50; ++i) {
      params[0].tensor.zero_grad();
      Tape tape;
      const Tensor& w = params[0].tensor;
      tape.backward(sum(tape, mul(tape, activation(tape, w, Activation::tanh), w)));
      adam_step(s, params);
    }
    return std::vector<double>(params[0].tensor.values().begin(), params[0].tensor.values().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(AdamTest, MinimizesAQuadratic) {
  std::vector<NamedTensor> params{{"w", Tensor({2}, {3.0, -2.0}, true)}};
  AdamState s;
  s.lr = 0.05;
  for (int i = 0; i < 2000; ++i) {
    params[0].tensor.zero_grad();
    Tape tape;
    tape.backward(sum(tape, mul(tape, params[0].tensor, params[0].tensor)));
    adam_step(s, params);
  }
  EXPECT_NEAR(params[0].tensor[0], 0.0, 1e-2);
  EXPECT_NEAR(params[0].tensor[1], 0.0, 1e-2);
}

}  // namespace
}  // namespace cfs3d::diffcore
