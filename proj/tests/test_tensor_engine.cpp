/*
 * Copyright (c) 2026, The SwinRMT Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "swinrmt/layers.hpp"
#include "swinrmt/ops.hpp"
#include "swinrmt/verify/grad_suite.hpp"
#include "swinrmt/verify/reference.hpp"

namespace swinrmt {
namespace {

using testing::for_trials;
using testing::Gen;
using testing::max_abs;
using testing::vec;

TEST(TensorTest, ShapeMustMatchValueCount) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_EQ(Tensor(Shape{2, 3}).numel(), 6u);
  EXPECT_EQ(Tensor::scalar(4.0).item(), 4.0);
  EXPECT_THROW(Tensor(Shape{2}).item(), ShapeError);
}

TEST(TensorTest, OpResultsAreReadOnly) {
  Tensor a = make_param(Tensor(Shape{2}, 1.0));
  Tensor b = add(a, a);
  EXPECT_THROW(b.mutable_data(), AutogradError);
  EXPECT_EQ(b.op_name(), "add");
}

TEST(BroadcastTest, TrailingOnly) {
  const Tensor a(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(vec(add(a, Tensor(Shape{3}, {10, 20, 30}))), (std::vector<double>{11, 22, 33, 14, 25, 36}));
  EXPECT_EQ(vec(mul(a, Tensor(Shape{3}, {1, 0, -1}))), (std::vector<double>{1, 0, -3, 4, 0, -6}));
  EXPECT_THROW(add(a, Tensor(Shape{2})), ShapeError);
  EXPECT_THROW(add(a, Tensor(Shape{2, 1})), ShapeError);
}

TEST(MatmulTest, BatchedAgreesWithLoopOracle) {
  for_trials(20, 11, [](Gen& g) {
    const std::size_t B = g.extent(1, 3), m = g.extent(1, 5), k = g.extent(1, 5), n = g.extent(1, 5);
    const Tensor a = g.tensor(Shape{B, m, k}, 10.0);
    const bool shared = g.coin();
    const Tensor b = shared ? g.tensor(Shape{k, n}, 10.0) : g.tensor(Shape{B, k, n}, 10.0);
    const Tensor c = matmul(a, b);
    ASSERT_EQ(c.shape(), (Shape{B, m, n}));
    for (std::size_t i = 0; i < B; ++i) {
      const auto av = vec(a), bv = vec(b);
      const std::vector<double> ai(av.begin() + static_cast<std::ptrdiff_t>(i * m * k),
                                   av.begin() + static_cast<std::ptrdiff_t>((i + 1) * m * k));
      const std::size_t boff = shared ? 0 : i * k * n;
      const std::vector<double> bi(bv.begin() + static_cast<std::ptrdiff_t>(boff),
                                   bv.begin() + static_cast<std::ptrdiff_t>(boff + k * n));
      const auto want = verify::matmul_loop(ai, bi, m, k, n);
      const std::vector<double> got(c.data().begin() + static_cast<std::ptrdiff_t>(i * m * n),
                                    c.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * m * n));
      EXPECT_LE(max_abs(got, want), 1e-12);
    }
  });
}

TEST(MatmulTest, DimensionErrorsNameTheShapes) {
  try {
    matmul(Tensor(Shape{2, 3}), Tensor(Shape{4, 2}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2, 3]"), std::string::npos) << e.what();
  }
}

TEST(SoftmaxTest, RowsSumToOneUpToMagnitude1e3) {
  for_trials(20, 12, [](Gen& g) {
    const Tensor x = g.tensor(Shape{g.extent(1, 6), g.extent(1, 12)}, 1e3);
    for (double s : vec(sum_dim(softmax_lastdim(x), 1))) EXPECT_NEAR(s, 1.0, 1e-12);
  });
}

TEST(SoftmaxTest, MatchesExtendedPrecisionOracle) {
  for_trials(10, 13, [](Gen& g) {
    const Tensor x = g.tensor(Shape{g.extent(1, 9)}, 5.0);
    EXPECT_LE(max_abs(vec(softmax_lastdim(x)), verify::softmax_loop(vec(x))), 1e-12);
  });
}

TEST(SoftmaxTest, LogSoftmaxIsLogOfSoftmax) {
  Rng rng(3);
  const Tensor x = uniform_tensor(Shape{4, 5}, rng, -20, 20);
  const auto a = vec(log_softmax_lastdim(x));
  const auto b = vec(softmax_lastdim(x));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], std::log(b[i]), 1e-12);
}

TEST(ElementwiseTest, GeluUsesTanhApproximation) {
  for (double x : {-3.0, -0.5, 0.0, 1.0, 2.5}) {
    const double want = 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / std::numbers::pi) * (x + 0.044715 * x * x * x)));
    EXPECT_NEAR(gelu(Tensor(Shape{1}, {x})).item(), want, 1e-15) << x;
  }
}

TEST(ElementwiseTest, SiluIsXTimesSigmoid) {
  for (double x : {-30.0, -1.0, 0.0, 0.7, 40.0}) {
    EXPECT_NEAR(silu(Tensor(Shape{1}, {x})).item(), x / (1.0 + std::exp(-x)), 1e-14) << x;
  }
  EXPECT_EQ(sigmoid(Tensor(Shape{1}, {-800.0})).item(), 0.0);
  EXPECT_EQ(sigmoid(Tensor(Shape{1}, {800.0})).item(), 1.0);
}

TEST(LayerNormTest, MatchesLoopOracle) {
  for_trials(10, 14, [](Gen& g) {
    const std::size_t n = g.extent(2, 8);
    const Tensor x = g.tensor(Shape{g.extent(1, 4), n}), w = g.tensor(Shape{n}), b = g.tensor(Shape{n});
    EXPECT_LE(max_abs(vec(layer_norm(x, w, b)), verify::layer_norm_loop(vec(x), n, vec(w), vec(b))), 1e-12);
  });
}

TEST(Conv2dTest, MatchesLoopOracle) {
  for_trials(25, 15, [](Gen& g) {
    const std::size_t groups = g.extent(1, 3);
    const std::size_t cin = groups * g.extent(1, 2), cout = groups * g.extent(1, 2);
    const std::size_t K = 1 + 2 * g.extent(0, 2), pad = g.extent(0, K / 2), stride = g.extent(1, 2);
    const std::size_t H = g.extent(K, 7), W = g.extent(K, 7), B = g.extent(1, 2);
    const Tensor x = g.tensor(Shape{B, cin, H, W}, 10.0), w = g.tensor(Shape{cout, cin / groups, K, K}, 10.0);
    const Tensor b = g.coin() ? g.tensor(Shape{cout}, 10.0) : Tensor{};
    const Conv2dOptions opt{.stride = stride, .padding = pad, .groups = groups};
    const auto want = verify::conv2d_loop(vec(x), vec(w), b.defined() ? vec(b) : std::vector<double>{}, B, cin, H, W,
                                          cout, K, opt);
    EXPECT_LE(max_abs(vec(conv2d(x, w, b, opt)), want), 1e-12);
  });
}

TEST(Conv2dTest, RejectsInvalidGroups) {
  EXPECT_THROW(conv2d(Tensor(Shape{1, 4, 5, 5}), Tensor(Shape{4, 1, 3, 3}), Tensor{}, {.groups = 3}), ConfigError);
  EXPECT_THROW(conv2d(Tensor(Shape{1, 2, 2, 2}), Tensor(Shape{1, 2, 5, 5}), Tensor{}), ShapeError);
}

TEST(BackwardTest, AccumulatesThroughSharedInputs) {
  Rng rng(1);
  Tensor x = make_param(uniform_tensor(Shape{5}, rng, -2, 2));
  sum(add(mul(x, x), x)).backward();
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(x.grad()[i], 2.0 * x.data()[i] + 1.0, 1e-15);
}

TEST(BackwardTest, BroadcastGradientIsSummed) {
  Tensor a = make_param(Tensor(Shape{3, 2}, 1.0));
  Tensor b = make_param(Tensor(Shape{2}, {2.0, -1.0}));
  sum(mul(a, b)).backward();
  EXPECT_EQ(std::vector<double>(b.grad().begin(), b.grad().end()), (std::vector<double>{3.0, 3.0}));
  EXPECT_EQ(a.grad()[1], -1.0);
}

TEST(BackwardTest, MisuseIsReported) {
  Tensor x = make_param(Tensor(Shape{2}, 1.0));
  EXPECT_THROW(mul(x, x).backward(), AutogradError);
  EXPECT_THROW(Tensor(Shape{}, {1.0}).backward(), AutogradError);
  const Tensor loss = sum(x);
  loss.backward();
  EXPECT_THROW(loss.backward(), AutogradError);
  {
    NoGradGuard guard;
    const Tensor detached = sum(mul(x, x));
    EXPECT_THROW(detached.backward(), AutogradError);
  }
}

TEST(BackwardTest, LeafGradientsAccumulateUntilCleared) {
  Tensor x = make_param(Tensor(Shape{2}, 3.0));
  sum(x).backward();
  sum(scale(x, 2.0)).backward();
  EXPECT_EQ(x.grad()[0], 3.0);
  x.zero_grad();
  EXPECT_FALSE(x.has_grad());
}

TEST(FiniteCheckTest, NamesTheOffendingOp) {
  const bool previous = finite_checks();
  set_finite_checks(true);
  try {
    log(Tensor(Shape{2}, {1.0, -1.0}));
    ADD_FAILURE() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.op(), "log");
  }
  set_finite_checks(previous);
}

// Every tensor-engine op over ten seeds.
TEST(GradientTest, TensorEngineOpsTenSeeds) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
  for (const auto& r : verify::run_gradient_suite("tensor-engine", seeds)) EXPECT_TRUE(r.passed()) << r.summary();
}

TEST(GradientTest, CorruptedBackwardIsCaught) {
  for (const char* op : {"matmul", "softmax", "conv2d", "layer_norm", "slice", "permute"}) {
    corrupt_backward_for_testing(op);
    const auto reports = verify::run_gradient_suite("tensor-engine", {1});
    corrupt_backward_for_testing("");
    bool any_failed = false;
    for (const auto& r : reports) any_failed = any_failed || !r.passed();
    EXPECT_TRUE(any_failed) << op;
  }
}

}  // namespace
}  // namespace swinrmt
