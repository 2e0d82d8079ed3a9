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

#include "generators.hpp"
#include "swinrmt/positional.hpp"
#include "swinrmt/verify/grad_suite.hpp"

namespace swinrmt {
namespace {

using testing::for_trials;
using testing::Gen;
using testing::max_abs;
using testing::vec;

TEST(DecayTest, InitialRatesFollowHeadSchedule) {
  EXPECT_DOUBLE_EQ(DecaySpec::initial_gamma(0, 4), 1.0 - 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(DecaySpec::initial_gamma(2, 4), 1.0 - 1.0 / 32.0);
  const auto g = DecaySpec::learnable(4).gammas();
  for (std::size_t h = 0; h < 4; ++h) EXPECT_NEAR(g[h], DecaySpec::initial_gamma(h, 4), 1e-12);
  for (std::size_t h = 1; h < 4; ++h) EXPECT_GT(g[h], g[h - 1]);
}

TEST(DecayTest, LearnableRatesStayInBounds) {
  for_trials(30, 21, [](Gen& g) {
    DecaySpec spec = g.decay(g.extent(1, 6));
    for (double& u : spec.param().mutable_data()) u = g.real(-60.0, 60.0);
    for (double gamma : spec.gammas()) {
      EXPECT_GE(gamma, kGammaMin);
      EXPECT_LE(gamma, kGammaMax);
    }
  });
}

TEST(DecayTest, MultiplicativeIsExpOfAdditive) {
  for_trials(20, 22, [](Gen& g) {
    const DecaySpec spec = g.decay(g.extent(1, 4));
    const std::size_t L = g.extent(1, 12);
    const auto add = vec(decay_mask_additive(spec, L)), mul = vec(decay_mask_multiplicative(spec, L));
    for (std::size_t i = 0; i < add.size(); ++i) EXPECT_NEAR(mul[i], std::exp(add[i]), 1e-15);
  });
}

TEST(DecayTest, MaskEntriesFollowDistance) {
  const DecaySpec spec = DecaySpec::fixed({0.5, 0.9});
  const Tensor d = decay_mask_multiplicative(spec, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const double dist = std::abs(static_cast<double>(i) - static_cast<double>(j));
      EXPECT_NEAR(d.at({0, i, j}), std::pow(0.5, dist), 1e-14);
      EXPECT_NEAR(d.at({1, i, j}), std::pow(0.9, dist), 1e-14);
    }
}

TEST(DecayTest, SymmetricWithUnitDiagonal) {
  for_trials(10, 23, [](Gen& g) {
    const std::size_t L = g.extent(1, 9);
    const Tensor d = decay_mask_multiplicative(g.decay(2), L);
    for (std::size_t h = 0; h < 2; ++h)
      for (std::size_t i = 0; i < L; ++i) {
        EXPECT_EQ(d.at({h, i, i}), 1.0);
        for (std::size_t j = 0; j < L; ++j) EXPECT_EQ(d.at({h, i, j}), d.at({h, j, i}));
      }
  });
}

TEST(DecayTest, FixedRejectsRatesOutsideUnitInterval) {
  EXPECT_THROW(DecaySpec::fixed({0.0}), ConfigError);
  EXPECT_THROW(DecaySpec::fixed({1.5}), ConfigError);
  EXPECT_NO_THROW(DecaySpec::fixed({1.0}));
  EXPECT_THROW(decay_mask_additive(DecaySpec::fixed({0.9}), 0), ShapeError);
}

TEST(AlibiTest, SlopesAreBalanced) {
  EXPECT_EQ(balanced_alibi_slopes(4), (std::vector<double>{-0.5, -0.25, 0.5, 0.25}));
  EXPECT_EQ(balanced_alibi_slopes(3), (std::vector<double>{-0.5, 0.5, 0.0}));
  EXPECT_EQ(balanced_alibi_slopes(1), (std::vector<double>{0.0}));
  for (std::size_t n = 1; n <= 12; ++n) {
    double total = 0.0;
    for (double s : balanced_alibi_slopes(n)) total += s;
    EXPECT_EQ(total, 0.0) << n;
  }
}

TEST(AlibiTest, BiasIsSlopeTimesDistance) {
  const Tensor b = alibi_bias(Tensor(Shape{2}, {-0.5, 0.25}), 4);
  EXPECT_EQ(b.shape(), (Shape{2, 4, 4}));
  EXPECT_EQ(b.at({0, 0, 3}), -1.5);
  EXPECT_EQ(b.at({1, 3, 1}), 0.5);
  EXPECT_EQ(b.at({1, 2, 2}), 0.0);
}

TEST(RopeTest, FrequencyTable) {
  const auto theta = rope_frequencies(8);
  ASSERT_EQ(theta.size(), 4u);
  EXPECT_EQ(theta[0], 1.0);
  EXPECT_NEAR(theta[2], std::pow(10000.0, -0.5), 1e-15);
  EXPECT_THROW(rope_frequencies(5), ConfigError);
  EXPECT_THROW(rope_frequencies(0), ConfigError);
}

TEST(RopeTest, PreservesPairNorms) {
  for_trials(20, 24, [](Gen& g) {
    const std::size_t L = g.extent(1, 9), d = 2 * g.extent(1, 4);
    const Tensor x = g.tensor(Shape{g.extent(1, 3), L, d});
    std::vector<std::int64_t> pos(L);
    for (auto& p : pos) p = static_cast<std::int64_t>(g.extent(0, 200));
    const auto in = vec(x), out = vec(rope_apply(x, rope_frequencies(d), pos));
    for (std::size_t i = 0; i < in.size(); i += 2) {
      EXPECT_NEAR(std::hypot(in[i], in[i + 1]), std::hypot(out[i], out[i + 1]), 1e-12);
    }
  });
}

TEST(RopeTest, NegatedPositionsInvert) {
  for_trials(10, 25, [](Gen& g) {
    const std::size_t L = g.extent(1, 7), d = 2 * g.extent(1, 3);
    const Tensor x = g.tensor(Shape{L, d});
    std::vector<std::int64_t> pos(L), neg(L);
    for (std::size_t l = 0; l < L; ++l) {
      pos[l] = static_cast<std::int64_t>(g.extent(0, 50));
      neg[l] = -pos[l];
    }
    const auto theta = rope_frequencies(d);
    EXPECT_LE(max_abs(vec(rope_apply(rope_apply(x, theta, pos), theta, neg)), vec(x)), 1e-12);
  });
}

TEST(RopeTest, InnerProductDependsOnOffsetOnly) {
  for_trials(20, 26, [](Gen& g) {
    const std::size_t d = 2 * g.extent(1, 4);
    const Tensor q = g.tensor(Shape{1, d}), k = g.tensor(Shape{1, d});
    const auto theta = rope_frequencies(d);
    const auto dot = [&](std::int64_t pq, std::int64_t pk) {
      const auto a = vec(rope_apply(q, theta, {pq})), b = vec(rope_apply(k, theta, {pk}));
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
      return s;
    };
    const auto p = static_cast<std::int64_t>(g.extent(0, 40)), r = static_cast<std::int64_t>(g.extent(0, 40));
    const auto shift = static_cast<std::int64_t>(g.extent(1, 60));
    EXPECT_NEAR(dot(p, r), dot(p + shift, r + shift), 1e-10);
  });
}

TEST(RopeTest, ZeroPositionIsIdentity) {
  Rng rng(5);
  const Tensor x = uniform_tensor(Shape{3, 6}, rng, -1, 1);
  EXPECT_EQ(vec(rope_apply(x, rope_frequencies(6), {0, 0, 0})), vec(x));
}

TEST(RopeTest, FlattenedPositionsAreRowMajor) {
  EXPECT_EQ(flatten_positions(2, 3), (std::vector<std::int64_t>{0, 1, 2, 3, 4, 5}));
}

TEST(RopeTest, RejectsMismatchedInputs) {
  const Tensor x(Shape{3, 4});
  EXPECT_THROW(rope_apply(x, rope_frequencies(4), {0, 1}), ShapeError);
  EXPECT_THROW(rope_apply(x, rope_frequencies(2), {0, 1, 2}), ConfigError);
  EXPECT_THROW(rope_apply(Tensor(Shape{3, 5}), rope_frequencies(4), {0, 1, 2}), ConfigError);
  EXPECT_THROW(rope_apply(Tensor(Shape{4}), rope_frequencies(4), {0}), ShapeError);
}

TEST(GradientTest, PositionalOpsTenSeeds) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
  const auto reports = verify::run_gradient_suite("positional", seeds);
  EXPECT_EQ(reports.size(), 4u);
  for (const auto& r : reports) EXPECT_TRUE(r.passed()) << r.summary();
}

}  // namespace
}  // namespace swinrmt
