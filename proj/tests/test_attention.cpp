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
#include "swinrmt/attention.hpp"
#include "swinrmt/verify/grad_suite.hpp"
#include "swinrmt/verify/oracles.hpp"
#include "swinrmt/windowing.hpp"

namespace swinrmt {
namespace {

using testing::for_trials;
using testing::Gen;
using testing::max_abs;
using testing::vec;

// Random additive mask [heads, L, L] with the diagonal always open.
Tensor random_mask(Gen& g, std::size_t heads, std::size_t L) {
  Tensor m(Shape{heads, L, L});
  auto md = m.mutable_data();
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < L; ++j)
        if (i != j && g.coin()) md[(h * L + i) * L + j] = kMaskValue;
  return m;
}

struct Case {
  AttentionConfig cfg;
  AttentionParams params;
};

Case random_case(Gen& g, Variant variant, std::size_t heads) {
  Case c;
  c.cfg = AttentionConfig::for_variant(variant, heads * 2 * g.extent(1, 2), heads, g.extent(1, 7), g.coin());
  c.params = AttentionParams::init(c.cfg, g.rng);
  c.params.decay_w = g.decay(heads);
  c.params.decay_h = g.decay(heads);
  if (variant == Variant::Swat) c.params.alibi_slopes = make_param(g.tensor(Shape{heads}, 0.5));
  return c;
}

TEST(VariantTest, NamesRoundTrip) {
  for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("Retention"), ConfigError);
}

TEST(RetentionTest, RowsAreStochasticWithAndWithoutMasks) {
  for_trials(30, 31, [](Gen& g) {
    const std::size_t heads = g.extent(1, 3), L = g.extent(1, 10), d = 2 * g.extent(1, 3);
    const Tensor q = g.tensor(Shape{g.extent(1, 2), heads, L, d}, 5.0), k = g.tensor(q.shape(), 5.0);
    const Tensor bias = decay_mask_additive(g.decay(heads), L);
    const Tensor mask = g.coin() ? random_mask(g, heads, L) : Tensor{};
    const Tensor w = retention_weights(q, k, bias, mask);
    for (double s : vec(sum_dim(w, 3))) EXPECT_NEAR(s, 1.0, 1e-12);
    for (double x : vec(w)) EXPECT_GE(x, 0.0);
    if (mask.defined()) {
      const auto wv = vec(w), mv = vec(mask);
      for (std::size_t i = 0; i < wv.size(); ++i)
        if (mv[i % mv.size()] < 0.0) EXPECT_LT(wv[i], 1e-300);
    }
  });
}

TEST(RetentionTest, UnitDecayIsPlainScaledSoftmax) {
  for_trials(10, 32, [](Gen& g) {
    const std::size_t L = g.extent(1, 8), d = 2 * g.extent(1, 3);
    const Tensor q = g.tensor(Shape{1, L, d}), k = g.tensor(Shape{1, L, d});
    const Tensor w = retention_weights(q, k, decay_mask_additive(DecaySpec::fixed({1.0}), L));
    const Tensor plain = softmax_lastdim(scale(matmul(q, transpose_last2(k)), 1.0 / std::sqrt(double(d))));
    EXPECT_LE(max_abs(vec(w), vec(plain)), 1e-15);
  });
}

TEST(RetentionTest, StrongerDecayConcentratesOnDiagonal) {
  const std::size_t L = 6;
  const Tensor zero(Shape{1, L, 2});
  double previous = 0.0;
  for (double gamma : {0.999, 0.9, 0.7, 0.5}) {
    const Tensor w = retention_weights(zero, zero, decay_mask_additive(DecaySpec::fixed({gamma}), L));
    EXPECT_GT(w.at({0, 2, 2}), previous) << gamma;
    previous = w.at({0, 2, 2});
  }
}

TEST(SwatTest, WeightsBoundedByDecayOverTemperature) {
  for_trials(30, 33, [](Gen& g) {
    const std::size_t heads = g.extent(1, 3), L = g.extent(1, 10), d = 2 * g.extent(1, 2);
    const std::size_t ws = g.extent(1, 9);
    const Tensor q = g.tensor(Shape{heads, L, d}, 4.0), k = g.tensor(q.shape(), 4.0);
    const Tensor decay = decay_mask_multiplicative(g.decay(heads), L);
    const Tensor alibi = alibi_bias(g.tensor(Shape{heads}, 0.5), L);
    Tensor mask01;
    if (g.coin()) {
      mask01 = Tensor(Shape{heads, L, L}, 1.0);
      for (double& m : mask01.mutable_data()) m = g.coin() ? 1.0 : 0.0;
    }
    const auto w = vec(swat_weights(q, k, alibi, decay, ws, mask01));
    const auto dv = vec(decay);
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_GE(w[i], 0.0);
      EXPECT_LE(w[i], dv[i] / static_cast<double>(ws) + 1e-15);
      if (mask01.defined() && mask01.data()[i] == 0.0) EXPECT_EQ(w[i], 0.0);
    }
  });
}

TEST(SwatTest, ZeroLogitsAverageValuesAtHalfOverTemperature) {
  for_trials(10, 34, [](Gen& g) {
    const std::size_t L = g.extent(1, 8), d = 2, ws = g.extent(1, 7);
    const Tensor zero(Shape{1, L, d});
    const Tensor v = g.tensor(Shape{1, L, 3});
    const Tensor out = swat_pass_1d(zero, zero, v, Tensor(Shape{1, L, L}), decay_mask_multiplicative(DecaySpec::fixed({1.0}), L), ws);
    const auto colsum = vec(sum_dim(v, 1));
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out.at({0, i, c}), 0.5 / double(ws) * colsum[c], 1e-14);
  });
}

TEST(SwatTest, RejectsZeroTemperature) {
  const Tensor z(Shape{1, 2, 2});
  EXPECT_THROW(swat_weights(z, z, Tensor(Shape{1, 2, 2}), Tensor(Shape{1, 2, 2}), 0), ConfigError);
}

TEST(SwigluTest, MatchesElementwiseFormula) {
  for_trials(10, 35, [](Gen& g) {
    const std::size_t C = g.extent(1, 5);
    const Tensor v = g.tensor(Shape{g.extent(1, 4), 2 * C}, 6.0);
    const auto out = vec(swiglu_value(v)), in = vec(v);
    for (std::size_t r = 0; r < out.size() / C; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const double a = in[r * 2 * C + c], b = in[r * 2 * C + C + c];
        EXPECT_NEAR(out[r * C + c], a * b / (1.0 + std::exp(-b)), 1e-14);
      }
  });
}

TEST(GateTest, MonotoneInGateBias) {
  for_trials(10, 36, [](Gen& g) {
    const std::size_t C = 2 * g.extent(1, 3);
    Linear gate = Linear::init(C, C, g.rng);
    const Tensor o = g.tensor(Shape{3, C}), x = g.tensor(Shape{3, C});
    const auto before = vec(g1_gate(o, x, gate));
    for (double& b : gate.bias.mutable_data()) b += g.real(0.1, 2.0);
    const auto after = vec(g1_gate(o, x, gate));
    const auto ov = vec(o);
    for (std::size_t i = 0; i < ov.size(); ++i) {
      EXPECT_GE(std::abs(after[i]), std::abs(before[i]));
      EXPECT_LE(std::abs(after[i]), std::abs(ov[i]));
    }
  });
}

TEST(DmsaTest, MatchesLoopOracleUnmasked) {
  for_trials(24, 37, [](Gen& g) {
    Case c = random_case(g, g.variant(), g.extent(1, 2));
    const Tensor x = g.tensor(Shape{g.extent(1, 2), g.extent(1, 6), g.extent(1, 6), c.cfg.dim});
    EXPECT_LE(max_abs(vec(dmsa_decomposed(x, c.cfg, c.params)), vec(verify::oracle_attention_2d(x, c.cfg, c.params))),
              1e-10);
  });
}

TEST(DmsaTest, BlockOutputMatchesLoopOracleWithShiftMasks) {
  for_trials(24, 38, [](Gen& g) {
    Case c = random_case(g, g.variant(), g.extent(1, 2));
    const std::size_t M = g.extent(2, 5), s = g.extent(1, M / 2);
    const WindowLayout layout = make_layout(M, s, M * g.extent(1, 2), M * g.extent(1, 2));
    const DecomposedMask masks = decompose_mask_1d(layout);
    ASSERT_FALSE(masks.empty());
    const Tensor x = g.tensor(Shape{layout.num_windows() * g.extent(1, 2), M, M, c.cfg.dim});
    EXPECT_LE(max_abs(vec(attention_block_output(x, c.cfg, c.params, masks)),
                      vec(verify::oracle_attention_block(x, c.cfg, c.params, masks))),
              1e-10);
  });
}

TEST(DmsaTest, BaselineEqualsRetentionWithGateOpen) {
  Rng rng(8);
  auto cfg = AttentionConfig::for_variant(Variant::Retention, 4, 2, 3);
  AttentionParams p = AttentionParams::init(cfg, rng);
  for (double& w : p.gate.weight.mutable_data()) w = 0.0;
  for (double& b : p.gate.bias.mutable_data()) b = 800.0;
  const Tensor x = uniform_tensor(Shape{1, 3, 3, 4}, rng, -1, 1);
  const Tensor gated = attention_block_output(x, cfg, p);
  cfg.use_g1 = false;
  EXPECT_LE(max_abs(vec(gated), vec(attention_block_output(x, cfg, p))), 1e-15);
}

TEST(AttentionConfigTest, ValidationErrors) {
  auto cfg = AttentionConfig::for_variant(Variant::Retention, 6, 4, 7);
  EXPECT_THROW(cfg.validate(), ConfigError);  // 4 does not divide 6
  cfg = AttentionConfig::for_variant(Variant::Retention, 6, 2, 7);
  EXPECT_THROW(cfg.validate(), ConfigError);  // odd head dim
  cfg = AttentionConfig::for_variant(Variant::Swat, 8, 2, 0);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AttentionConfig::for_variant(Variant::Swat, 8, 2, 7);
  cfg.use_g1 = true;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(cfg.value_dim(), 16u);
}

TEST(AttentionConfigTest, VariantDefaults) {
  EXPECT_TRUE(AttentionConfig::for_variant(Variant::Retention, 8, 2, 7).use_g1);
  EXPECT_FALSE(AttentionConfig::for_variant(Variant::Swat, 8, 2, 7).use_g1);
  EXPECT_FALSE(AttentionConfig::for_variant(Variant::Baseline, 8, 2, 7, false).use_lce);
  EXPECT_TRUE(AttentionConfig::for_variant(Variant::Baseline, 8, 2, 7).use_lce);
}

TEST(DmsaTest, RejectsWrongChannelCount) {
  Rng rng(1);
  const auto cfg = AttentionConfig::for_variant(Variant::Swat, 4, 2, 3);
  const AttentionParams p = AttentionParams::init(cfg, rng);
  EXPECT_THROW(attention_block_output(Tensor(Shape{1, 2, 2, 6}), cfg, p), ShapeError);
  EXPECT_THROW(attention_block_output(Tensor(Shape{2, 2, 4}), cfg, p), ShapeError);
}

TEST(GradientTest, AttentionOpsAllPass) {
  for (const auto& r : verify::run_gradient_suite("attention")) EXPECT_TRUE(r.passed()) << r.summary();
}

}  // namespace
}  // namespace swinrmt
