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
#include "swinrmt/model.hpp"
#include "swinrmt/verify/grad_suite.hpp"
#include "swinrmt/verify/reference.hpp"

namespace swinrmt {
namespace {

using testing::for_trials;
using testing::Gen;
using testing::max_abs;
using testing::vec;

ModelConfig random_config(Gen& g) {
  ModelConfig c = ModelConfig::micro(g.variant(), 4 * g.extent(2, 8), g.extent(1, 5));
  const std::size_t h0 = g.extent(1, 2);
  const std::size_t base = 2 * h0 * g.extent(1, 2);
  for (std::size_t s = 0; s < kNumStages; ++s) {
    c.embed_dims[s] = base << s;
    c.num_heads[s] = h0 << (g.coin() ? s : 0);
    c.depths[s] = g.extent(1, 2);
    c.window_sizes[s] = g.extent(1, 7);
  }
  c.mlp_ratio = g.extent(1, 4);
  c.baseline_lce = g.coin();
  c.in_channels = g.extent(1, 3);
  return c;
}

TEST(ModelConfigTest, ValidationNamesTheProblem) {
  const auto expect_config_error = [](ModelConfig c) { EXPECT_THROW(c.validate(), ConfigError); };
  ModelConfig c = ModelConfig::micro(Variant::Swat);
  EXPECT_NO_THROW(c.validate());
  c.img_size = 18;
  expect_config_error(c);
  c = ModelConfig::micro(Variant::Swat);
  c.embed_dims = {8, 16, 30, 64};
  expect_config_error(c);
  c = ModelConfig::micro(Variant::Swat);
  c.depths = {1, 0, 1, 1};
  expect_config_error(c);
  c = ModelConfig::micro(Variant::Swat);
  c.num_heads = {1, 2, 3, 4};
  expect_config_error(c);
  c = ModelConfig::micro(Variant::Swat);
  c.window_sizes = {7, 7, 7};
  expect_config_error(c);
  c = ModelConfig::micro(Variant::Swat);
  c.droppath_max = 1.5;
  expect_config_error(c);
  c = ModelConfig::micro(Variant::Swat);
  c.num_classes = 0;
  expect_config_error(c);
  EXPECT_THROW(Model::init(c, 0), ConfigError);
}

TEST(ModelConfigTest, StageResolutionsHalveWithCeiling) {
  ModelConfig c;
  EXPECT_EQ(c.stage_resolutions(), (std::vector<std::size_t>{56, 28, 14, 7}));
  c.img_size = 32;
  EXPECT_EQ(c.stage_resolutions(), (std::vector<std::size_t>{8, 4, 2, 1}));
  c.img_size = 20;
  EXPECT_EQ(c.stage_resolutions(), (std::vector<std::size_t>{5, 3, 2, 1}));
}

TEST(ParamCountTest, ClosedFormMatchesEnumeration) {
  for_trials(25, 51, [](Gen& g) {
    const ModelConfig c = random_config(g);
    Model m = Model::init(c, 1);
    EXPECT_EQ(count_params(c), m.num_parameters()) << to_string(c.variant);
  });
}

TEST(ParamCountTest, VariantOrderingAtDefaults) {
  ModelConfig c;
  c.variant = Variant::Swat;
  const std::size_t swat = count_params(c);
  c.variant = Variant::Retention;
  const std::size_t retention = count_params(c);
  c.variant = Variant::Baseline;
  EXPECT_GT(swat, retention);
  EXPECT_GT(retention, count_params(c));
}

TEST(DropPathTest, ScheduleIsLinear) {
  EXPECT_EQ(droppath_schedule(1, 0.1), (std::vector<double>{0.0}));
  const auto r = droppath_schedule(5, 0.2);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(r[k], 0.05 * static_cast<double>(k), 1e-15);
  EXPECT_THROW(droppath_schedule(0, 0.1), ConfigError);
}

TEST(DropPathTest, DropFrequencyAndInvertedScaling) {
  for (double p : {0.1, 0.3, 0.5}) {
    Rng rng(static_cast<std::uint64_t>(p * 100));
    ForwardContext ctx{true, &rng};
    const std::size_t n = 20000;
    const auto y = vec(drop_path(Tensor(Shape{n, 1}, 1.0), p, ctx));
    std::size_t dropped = 0;
    double total = 0.0;
    for (double v : y) {
      if (v == 0.0) ++dropped;
      else EXPECT_DOUBLE_EQ(v, 1.0 / (1.0 - p));
      total += v;
    }
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
    EXPECT_NEAR(static_cast<double>(dropped) / static_cast<double>(n), p, 5 * sigma) << p;
    EXPECT_NEAR(total / static_cast<double>(n), 1.0, 5 * sigma / (1 - p)) << p;
  }
  ForwardContext eval{false, nullptr};
  const Tensor x(Shape{3, 2}, 2.0);
  EXPECT_EQ(vec(drop_path(x, 0.9, eval)), vec(x));
  ForwardContext missing{true, nullptr};
  EXPECT_THROW(drop_path(x, 0.5, missing), ConfigError);
}

// LN -> Linear -> GELU -> DWConv3x3 -> LN -> Linear, composed from the loop kernels.
TEST(FfnTest, MatchesCompositionOfLoopKernels) {
  Rng rng(17);
  const std::size_t B = 2, H = 3, W = 4, C = 4, ratio = 2, Hd = C * ratio;
  const Ffn ffn = Ffn::init(C, ratio, rng);
  const Tensor x = uniform_tensor(Shape{B, H, W, C}, rng, -2, 2);

  const auto linear = [](const std::vector<double>& in, const Linear& l, std::size_t rows) {
    auto y = verify::matmul_loop(in, vec(l.weight), rows, l.in_features(), l.out_features());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < l.out_features(); ++c) y[r * l.out_features() + c] += l.bias.data()[c];
    return y;
  };
  const std::size_t rows = B * H * W;
  auto h = linear(verify::layer_norm_loop(vec(x), C, vec(ffn.norm1.weight), vec(ffn.norm1.bias)), ffn.fc1, rows);
  for (double& v : h) v = 0.5 * v * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (v + 0.044715 * v * v * v)));
  std::vector<double> nchw(h.size()), back(h.size());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < H * W; ++i)
      for (std::size_t c = 0; c < Hd; ++c) nchw[(b * Hd + c) * H * W + i] = h[(b * H * W + i) * Hd + c];
  const auto conv = verify::conv2d_loop(nchw, vec(ffn.dwconv.weight), vec(ffn.dwconv.bias), B, Hd, H, W, Hd, 3,
                                        ffn.dwconv.options);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < H * W; ++i)
      for (std::size_t c = 0; c < Hd; ++c) back[(b * H * W + i) * Hd + c] = conv[(b * Hd + c) * H * W + i];
  const auto want = linear(verify::layer_norm_loop(back, Hd, vec(ffn.norm2.weight), vec(ffn.norm2.bias)), ffn.fc2, rows);
  EXPECT_LE(max_abs(vec(ffn(x)), want), 1e-10);
}

TEST(BlockTest, EvalForwardIsBitDeterministic) {
  for_trials(6, 52, [](Gen& g) {
    const auto cfg = AttentionConfig::for_variant(g.variant(), 4, 2, g.extent(2, 4));
    const Block b = Block::init(cfg, g.coin() ? cfg.window_size / 2 : 0, 0.3, g.real(0.01, 1.0), 2, g.rng);
    const Tensor x = g.tensor(Shape{2, g.extent(2, 7), g.extent(2, 7), 4});
    ForwardContext ctx{false, nullptr};
    EXPECT_TRUE(verify::bit_identical(block_forward(x, b, ctx), block_forward(x, b, ctx)));
  });
}

TEST(BlockTest, ZeroLayerScaleLeavesOnlyPositionalConv) {
  Rng rng(3);
  const auto cfg = AttentionConfig::for_variant(Variant::Baseline, 4, 2, 3);
  const Block b = Block::init(cfg, 1, 0.0, 0.0, 2, rng);
  const Tensor x = uniform_tensor(Shape{1, 5, 5, 4}, rng, -1, 1);
  ForwardContext ctx{false, nullptr};
  EXPECT_FALSE(b.pos.weight.defined());
  EXPECT_EQ(vec(block_forward(x, b, ctx)), vec(x));
}

TEST(ModelTest, LogitsShapeAndSeedDependence) {
  for_trials(6, 53, [](Gen& g) {
    const ModelConfig c = random_config(g);
    Model a = Model::init(c, 1), b = Model::init(c, 1), other = Model::init(c, 2);
    const Tensor img = g.tensor(Shape{2, c.in_channels, c.img_size, c.img_size}, 1.0);
    NoGradGuard guard;
    const Tensor la = a.forward(img);
    ASSERT_EQ(la.shape(), (Shape{2, c.num_classes}));
    for (double v : vec(la)) EXPECT_TRUE(std::isfinite(v));
    EXPECT_TRUE(verify::bit_identical(la, b.forward(img)));
    EXPECT_GT(verify::max_abs_diff(la, other.forward(img)), 0.0);
  });
}

std::vector<double> running_stats(Model& m) {
  std::vector<double> out;
  m.visit([&](const std::string&, Tensor& t, bool buffer) {
    if (buffer) out.insert(out.end(), t.data().begin(), t.data().end());
  });
  return out;
}

TEST(ModelTest, BatchNormStatisticsFollowMode) {
  Model m = Model::init(ModelConfig::micro(Variant::Retention), 5);
  Rng rng(5);
  const Tensor img = uniform_tensor(Shape{3, 3, 16, 16}, rng, -1, 1);
  const auto initial = running_stats(m);
  m.forward(img);
  EXPECT_EQ(running_stats(m), initial);
  m.set_training(true);
  m.set_bn_stat_updates(false);
  m.forward(img);
  EXPECT_EQ(running_stats(m), initial);
  m.set_bn_stat_updates(true);
  m.forward(img);
  EXPECT_NE(running_stats(m), initial);
}

TEST(ModelTest, ShiftedBlocksAlternate) {
  ModelConfig c = ModelConfig::micro(Variant::Swat, 32);
  c.depths = {2, 2, 3, 1};
  const Model m = Model::init(c, 0);
  for (std::size_t s = 0; s < kNumStages; ++s)
    for (std::size_t b = 0; b < c.depths[s]; ++b) EXPECT_EQ(m.stages()[s][b].shift, b % 2 ? c.window_sizes[s] / 2 : 0u);
  const auto layouts = m.layouts();
  const auto res = c.stage_resolutions();
  for (std::size_t s = 0; s < kNumStages; ++s)
    for (const WindowLayout& l : layouts[s]) EXPECT_EQ(l.is_global(), l.eff_window >= res[s]);
}

TEST(GradientTest, ModelPiecesAllPass) {
  for (const auto& r : verify::run_gradient_suite("model")) EXPECT_TRUE(r.passed()) << r.summary();
}

}  // namespace
}  // namespace swinrmt
