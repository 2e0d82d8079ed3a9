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

#include <algorithm>
#include <tuple>

#include "generators.hpp"
#include "swinrmt/model.hpp"
#include "swinrmt/verify/criteria.hpp"
#include "swinrmt/verify/grad_suite.hpp"
#include "swinrmt/verify/oracles.hpp"
#include "swinrmt/windowing.hpp"

namespace swinrmt {
namespace {

using testing::for_trials;
using testing::Gen;
using testing::max_abs;
using testing::vec;

// Swin slice of one padded coordinate: [0, P-M), [P-M, P-s), [P-s, P).
int slice_of(std::size_t c, std::size_t P, std::size_t M, std::size_t s) {
  const std::size_t bounds[] = {P - M, P - s, P};
  return static_cast<int>(std::upper_bound(std::begin(bounds), std::end(bounds), c) - std::begin(bounds));
}

// Per-window loop reference for windowed_attention. Windows go one at a time
// through the block oracle with their own 1-D masks.
Tensor windowed_oracle(const Tensor& x, const AttentionConfig& cfg, const AttentionParams& params,
                       const WindowLayout& layout) {
  const std::size_t B = x.size(0), H = x.size(1), W = x.size(2), C = x.size(3);
  const std::size_t M = layout.eff_window, s = layout.eff_shift, Hp = layout.padded_h(), Wp = layout.padded_w();
  const DecomposedMask masks = decompose_mask_1d(layout);
  const auto source = [&](std::size_t b, std::size_t h, std::size_t w, std::size_t c) {
    return h < H && w < W ? x.at({b, h, w, c}) : 0.0;
  };
  std::vector<double> out(B * H * W * C, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t wy = 0; wy < layout.windows_h(); ++wy)
      for (std::size_t wx = 0; wx < layout.windows_w(); ++wx) {
        Tensor win(Shape{1, M, M, C});
        auto wd = win.mutable_data();
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < M; ++j)
            for (std::size_t c = 0; c < C; ++c)
              wd[(i * M + j) * C + c] = source(b, (wy * M + i + s) % Hp, (wx * M + j + s) % Wp, c);
        DecomposedMask one;
        if (!masks.empty()) {
          const std::size_t idx = wy * layout.windows_w() + wx, n = M * M * M;
          const auto slice = [&](const Tensor& m) {
            return Tensor(Shape{1, M, M, M}, std::vector<double>(m.data().begin() + static_cast<std::ptrdiff_t>(idx * n),
                                                                 m.data().begin() + static_cast<std::ptrdiff_t>((idx + 1) * n)));
          };
          one = {slice(masks.width), slice(masks.height)};
        }
        const Tensor r = verify::oracle_attention_block(win, cfg, params, one);
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < M; ++j) {
            const std::size_t h = (wy * M + i + s) % Hp, w = (wx * M + j + s) % Wp;
            if (h >= H || w >= W) continue;
            for (std::size_t c = 0; c < C; ++c) out[((b * H + h) * W + w) * C + c] = r.at({0, i, j, c});
          }
      }
  return Tensor(x.shape(), std::move(out));
}

TEST(AdaptiveWindowTest, LawsHoldOverRandomGeometry) {
  for_trials(200, 41, [](Gen& g) {
    const std::size_t M = g.extent(1, 12), s = g.extent(0, M - 1), H = g.extent(1, 40), W = g.extent(1, 40);
    const WindowLayout l = make_layout(M, s, H, W);
    EXPECT_EQ(l.eff_window, std::min({M, H, W}));
    EXPECT_LE(2 * l.eff_shift, l.eff_window);
    EXPECT_LE(l.eff_shift, s);
    EXPECT_LT(l.pad_h, l.eff_window);
    EXPECT_EQ(l.padded_h() % l.eff_window, 0u);
    EXPECT_EQ(l.padded_w() % l.eff_window, 0u);
    EXPECT_EQ(l.shift_mask.has_value(), l.eff_shift > 0);
    EXPECT_EQ(l.is_global(), l.eff_window >= std::max(H, W));
  });
}

TEST(AdaptiveWindowTest, RejectsDegenerateInputs) {
  EXPECT_THROW(adaptive_window(0, 0, 4, 4), ConfigError);
  EXPECT_THROW(adaptive_window(4, 0, 0, 4), ConfigError);
  EXPECT_THROW(adaptive_window(4, 5, 8, 8), ConfigError);
  EXPECT_THROW(window_partition(Tensor(Shape{1, 4, 4, 1}), 0), ConfigError);
  EXPECT_THROW(window_partition(Tensor(Shape{4, 4, 1}), 2), ShapeError);
  EXPECT_THROW(window_reverse(Tensor(Shape{3, 2, 2, 1}), 2, 4, 4), ShapeError);
  EXPECT_THROW(crop_hw(Tensor(Shape{1, 2, 2, 1}), 3, 2), ShapeError);
}

TEST(PartitionTest, RoundTripIncludingPadding) {
  for_trials(50, 42, [](Gen& g) {
    const std::size_t M = g.extent(1, 5), H = g.extent(1, 11), W = g.extent(1, 11);
    const Tensor x = g.tensor(Shape{g.extent(1, 2), H, W, g.extent(1, 3)});
    const WindowLayout l = make_layout(M, 0, H, W);
    const Tensor w = window_partition(x, l.eff_window);
    EXPECT_EQ(w.size(0), x.size(0) * l.num_windows());
    EXPECT_EQ(vec(window_reverse(w, l.eff_window, H, W)), vec(x));
  });
}

TEST(PartitionTest, RollInvertsAndShiftUnshiftCancels) {
  for_trials(30, 43, [](Gen& g) {
    const std::size_t H = g.extent(1, 9), W = g.extent(1, 9);
    const Tensor x = g.tensor(Shape{1, H, W, 2});
    const auto dh = static_cast<std::ptrdiff_t>(g.extent(0, 20)) - 10, dw = static_cast<std::ptrdiff_t>(g.extent(0, 20)) - 10;
    EXPECT_EQ(vec(roll_hw(roll_hw(x, dh, dw), -dh, -dw)), vec(x));
    const std::size_t s = g.extent(0, std::min(H, W));
    EXPECT_EQ(vec(cyclic_unshift(cyclic_shift(x, s), s)), vec(x));
    const Tensor r = roll_hw(x, dh, dw);
    const auto wrap = [](std::ptrdiff_t v, std::size_t n) { return static_cast<std::size_t>(((v % std::ptrdiff_t(n)) + std::ptrdiff_t(n)) % std::ptrdiff_t(n)); };
    EXPECT_EQ(r.at({0, 0, 0, 1}), x.at({0, wrap(dh, H), wrap(dw, W), 1}));
  });
}

TEST(PartitionTest, PadThenCropIsIdentityAndPadsWithZeros) {
  Rng rng(4);
  const Tensor x = uniform_tensor(Shape{2, 3, 2, 2}, rng, -1, 1);
  const Tensor p = pad_hw(x, 2, 1);
  EXPECT_EQ(p.shape(), (Shape{2, 5, 3, 2}));
  EXPECT_EQ(p.at({1, 4, 2, 1}), 0.0);
  EXPECT_EQ(vec(crop_hw(p, 3, 2)), vec(x));
}

TEST(ShiftMaskTest, BlocksExactlyCrossRegionPairs) {
  for_trials(40, 44, [](Gen& g) {
    const std::size_t M = g.extent(2, 6), s = g.extent(1, M / 2);
    const std::size_t H = g.extent(M, 3 * M), W = g.extent(M, 3 * M);
    const WindowLayout l = make_layout(M, s, H, W);
    ASSERT_TRUE(l.shift_mask.has_value());
    const std::size_t Me = l.eff_window, se = l.eff_shift, T = Me * Me, Wp = l.padded_w(), Hp = l.padded_h();
    const Tensor& mask = *l.shift_mask;
    ASSERT_EQ(mask.shape(), (Shape{l.num_windows(), T, T}));
    const DecomposedMask d = decompose_mask_1d(l);
    const auto region = [&](std::size_t h, std::size_t w) {
      return std::pair{slice_of(h, Hp, Me, se), slice_of(w, Wp, Me, se)};
    };
    for (std::size_t wy = 0; wy < l.windows_h(); ++wy)
      for (std::size_t wx = 0; wx < l.windows_w(); ++wx) {
        const std::size_t wi = wy * l.windows_w() + wx;
        for (std::size_t t1 = 0; t1 < T; ++t1)
          for (std::size_t t2 = 0; t2 < T; ++t2) {
            const bool same = region(wy * Me + t1 / Me, wx * Me + t1 % Me) == region(wy * Me + t2 / Me, wx * Me + t2 % Me);
            EXPECT_EQ(mask.at({wi, t1, t2}), same ? 0.0 : kMaskValue);
          }
        // The 1-D masks are restrictions: a pair on one row (column) is
        // blocked in the width (height) pass iff it is blocked in 2-D.
        for (std::size_t line = 0; line < Me; ++line)
          for (std::size_t a = 0; a < Me; ++a)
            for (std::size_t b = 0; b < Me; ++b) {
              const bool row_same = region(wy * Me + line, wx * Me + a) == region(wy * Me + line, wx * Me + b);
              const bool col_same = region(wy * Me + a, wx * Me + line) == region(wy * Me + b, wx * Me + line);
              EXPECT_EQ(d.width.at({wi, line, a, b}) < 0.0, !row_same);
              EXPECT_EQ(d.height.at({wi, line, a, b}) < 0.0, !col_same);
            }
      }
  });
}

TEST(ShiftMaskTest, AbsentWithoutEffectiveShift) {
  EXPECT_FALSE(make_layout(7, 0, 14, 14).shift_mask.has_value());
  EXPECT_FALSE(make_layout(7, 3, 1, 1).shift_mask.has_value());  // M-hat 1 leaves no room to shift
  EXPECT_TRUE(decompose_mask_1d(make_layout(7, 3, 8, 8)).width.defined());
  EXPECT_TRUE(decompose_mask_1d(std::optional<Tensor>{}).empty());
  EXPECT_THROW(decompose_mask_1d(std::optional<Tensor>(Tensor(Shape{1, 3, 3}))), ShapeError);
}

TEST(WindowedAttentionTest, MatchesPerWindowOracle) {
  for_trials(24, 45, [](Gen& g) {
    const Variant v = g.variant();
    const std::size_t heads = g.extent(1, 2);
    const auto cfg = AttentionConfig::for_variant(v, 2 * heads, heads, g.extent(2, 5), g.coin());
    AttentionParams p = AttentionParams::init(cfg, g.rng);
    p.decay_w = g.decay(heads);
    p.decay_h = g.decay(heads);
    const std::size_t shift = g.coin() ? cfg.window_size / 2 : 0;
    const std::size_t H = g.extent(1, 11), W = g.extent(1, 11);
    const WindowLayout layout = make_layout(cfg.window_size, shift, H, W);
    const Tensor x = g.tensor(Shape{g.extent(1, 2), H, W, cfg.dim});
    SCOPED_TRACE(to_string(v) + " " + std::to_string(H) + "x" + std::to_string(W) + " M=" +
                 std::to_string(cfg.window_size) + " s=" + std::to_string(shift));
    EXPECT_LE(max_abs(vec(windowed_attention(x, cfg, p, layout)), vec(windowed_oracle(x, cfg, p, layout))), 1e-10);
  });
}

TEST(WindowedAttentionTest, ImpulsesStayInsideTheirRegion) {
  for (const auto& [n, M, s] : {std::tuple<std::size_t, std::size_t, std::size_t>{6, 3, 1}, {5, 2, 1}, {7, 4, 2}, {9, 4, 2}}) {
    for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
      const verify::ImpulseReport r = verify::impulse_propagation(v, n, M, s);
      EXPECT_EQ(r.max_leak, 0.0) << to_string(v) << " n=" << n << " M=" << M << " s=" << s;
      EXPECT_GT(r.min_self_response, 0.0) << to_string(v) << " n=" << n;
    }
  }
}

// Shifted blocks keep their roll and region mask even when one window covers
// the map; only the unshifted case reduces to full-map attention.
TEST(WindowedAttentionTest, UnshiftedSingleWindowEqualsFullMap) {
  for_trials(10, 46, [](Gen& g) {
    const Variant v = g.variant();
    const std::size_t n = g.extent(2, 6);
    const auto cfg = AttentionConfig::for_variant(v, 4, 2, n + g.extent(0, 4));
    const AttentionParams p = AttentionParams::init(cfg, g.rng);
    const Tensor x = g.tensor(Shape{1, n, n, 4});
    const WindowLayout layout = make_layout(cfg.window_size, 0, n, n);
    ASSERT_EQ(layout.num_windows(), 1u);
    EXPECT_LE(max_abs(vec(windowed_attention(x, cfg, p, layout)), vec(attention_block_output(x, cfg, p))), 1e-12);
  });
}

TEST(GradientTest, WindowingOpsAllPass) {
  for (const auto& r : verify::run_gradient_suite("windowing")) EXPECT_TRUE(r.passed()) << r.summary();
}

}  // namespace
}  // namespace swinrmt
