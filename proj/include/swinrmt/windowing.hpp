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

#pragma once

// Window partition / reverse, cyclic shift with Swin region masking, and
// adaptive window sizing. Feature maps are channels-last [B, H, W, C].

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "swinrmt/ops.hpp"

namespace swinrmt {

/// Additive value marking a blocked token pair.
inline constexpr double kMaskValue = -1e9;

struct AdaptiveWindow {
  std::size_t window = 0;  // effective window M-hat
  std::size_t shift = 0;   // effective shift s-hat
};

/// M-hat = min(M, H, W); s-hat = min(s, floor(M-hat / 2)).
inline AdaptiveWindow adaptive_window(std::size_t window, std::size_t shift, std::size_t height, std::size_t width) {
  if (window == 0 || height == 0 || width == 0) throw ConfigError("adaptive_window: extents must be positive");
  if (shift >= window) throw ConfigError("adaptive_window: shift must be smaller than the window");
  AdaptiveWindow out;
  out.window = std::min({window, height, width});
  out.shift = std::min(shift, out.window / 2);
  return out;
}

struct WindowLayout {
  std::size_t window = 0;      // nominal M
  std::size_t shift = 0;       // nominal s
  std::size_t eff_window = 0;  // M-hat
  std::size_t eff_shift = 0;   // s-hat
  std::size_t height = 0;      // H'
  std::size_t width = 0;       // W'
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  std::optional<Tensor> shift_mask;  // [nW, M-hat^2, M-hat^2], present iff s-hat > 0

  std::size_t padded_h() const { return height + pad_h; }
  std::size_t padded_w() const { return width + pad_w; }
  std::size_t windows_h() const { return padded_h() / eff_window; }
  std::size_t windows_w() const { return padded_w() / eff_window; }
  std::size_t num_windows() const { return windows_h() * windows_w(); }
  /// The whole map fits in one window, so attention is global.
  bool is_global() const { return eff_window >= std::max(height, width); }
};

namespace detail {

inline std::size_t region_of(std::size_t coord, std::size_t padded, std::size_t window, std::size_t shift) {
  if (coord < padded - window) return 0;
  if (coord < padded - shift) return 1;
  return 2;
}

}  // namespace detail

/// Swin region id of every token in the shifted, padded frame, row-major.
inline std::vector<int> shift_region_ids(const WindowLayout& layout) {
  const std::size_t Hp = layout.padded_h(), Wp = layout.padded_w();
  const std::size_t M = layout.eff_window, s = layout.eff_shift;
  std::vector<int> ids(Hp * Wp);
  for (std::size_t h = 0; h < Hp; ++h)
    for (std::size_t w = 0; w < Wp; ++w)
      ids[h * Wp + w] = static_cast<int>(detail::region_of(h, Hp, M, s) * 3 + detail::region_of(w, Wp, M, s));
  return ids;
}

/// [nW, M^2, M^2]: 0 where both tokens of a window share a region, kMaskValue otherwise.
inline Tensor build_shift_mask(const WindowLayout& layout) {
  const std::size_t M = layout.eff_window, T = M * M, nWh = layout.windows_h(), nWw = layout.windows_w();
  const std::size_t Wp = layout.padded_w();
  const auto ids = shift_region_ids(layout);
  std::vector<double> mask(nWh * nWw * T * T, 0.0);
  for (std::size_t wh = 0; wh < nWh; ++wh)
    for (std::size_t ww = 0; ww < nWw; ++ww) {
      const std::size_t w = wh * nWw + ww;
      for (std::size_t t1 = 0; t1 < T; ++t1)
        for (std::size_t t2 = 0; t2 < T; ++t2) {
          const int r1 = ids[(wh * M + t1 / M) * Wp + ww * M + t1 % M];
          const int r2 = ids[(wh * M + t2 / M) * Wp + ww * M + t2 % M];
          if (r1 != r2) mask[(w * T + t1) * T + t2] = kMaskValue;
        }
    }
  return Tensor(Shape{nWh * nWw, T, T}, std::move(mask));
}

/// Resolves the windowing geometry of one H x W feature map.
inline WindowLayout make_layout(std::size_t window, std::size_t shift, std::size_t height, std::size_t width) {
  const AdaptiveWindow eff = adaptive_window(window, shift, height, width);
  WindowLayout layout;
  layout.window = window;
  layout.shift = shift;
  layout.eff_window = eff.window;
  layout.eff_shift = eff.shift;
  layout.height = height;
  layout.width = width;
  layout.pad_h = (eff.window - height % eff.window) % eff.window;
  layout.pad_w = (eff.window - width % eff.window) % eff.window;
  if (eff.shift > 0) layout.shift_mask = build_shift_mask(layout);
  return layout;
}

/// Zero-pads bottom/right of [B, H, W, C] to [B, H + pad_h, W + pad_w, C].
inline Tensor pad_hw(const Tensor& x, std::size_t pad_h, std::size_t pad_w) {
  if (x.dim() != 4) throw ShapeError("pad_hw: expects [B,H,W,C]");
  if (pad_h == 0 && pad_w == 0) return x;
  const std::size_t B = x.size(0), H = x.size(1), W = x.size(2), C = x.size(3);
  const std::size_t Hp = H + pad_h, Wp = W + pad_w;
  auto index = std::make_shared<std::vector<std::int64_t>>(B * Hp * Wp * C, -1);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w)
        for (std::size_t c = 0; c < C; ++c)
          (*index)[((b * Hp + h) * Wp + w) * C + c] = static_cast<std::int64_t>(((b * H + h) * W + w) * C + c);
  return gather(x, Shape{B, Hp, Wp, C}, std::move(index), "pad");
}

/// Keeps the top-left H x W region of [B, Hp, Wp, C].
inline Tensor crop_hw(const Tensor& x, std::size_t height, std::size_t width) {
  if (x.dim() != 4 || height > x.size(1) || width > x.size(2)) throw ShapeError("crop_hw: bad crop extents");
  if (height == x.size(1) && width == x.size(2)) return x;
  const std::size_t B = x.size(0), Hp = x.size(1), Wp = x.size(2), C = x.size(3);
  auto index = std::make_shared<std::vector<std::int64_t>>(B * height * width * C);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < height; ++h)
      for (std::size_t w = 0; w < width; ++w)
        for (std::size_t c = 0; c < C; ++c)
          (*index)[((b * height + h) * width + w) * C + c] =
              static_cast<std::int64_t>(((b * Hp + h) * Wp + w) * C + c);
  return gather(x, Shape{B, height, width, C}, std::move(index), "crop");
}

/// Cyclic roll over H and W: out[h][w] = x[(h + dh) mod H][(w + dw) mod W].
inline Tensor roll_hw(const Tensor& x, std::ptrdiff_t dh, std::ptrdiff_t dw) {
  if (x.dim() != 4) throw ShapeError("roll_hw: expects [B,H,W,C]");
  const std::size_t B = x.size(0), H = x.size(1), W = x.size(2), C = x.size(3);
  const auto wrap = [](std::ptrdiff_t v, std::size_t n) {
    const auto m = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((v % m) + m) % m);
  };
  auto index = std::make_shared<std::vector<std::int64_t>>(x.numel());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t sh = wrap(static_cast<std::ptrdiff_t>(h) + dh, H);
        const std::size_t sw = wrap(static_cast<std::ptrdiff_t>(w) + dw, W);
        for (std::size_t c = 0; c < C; ++c)
          (*index)[((b * H + h) * W + w) * C + c] = static_cast<std::int64_t>(((b * H + sh) * W + sw) * C + c);
      }
  return gather(x, x.shape(), std::move(index), "roll");
}

/// Rolls the map by (-shift, -shift) so shifted windows line up with the grid.
inline Tensor cyclic_shift(const Tensor& x, std::size_t shift) {
  if (shift == 0) return x;
  const auto s = static_cast<std::ptrdiff_t>(shift);
  return roll_hw(x, s, s);
}

inline Tensor cyclic_unshift(const Tensor& x, std::size_t shift) {
  if (shift == 0) return x;
  const auto s = static_cast<std::ptrdiff_t>(shift);
  return roll_hw(x, -s, -s);
}

/// [B, H, W, C] -> [B * nW, M, M, C], zero-padding bottom/right when M does not divide H or W.
/// Windows are ordered batch-major, then row-major over the window grid.
inline Tensor window_partition(const Tensor& x, std::size_t window) {
  if (x.dim() != 4) throw ShapeError("window_partition: expects [B,H,W,C], got " + shape_str(x.shape()));
  if (window == 0) throw ConfigError("window_partition: window must be positive");
  const std::size_t H = x.size(1), W = x.size(2);
  const Tensor padded = pad_hw(x, (window - H % window) % window, (window - W % window) % window);
  const std::size_t B = padded.size(0), Hp = padded.size(1), Wp = padded.size(2), C = padded.size(3);
  const std::size_t nh = Hp / window, nw = Wp / window;
  Tensor t = reshape(padded, Shape{B, nh, window, nw, window, C});
  t = permute(t, {0, 1, 3, 2, 4, 5});
  return reshape(t, Shape{B * nh * nw, window, window, C});
}

/// Inverse of window_partition; strips the padding back to H x W.
inline Tensor window_reverse(const Tensor& windows, std::size_t window, std::size_t height, std::size_t width) {
  if (windows.dim() != 4 || windows.size(1) != window || windows.size(2) != window) {
    throw ShapeError("window_reverse: expects [B*nW, M, M, C]");
  }
  const std::size_t nh = (height + window - 1) / window, nw = (width + window - 1) / window;
  const std::size_t C = windows.size(3);
  if (windows.size(0) % (nh * nw) != 0) throw ShapeError("window_reverse: window count does not match the map");
  const std::size_t B = windows.size(0) / (nh * nw);
  Tensor t = reshape(windows, Shape{B, nh, nw, window, window, C});
  t = permute(t, {0, 1, 3, 2, 4, 5});
  t = reshape(t, Shape{B, nh * window, nw * window, C});
  return crop_hw(t, height, width);
}

/// Restrictions of the 2-D shift mask to the width-wise and height-wise passes.
///   width  [nW, M (row), M, M]: pair (c1, c2) inside row r
///   height [nW, M (col), M, M]: pair (r1, r2) inside column c
/// A pair blocked in 2-D that shares a row (column) is blocked in the width (height)
/// pass, so information never crosses a region boundary through either pass.
struct DecomposedMask {
  Tensor width;
  Tensor height;
  bool empty() const { return !width.defined(); }
};

inline DecomposedMask decompose_mask_1d(const std::optional<Tensor>& shift_mask) {
  if (!shift_mask) return {};
  const Tensor& m2 = *shift_mask;
  if (m2.dim() != 3 || m2.size(1) != m2.size(2)) throw ShapeError("decompose_mask_1d: expects [nW, T, T]");
  const std::size_t nW = m2.size(0), T = m2.size(1);
  const auto M = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(T))));
  if (M * M != T) throw ShapeError("decompose_mask_1d: token count is not a square");
  std::vector<double> wm(nW * M * M * M), hm(nW * M * M * M);
  auto md = m2.data();
  for (std::size_t w = 0; w < nW; ++w)
    for (std::size_t line = 0; line < M; ++line)
      for (std::size_t a = 0; a < M; ++a)
        for (std::size_t b = 0; b < M; ++b) {
          const std::size_t dst = ((w * M + line) * M + a) * M + b;
          wm[dst] = md[(w * T + line * M + a) * T + line * M + b];
          hm[dst] = md[(w * T + a * M + line) * T + b * M + line];
        }
  return {Tensor(Shape{nW, M, M, M}, std::move(wm)), Tensor(Shape{nW, M, M, M}, std::move(hm))};
}

inline DecomposedMask decompose_mask_1d(const WindowLayout& layout) { return decompose_mask_1d(layout.shift_mask); }

/// Broadcasts a per-window 1-D mask [nW, R, L, L] to logits of shape
/// [total, R, heads, L, L], where window index = sample % nW. With
/// `multiplicative`, blocked pairs become 0 and open pairs 1.
inline Tensor expand_window_mask(const Tensor& mask, std::size_t total, std::size_t heads, bool multiplicative) {
  const std::size_t nW = mask.size(0), R = mask.size(1), L = mask.size(2);
  if (total % nW != 0) throw ShapeError("expand_window_mask: batch is not a multiple of the window count");
  std::vector<double> out(total * R * heads * L * L);
  auto md = mask.data();
  for (std::size_t b = 0; b < total; ++b)
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t ij = 0; ij < L * L; ++ij) {
          const double v = md[((b % nW) * R + r) * L * L + ij];
          out[(((b * R + r) * heads + h) * L * L) + ij] = multiplicative ? (v < 0.0 ? 0.0 : 1.0) : v;
        }
  return Tensor(Shape{total, R, heads, L, L}, std::move(out));
}

}  // namespace swinrmt
