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

// Scalar-loop reference implementations of the attention path. They read raw
// parameter values and never call into the tensor ops, so they stay
// independent of the vectorized code they check. Size-capped on purpose.

#include <cmath>
#include <vector>

#include "swinrmt/attention.hpp"

namespace swinrmt::verify {

inline constexpr std::size_t kOracleMaxExtent = 6;

namespace detail {

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Dense row-major 4-D buffer [B, H, W, C].
struct Map {
  std::size_t B = 0, H = 0, W = 0, C = 0;
  std::vector<double> v;
  Map(std::size_t b, std::size_t h, std::size_t w, std::size_t c) : B(b), H(h), W(w), C(c), v(b * h * w * c, 0.0) {}
  double& at(std::size_t b, std::size_t h, std::size_t w, std::size_t c) { return v[((b * H + h) * W + w) * C + c]; }
  double at(std::size_t b, std::size_t h, std::size_t w, std::size_t c) const {
    return v[((b * H + h) * W + w) * C + c];
  }
};

inline Map linear_loop(const Map& x, const Linear& lin) {
  const std::size_t in = lin.weight.size(0), out = lin.weight.size(1);
  auto w = lin.weight.data();
  Map y(x.B, x.H, x.W, out);
  for (std::size_t b = 0; b < x.B; ++b)
    for (std::size_t h = 0; h < x.H; ++h)
      for (std::size_t ww = 0; ww < x.W; ++ww)
        for (std::size_t o = 0; o < out; ++o) {
          double acc = lin.bias.defined() ? lin.bias.data()[o] : 0.0;
          for (std::size_t i = 0; i < in; ++i) acc += x.at(b, h, ww, i) * w[i * out + o];
          y.at(b, h, ww, o) = acc;
        }
  return y;
}

inline std::vector<double> gammas_loop(const DecaySpec& spec) {
  std::vector<double> g(spec.num_heads());
  auto raw = spec.param().data();
  for (std::size_t h = 0; h < g.size(); ++h) {
    g[h] = spec.learnable_param() ? kGammaMin + (kGammaMax - kGammaMin) * sig(raw[h]) : std::exp(raw[h]);
  }
  return g;
}

// Rotates the head slice [n*d, (n+1)*d) of every token by position(h, w) * theta_j.
template <typename PosFn>
Map rope_loop(const Map& x, std::size_t heads, PosFn position) {
  const std::size_t d = x.C / heads;
  Map y = x;
  for (std::size_t b = 0; b < x.B; ++b)
    for (std::size_t h = 0; h < x.H; ++h)
      for (std::size_t w = 0; w < x.W; ++w)
        for (std::size_t n = 0; n < heads; ++n)
          for (std::size_t j = 0; j < d / 2; ++j) {
            const double theta = std::pow(10000.0, -2.0 * static_cast<double>(j) / static_cast<double>(d));
            const double angle = static_cast<double>(position(h, w)) * theta;
            const double a = x.at(b, h, w, n * d + 2 * j), c = x.at(b, h, w, n * d + 2 * j + 1);
            y.at(b, h, w, n * d + 2 * j) = a * std::cos(angle) - c * std::sin(angle);
            y.at(b, h, w, n * d + 2 * j + 1) = c * std::cos(angle) + a * std::sin(angle);
          }
  return y;
}

inline Map from_tensor(const Tensor& t) {
  Map m(t.size(0), t.size(1), t.size(2), t.size(3));
  std::copy(t.data().begin(), t.data().end(), m.v.begin());
  return m;
}

inline Tensor to_tensor(const Map& m) { return Tensor(Shape{m.B, m.H, m.W, m.C}, m.v); }

struct OracleDmsa {
  Map out;
  Map value;
};

// One 1-D pass along an axis. `along_width` selects rows (width pass) or columns.
inline Map pass_loop(const Map& q, const Map& k, const Map& v, const AttentionConfig& cfg, const AttentionParams& params,
                     const std::vector<double>& gamma, const Tensor& mask, bool along_width) {
  const std::size_t heads = cfg.num_heads, d = q.C / heads;
  const bool swat = cfg.variant == Variant::Swat;
  const std::size_t lines = along_width ? q.H : q.W, L = along_width ? q.W : q.H;
  Map out(q.B, q.H, q.W, q.C);
  const auto token = [&](std::size_t line, std::size_t i, std::size_t& h, std::size_t& w) {
    h = along_width ? line : i;
    w = along_width ? i : line;
  };
  for (std::size_t b = 0; b < q.B; ++b)
    for (std::size_t n = 0; n < heads; ++n)
      for (std::size_t line = 0; line < lines; ++line)
        for (std::size_t i = 0; i < L; ++i) {
          std::size_t hi, wi;
          token(line, i, hi, wi);
          std::vector<double> weight(L);
          for (std::size_t j = 0; j < L; ++j) {
            std::size_t hj, wj;
            token(line, j, hj, wj);
            double dot = 0.0;
            for (std::size_t e = 0; e < d; ++e) dot += q.at(b, hi, wi, n * d + e) * k.at(b, hj, wj, n * d + e);
            const double dist = static_cast<double>(i > j ? i - j : j - i);
            double m = 0.0;
            if (mask.defined()) {
              const std::size_t nW = mask.size(0);
              m = mask.data()[(((b % nW) * lines + line) * L + i) * L + j];
            }
            if (swat) {
              const double slope = params.alibi_slopes.data()[n];
              weight[j] = sig(dot + slope * dist) / static_cast<double>(cfg.window_size) * std::pow(gamma[n], dist);
              if (m < 0.0) weight[j] = 0.0;
            } else {
              weight[j] = dot / std::sqrt(static_cast<double>(d)) + dist * std::log(gamma[n]) + m;
            }
          }
          if (!swat) {
            double mx = weight[0];
            for (double s : weight) mx = std::max(mx, s);
            double z = 0.0;
            for (double& s : weight) z += (s = std::exp(s - mx));
            for (double& s : weight) s /= z;
          }
          for (std::size_t e = 0; e < d; ++e) {
            double acc = 0.0;
            for (std::size_t j = 0; j < L; ++j) {
              std::size_t hj, wj;
              token(line, j, hj, wj);
              acc += weight[j] * v.at(b, hj, wj, n * d + e);
            }
            out.at(b, hi, wi, n * d + e) = acc;
          }
        }
  return out;
}

inline OracleDmsa dmsa_loop(const Tensor& x_t, const AttentionConfig& cfg, const AttentionParams& params,
                            const DecomposedMask& masks) {
  if (x_t.dim() != 4 || x_t.size(1) > kOracleMaxExtent || x_t.size(2) > kOracleMaxExtent) {
    throw ConfigError("oracle refuses windows larger than 6x6 (it is O(L^4) loops)");
  }
  const Map x = from_tensor(x_t);
  const std::size_t C = cfg.dim, heads = cfg.num_heads;
  const bool swat = cfg.variant == Variant::Swat;
  Map q = linear_loop(x, params.q), k = linear_loop(x, params.k);
  Map vraw = linear_loop(x, params.v);
  Map v(x.B, x.H, x.W, C);
  for (std::size_t b = 0; b < x.B; ++b)
    for (std::size_t h = 0; h < x.H; ++h)
      for (std::size_t w = 0; w < x.W; ++w)
        for (std::size_t c = 0; c < C; ++c) {
          if (swat) {
            const double gate = vraw.at(b, h, w, C + c);
            v.at(b, h, w, c) = vraw.at(b, h, w, c) * gate * sig(gate);
          } else {
            v.at(b, h, w, c) = vraw.at(b, h, w, c);
          }
        }
  const auto gw = gammas_loop(params.decay_w), gh = gammas_loop(params.decay_h);
  const std::size_t W = x.W;
  Map qw = q, kw = k, qh = q, kh = k;
  if (swat) {
    qw = rope_loop(q, heads, [](std::size_t, std::size_t w) { return w; });
    kw = rope_loop(k, heads, [](std::size_t, std::size_t w) { return w; });
    qh = rope_loop(q, heads, [](std::size_t h, std::size_t) { return h; });
    kh = rope_loop(k, heads, [](std::size_t h, std::size_t) { return h; });
  } else {
    qw = qh = rope_loop(q, heads, [W](std::size_t h, std::size_t w) { return h * W + w; });
    kw = kh = rope_loop(k, heads, [W](std::size_t h, std::size_t w) { return h * W + w; });
  }
  const Tensor none;
  const Map ow = pass_loop(qw, kw, v, cfg, params, gw, masks.empty() ? none : masks.width, true);
  Map out = pass_loop(qh, kh, ow, cfg, params, gh, masks.empty() ? none : masks.height, false);
  return {std::move(out), std::move(v)};
}

}  // namespace detail

/// Loop reference for dmsa_decomposed on one window batch [B, H', W', C], H', W' <= 6.
inline Tensor oracle_attention_2d(const Tensor& x, const AttentionConfig& cfg, const AttentionParams& params,
                                  const DecomposedMask& masks = {}) {
  return detail::to_tensor(detail::dmsa_loop(x, cfg, params, masks).out);
}

/// Loop reference for attention_block_output: adds LCE, G1 gate and W_O.
inline Tensor oracle_attention_block(const Tensor& x_t, const AttentionConfig& cfg, const AttentionParams& params,
                                     const DecomposedMask& masks = {}) {
  using detail::Map;
  auto [o, v] = detail::dmsa_loop(x_t, cfg, params, masks);
  const std::size_t C = cfg.dim;
  if (cfg.use_lce) {
    Map dw(v.B, v.H, v.W, C);
    auto dwk = params.lce_dw.weight.data();
    for (std::size_t b = 0; b < v.B; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t h = 0; h < v.H; ++h)
          for (std::size_t w = 0; w < v.W; ++w) {
            double acc = params.lce_dw.bias.data()[c];
            for (std::size_t ky = 0; ky < 5; ++ky)
              for (std::size_t kx = 0; kx < 5; ++kx) {
                const auto iy = static_cast<std::ptrdiff_t>(h + ky) - 2, ix = static_cast<std::ptrdiff_t>(w + kx) - 2;
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(v.H) || ix >= static_cast<std::ptrdiff_t>(v.W))
                  continue;
                acc += dwk[(c * 5 + ky) * 5 + kx] * v.at(b, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), c);
              }
            dw.at(b, h, w, c) = acc;
          }
    auto pwk = params.lce_pw.weight.data();
    for (std::size_t b = 0; b < v.B; ++b)
      for (std::size_t h = 0; h < v.H; ++h)
        for (std::size_t w = 0; w < v.W; ++w)
          for (std::size_t co = 0; co < C; ++co) {
            double acc = params.lce_pw.bias.data()[co];
            for (std::size_t ci = 0; ci < C; ++ci) acc += pwk[co * C + ci] * dw.at(b, h, w, ci);
            o.at(b, h, w, co) += acc;
          }
  }
  if (cfg.use_g1) {
    const Map g = detail::linear_loop(detail::from_tensor(x_t), params.gate);
    for (std::size_t i = 0; i < o.v.size(); ++i) o.v[i] *= detail::sig(g.v[i]);
  }
  return detail::to_tensor(detail::linear_loop(o, params.o));
}

}  // namespace swinrmt::verify
