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

// Decomposed windowed attention: a width-wise 1-D pass whose output is the
// value input of a height-wise 1-D pass. Three kernels share the layout:
//
//   Baseline   softmax(q k^T / sqrt(d) + |i-j| ln gamma) v, theta-shift RoPE, LCE
//   Retention  Baseline + G1 output gate sigma(x W_G)
//   SWAT       (sigma(q k^T + alibi) / w_s) * gamma^|i-j| v, per-axis RoPE,
//              SwiGLU values, LCE, no output gate

#include <cmath>
#include <string>
#include <utility>

#include "swinrmt/layers.hpp"
#include "swinrmt/positional.hpp"
#include "swinrmt/windowing.hpp"

namespace swinrmt {

enum class Variant { Baseline, Retention, Swat };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::Retention: return "retention";
    case Variant::Swat: return "swat";
  }
  return "unknown";
}

inline Variant parse_variant(const std::string& name) {
  if (name == "baseline") return Variant::Baseline;
  if (name == "retention") return Variant::Retention;
  if (name == "swat") return Variant::Swat;
  throw ConfigError("unknown variant '" + name + "' (expected baseline|retention|swat)");
}

struct AttentionConfig {
  Variant variant = Variant::Retention;
  std::size_t dim = 0;          // C
  std::size_t num_heads = 1;    // N_h
  std::size_t window_size = 7;  // nominal M; SWAT temperature divisor w_s
  bool use_g1 = true;
  bool use_lce = true;

  static AttentionConfig for_variant(Variant variant, std::size_t dim, std::size_t heads, std::size_t window,
                                     bool baseline_lce = true) {
    AttentionConfig cfg;
    cfg.variant = variant;
    cfg.dim = dim;
    cfg.num_heads = heads;
    cfg.window_size = window;
    cfg.use_g1 = variant == Variant::Retention;
    cfg.use_lce = variant == Variant::Baseline ? baseline_lce : true;
    return cfg;
  }

  std::size_t head_dim() const { return num_heads == 0 ? 0 : dim / num_heads; }
  std::size_t value_dim() const { return variant == Variant::Swat ? 2 * dim : dim; }

  void validate() const {
    if (num_heads == 0 || dim == 0 || dim % num_heads != 0) {
      throw ConfigError("attention: head count " + std::to_string(num_heads) + " must divide channels " +
                        std::to_string(dim));
    }
    if (head_dim() % 2 != 0) throw ConfigError("attention: head dimension must be even for rotary embeddings");
    if (window_size == 0) throw ConfigError("attention: window size must be positive");
    if (use_g1 && variant != Variant::Retention) {
      throw ConfigError("attention: the G1 gate is only defined for the retention variant");
    }
  }
};

struct AttentionParams {
  Linear q, k, v, o;
  Linear gate;  // W_G, present iff use_g1
  Conv2d lce_dw;  // depthwise 5x5, present iff use_lce
  Conv2d lce_pw;  // pointwise 1x1
  DecaySpec decay_w;
  DecaySpec decay_h;
  Tensor alibi_slopes;  // [N_h], SWAT only

  static AttentionParams init(const AttentionConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t C = cfg.dim;
    AttentionParams p;
    p.q = Linear::init(C, C, rng);
    p.k = Linear::init(C, C, rng);
    p.v = Linear::init(C, cfg.value_dim(), rng);
    p.o = Linear::init(C, C, rng);
    if (cfg.use_g1) p.gate = Linear::init(C, C, rng);
    if (cfg.use_lce) {
      p.lce_dw = Conv2d::init(C, C, 5, {.stride = 1, .padding = 2, .groups = C}, rng);
      p.lce_pw = Conv2d::init(C, C, 1, {}, rng);
    }
    p.decay_w = DecaySpec::learnable(cfg.num_heads);
    p.decay_h = DecaySpec::learnable(cfg.num_heads);
    if (cfg.variant == Variant::Swat) {
      const auto slopes = balanced_alibi_slopes(cfg.num_heads);
      p.alibi_slopes = make_param(Tensor(Shape{cfg.num_heads}, slopes));
    }
    return p;
  }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    q.visit(prefix + ".q", f);
    k.visit(prefix + ".k", f);
    v.visit(prefix + ".v", f);
    o.visit(prefix + ".o", f);
    if (gate.weight.defined()) gate.visit(prefix + ".gate", f);
    if (lce_dw.weight.defined()) {
      lce_dw.visit(prefix + ".lce_dw", f);
      lce_pw.visit(prefix + ".lce_pw", f);
    }
    f(prefix + ".decay_w", decay_w.param(), false);
    f(prefix + ".decay_h", decay_h.param(), false);
    if (alibi_slopes.defined()) f(prefix + ".alibi_slopes", alibi_slopes, false);
  }
};

// ---------------------------------------------------------------------------
// 1-D kernels. q, k, v: [..., heads, L, d]; biases/decays: [heads, L, L];
// optional masks have the full logits shape.
// ---------------------------------------------------------------------------

/// softmax(q k^T / sqrt(d) + decay_bias [+ mask]); rows sum to one.
inline Tensor retention_weights(const Tensor& q, const Tensor& k, const Tensor& decay_bias, const Tensor& mask = {}) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.shape().back()));
  Tensor logits = add(scale(matmul(q, transpose_last2(k)), inv_sqrt_d), decay_bias);
  if (mask.defined()) logits = add(logits, mask);
  return softmax_lastdim(logits);
}

inline Tensor retention_pass_1d(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& decay_bias,
                                const Tensor& mask = {}) {
  return matmul(retention_weights(q, k, decay_bias, mask), v);
}

/// (sigma(q k^T + alibi) / w_s) * decay_mult [* mask01]; unnormalized.
inline Tensor swat_weights(const Tensor& q, const Tensor& k, const Tensor& alibi, const Tensor& decay_mult,
                           std::size_t w_s, const Tensor& mask01 = {}) {
  if (w_s == 0) throw ConfigError("swat: window temperature must be >= 1");
  Tensor scores = sigmoid(add(matmul(q, transpose_last2(k)), alibi));
  scores = mul(scale(scores, 1.0 / static_cast<double>(w_s)), decay_mult);
  if (mask01.defined()) scores = mul(scores, mask01);
  return scores;
}

inline Tensor swat_pass_1d(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& alibi,
                           const Tensor& decay_mult, std::size_t w_s, const Tensor& mask01 = {}) {
  return matmul(swat_weights(q, k, alibi, decay_mult, w_s, mask01), v);
}

/// V = V1 * SiLU(V2) with [V1 | V2] the two halves of the last axis.
inline Tensor swiglu_value(const Tensor& v2c) {
  if (v2c.dim() == 0 || v2c.shape().back() % 2 != 0) {
    throw ShapeError("swiglu_value: last extent must be even, got " + shape_str(v2c.shape()));
  }
  const std::size_t C = v2c.shape().back() / 2;
  return mul(slice_lastdim(v2c, 0, C), silu(slice_lastdim(v2c, C, 2 * C)));
}

/// PWConv(DWConv5x5(v)) on a channels-last map; the caller adds it to O.
inline Tensor lce(const Tensor& v, const Conv2d& depthwise, const Conv2d& pointwise) {
  return to_nhwc(pointwise(depthwise(to_nchw(v))));
}

/// o * sigma(x_in W_G + b_G); the gate is projected from the block input.
inline Tensor g1_gate(const Tensor& o, const Tensor& x_in, const Linear& gate) {
  return mul(o, sigmoid(gate(x_in)));
}

// ---------------------------------------------------------------------------
// Decomposed 2-D attention
// ---------------------------------------------------------------------------

/// q, k, v: [B, heads, H, W, d] (pre-RoPE). Returns [B, H, W, heads * d].
inline Tensor dmsa_heads(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionConfig& cfg,
                         const AttentionParams& params, const DecomposedMask& masks = {}) {
  if (q.dim() != 5) throw ShapeError("dmsa_heads: expects [B, heads, H, W, d]");
  const std::size_t B = q.size(0), nh = q.size(1), H = q.size(2), W = q.size(3), d = q.size(4);
  if (nh != cfg.num_heads) throw ShapeError("dmsa_heads: head count does not match config");
  const auto theta = rope_frequencies(d);
  const bool swat = cfg.variant == Variant::Swat;

  Tensor qr = q, kr = k;
  if (!swat) {
    // One flattened row-major index shared by both passes.
    const auto pos = flatten_positions(H, W);
    qr = reshape(rope_apply(reshape(q, Shape{B, nh, H * W, d}), theta, pos), Shape{B, nh, H, W, d});
    kr = reshape(rope_apply(reshape(k, Shape{B, nh, H * W, d}), theta, pos), Shape{B, nh, H, W, d});
  }

  // Width pass over [B, H, heads, W, d].
  Tensor qw = permute(qr, {0, 2, 1, 3, 4});
  Tensor kw = permute(kr, {0, 2, 1, 3, 4});
  Tensor vw = permute(v, {0, 2, 1, 3, 4});
  Tensor ow;
  if (swat) {
    const auto pos = flatten_positions(1, W);
    qw = rope_apply(qw, theta, pos);
    kw = rope_apply(kw, theta, pos);
    const Tensor mask = masks.empty() ? Tensor{} : expand_window_mask(masks.width, B, nh, true);
    ow = swat_pass_1d(qw, kw, vw, alibi_bias(params.alibi_slopes, W), decay_mask_multiplicative(params.decay_w, W),
                      cfg.window_size, mask);
  } else {
    const Tensor mask = masks.empty() ? Tensor{} : expand_window_mask(masks.width, B, nh, false);
    ow = retention_pass_1d(qw, kw, vw, decay_mask_additive(params.decay_w, W), mask);
  }

  // Height pass over [B, W, heads, H, d]; values are the width-pass output.
  Tensor qh = permute(qr, {0, 3, 1, 2, 4});
  Tensor kh = permute(kr, {0, 3, 1, 2, 4});
  Tensor vh = permute(ow, {0, 3, 2, 1, 4});
  Tensor oh;
  if (swat) {
    const auto pos = flatten_positions(1, H);
    qh = rope_apply(qh, theta, pos);
    kh = rope_apply(kh, theta, pos);
    const Tensor mask = masks.empty() ? Tensor{} : expand_window_mask(masks.height, B, nh, true);
    oh = swat_pass_1d(qh, kh, vh, alibi_bias(params.alibi_slopes, H), decay_mask_multiplicative(params.decay_h, H),
                      cfg.window_size, mask);
  } else {
    const Tensor mask = masks.empty() ? Tensor{} : expand_window_mask(masks.height, B, nh, false);
    oh = retention_pass_1d(qh, kh, vh, decay_mask_additive(params.decay_h, H), mask);
  }
  return reshape(permute(oh, {0, 3, 1, 2, 4}), Shape{B, H, W, nh * d});
}

namespace detail {

// [B, H, W, C] -> [B, heads, H, W, d]
inline Tensor split_heads(const Tensor& x, std::size_t heads) {
  const std::size_t B = x.size(0), H = x.size(1), W = x.size(2), C = x.size(3);
  Tensor t = reshape(x, Shape{B, H * W, heads, C / heads});
  t = permute(t, {0, 2, 1, 3});
  return reshape(t, Shape{B, heads, H, W, C / heads});
}

}  // namespace detail

struct DmsaOutput {
  Tensor out;    // [B, H, W, C], before LCE
  Tensor value;  // V fed to attention (post-SwiGLU for SWAT)
};

inline DmsaOutput dmsa_forward(const Tensor& x, const AttentionConfig& cfg, const AttentionParams& params,
                               const DecomposedMask& masks = {}) {
  if (x.dim() != 4 || x.size(3) != cfg.dim) {
    throw ShapeError("dmsa: expects [B, H, W, " + std::to_string(cfg.dim) + "], got " + shape_str(x.shape()));
  }
  cfg.validate();
  Tensor value = params.v(x);
  if (cfg.variant == Variant::Swat) value = swiglu_value(value);
  const Tensor out = dmsa_heads(detail::split_heads(params.q(x), cfg.num_heads),
                                detail::split_heads(params.k(x), cfg.num_heads),
                                detail::split_heads(value, cfg.num_heads), cfg, params, masks);
  return {out, value};
}

/// Pre-LCE attention output O for one window batch [B, H', W', C].
inline Tensor dmsa_decomposed(const Tensor& x, const AttentionConfig& cfg, const AttentionParams& params,
                              const DecomposedMask& masks = {}) {
  return dmsa_forward(x, cfg, params, masks).out;
}

/// O = dmsa(x); O += LCE(V); O = O * sigma(G) for gated retention; return O W_O.
inline Tensor attention_block_output(const Tensor& x, const AttentionConfig& cfg, const AttentionParams& params,
                                     const DecomposedMask& masks = {}) {
  cfg.validate();
  if (cfg.use_g1 && !params.gate.weight.defined()) throw ConfigError("attention: G1 gate enabled without W_G");
  if (cfg.use_lce && !params.lce_dw.weight.defined()) throw ConfigError("attention: LCE enabled without weights");
  auto [o, value] = dmsa_forward(x, cfg, params, masks);
  if (cfg.use_lce) o = add(o, lce(value, params.lce_dw, params.lce_pw));
  if (cfg.use_g1) o = g1_gate(o, x, params.gate);
  return params.o(o);
}

}  // namespace swinrmt
