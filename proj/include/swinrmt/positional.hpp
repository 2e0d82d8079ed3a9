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

// Positional signal generators: per-head distance decay (additive log-space
// and multiplicative placements), balanced ALiBi slopes, and rotary embeddings.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <vector>

#include "swinrmt/ops.hpp"

namespace swinrmt {

inline constexpr double kGammaMin = 0.5;
inline constexpr double kGammaMax = 0.999;

/// Per-head decay rates. Learnable specs store an unconstrained parameter u
/// with gamma = kGammaMin + (kGammaMax - kGammaMin) * sigmoid(u); fixed specs
/// store log(gamma) directly (used by tests and probes, gamma in (0, 1]).
class DecaySpec {
 public:
  DecaySpec() = default;

  static DecaySpec learnable(std::size_t num_heads) {
    DecaySpec spec;
    spec.bounded_ = true;
    spec.param_ = Tensor(Shape{num_heads});
    auto raw = spec.param_.mutable_data();
    for (std::size_t h = 0; h < num_heads; ++h) {
      const double gamma = initial_gamma(h, num_heads);
      const double frac = (gamma - kGammaMin) / (kGammaMax - kGammaMin);
      raw[h] = std::log(frac / (1.0 - frac));
    }
    spec.param_.set_requires_grad(true);
    return spec;
  }

  static DecaySpec fixed(const std::vector<double>& gammas) {
    DecaySpec spec;
    spec.bounded_ = false;
    std::vector<double> logs(gammas.size());
    for (std::size_t h = 0; h < gammas.size(); ++h) {
      if (!(gammas[h] > 0.0 && gammas[h] <= 1.0)) throw ConfigError("decay rate must lie in (0, 1]");
      logs[h] = std::log(gammas[h]);
    }
    spec.param_ = Tensor(Shape{gammas.size()}, std::move(logs));
    return spec;
  }

  /// Head h of n starts at 1 - 2^-(3 + 4h/n), spreading decay ranges across heads.
  static double initial_gamma(std::size_t h, std::size_t n) {
    return 1.0 - std::pow(2.0, -(3.0 + 4.0 * static_cast<double>(h) / static_cast<double>(n)));
  }

  std::size_t num_heads() const { return param_.numel(); }
  bool learnable_param() const { return bounded_; }

  /// The stored tensor: unconstrained u (learnable) or log(gamma) (fixed).
  Tensor& param() { return param_; }
  const Tensor& param() const { return param_; }

  /// [N_h] log decay rates, on the tape when the spec is learnable.
  Tensor log_gamma() const {
    if (!bounded_) return param_;
    return log(add_scalar(scale(sigmoid(param_), kGammaMax - kGammaMin), kGammaMin));
  }

  std::vector<double> gammas() const {
    NoGradGuard guard;
    Tensor lg = log_gamma();
    std::vector<double> out(lg.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(lg.data()[i]);
    return out;
  }

 private:
  Tensor param_;
  bool bounded_ = false;
};

/// out[h, i, j] = |i - j| * per_head[h]; shape [N_h, L, L].
inline Tensor distance_scaled(const Tensor& per_head, std::size_t length) {
  if (per_head.dim() != 1) throw ShapeError("distance_scaled: expects a [N_h] vector");
  if (length == 0) throw ShapeError("distance_scaled: axis length must be positive");
  const std::size_t H = per_head.numel(), L = length;
  std::vector<double> out(H * L * L);
  auto v = per_head.data();
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < L; ++j) {
        const double dist = static_cast<double>(i > j ? i - j : j - i);
        out[(h * L + i) * L + j] = dist * v[h];
      }
  return make_op(Shape{H, L, L}, std::move(out), "distance_scaled", {per_head}, [H, L](detail::Node& self) {
    auto gv = parent_grad(self, 0);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
          const double dist = static_cast<double>(i > j ? i - j : j - i);
          gv[h] += dist * self.grad[(h * L + i) * L + j];
        }
  });
}

/// M[h,i,j] = |i-j| ln(gamma_h); added to pre-softmax logits.
inline Tensor decay_mask_additive(const DecaySpec& spec, std::size_t length) {
  return distance_scaled(spec.log_gamma(), length);
}

/// D[h,i,j] = gamma_h^|i-j|, built as exp of the additive mask.
inline Tensor decay_mask_multiplicative(const DecaySpec& spec, std::size_t length) {
  return exp(decay_mask_additive(spec, length));
}

/// Half the heads get -2^-k, half +2^-k for k = 1..floor(N_h/2); an odd
/// leftover head gets slope 0.
inline std::vector<double> balanced_alibi_slopes(std::size_t num_heads) {
  const std::size_t half = num_heads / 2;
  std::vector<double> slopes;
  slopes.reserve(num_heads);
  for (std::size_t k = 1; k <= half; ++k) slopes.push_back(-std::ldexp(1.0, -static_cast<int>(k)));
  for (std::size_t k = 1; k <= half; ++k) slopes.push_back(std::ldexp(1.0, -static_cast<int>(k)));
  if (num_heads % 2 == 1) slopes.push_back(0.0);
  return slopes;
}

/// b[h,i,j] = slope_h * |i-j|.
inline Tensor alibi_bias(const Tensor& slopes, std::size_t length) { return distance_scaled(slopes, length); }

/// theta_j = 10000^(-2j/d), j = 0 .. d/2-1.
inline std::vector<double> rope_frequencies(std::size_t head_dim) {
  if (head_dim == 0 || head_dim % 2 != 0) {
    throw ConfigError("rotary embedding needs an even head dimension, got " + std::to_string(head_dim));
  }
  std::vector<double> theta(head_dim / 2);
  for (std::size_t j = 0; j < theta.size(); ++j)
    theta[j] = std::pow(10000.0, -2.0 * static_cast<double>(j) / static_cast<double>(head_dim));
  return theta;
}

/// Row-major flattened index p = i * W + j for an H x W grid.
inline std::vector<std::int64_t> flatten_positions(std::size_t height, std::size_t width) {
  std::vector<std::int64_t> pos(height * width);
  for (std::size_t p = 0; p < pos.size(); ++p) pos[p] = static_cast<std::int64_t>(p);
  return pos;
}

/// Rotates each pair (x_2j, x_2j+1) at position p by angle p * theta_j.
/// x has shape [..., L, d]; positions has L entries.
inline Tensor rope_apply(const Tensor& x, const std::vector<double>& theta, const std::vector<std::int64_t>& positions) {
  if (x.dim() < 2) throw ShapeError("rope_apply: expects [..., L, d]");
  const std::size_t d = x.shape().back(), L = x.shape()[x.dim() - 2];
  if (d % 2 != 0) throw ConfigError("rope_apply: odd head dimension " + std::to_string(d));
  if (theta.size() != d / 2) throw ConfigError("rope_apply: frequency table does not match head dimension");
  if (positions.size() != L) throw ShapeError("rope_apply: need one position per token");
  const std::size_t half = d / 2;
  auto cs = std::make_shared<std::vector<double>>(L * half);
  auto sn = std::make_shared<std::vector<double>>(L * half);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t j = 0; j < half; ++j) {
      const double angle = static_cast<double>(positions[l]) * theta[j];
      (*cs)[l * half + j] = std::cos(angle);
      (*sn)[l * half + j] = std::sin(angle);
    }
  const std::size_t rows = x.numel() / d;
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t l = r % L;
    for (std::size_t j = 0; j < half; ++j) {
      const double c = (*cs)[l * half + j], s = (*sn)[l * half + j];
      const double a = xd[r * d + 2 * j], b = xd[r * d + 2 * j + 1];
      out[r * d + 2 * j] = a * c - b * s;
      out[r * d + 2 * j + 1] = b * c + a * s;
    }
  }
  return make_op(x.shape(), std::move(out), "rope", {x}, [=](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t l = r % L;
      for (std::size_t j = 0; j < half; ++j) {
        const double c = (*cs)[l * half + j], s = (*sn)[l * half + j];
        const double ga = self.grad[r * d + 2 * j], gb = self.grad[r * d + 2 * j + 1];
        gx[r * d + 2 * j] += ga * c + gb * s;
        gx[r * d + 2 * j + 1] += -ga * s + gb * c;
      }
    }
  });
}

}  // namespace swinrmt
