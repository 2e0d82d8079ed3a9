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

// Plain-loop kernels over raw vectors, for checking the tensor ops.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <cstddef>
#include <vector>

#include "swinrmt/ops.hpp"

namespace swinrmt::verify {

/// [m, k] x [k, n], row-major.
inline std::vector<double> matmul_loop(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                       std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  return c;
}

/// Softmax of one row in long double without max subtraction.
inline std::vector<double> softmax_loop(const std::vector<double>& x) {
  long double z = 0.0L;
  for (double v : x) z += std::exp(static_cast<long double>(v));
  std::vector<double> out;
  for (double v : x) out.push_back(static_cast<double>(std::exp(static_cast<long double>(v)) / z));
  return out;
}

/// Cross-correlation, NCHW input, [Cout, Cin/groups, K, K] weight.
inline std::vector<double> conv2d_loop(const std::vector<double>& x, const std::vector<double>& w,
                                       const std::vector<double>& bias, std::size_t B, std::size_t Cin,
                                       std::size_t H, std::size_t W, std::size_t Cout, std::size_t K,
                                       Conv2dOptions opt) {
  const std::size_t Ho = (H + 2 * opt.padding - K) / opt.stride + 1;
  const std::size_t Wo = (W + 2 * opt.padding - K) / opt.stride + 1;
  const std::size_t cin_g = Cin / opt.groups, cout_g = Cout / opt.groups;
  std::vector<double> y(B * Cout * Ho * Wo, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t co = 0; co < Cout; ++co)
      for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[co];
          const std::size_t g = co / cout_g;
          for (std::size_t ci = 0; ci < cin_g; ++ci)
            for (std::size_t ky = 0; ky < K; ++ky)
              for (std::size_t kx = 0; kx < K; ++kx) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * opt.stride + ky) - static_cast<std::ptrdiff_t>(opt.padding);
                const auto ix = static_cast<std::ptrdiff_t>(ox * opt.stride + kx) - static_cast<std::ptrdiff_t>(opt.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(H) || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                const std::size_t c_in = g * cin_g + ci;
                acc += w[((co * cin_g + ci) * K + ky) * K + kx] *
                       x[((b * Cin + c_in) * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)];
              }
          y[((b * Cout + co) * Ho + oy) * Wo + ox] = acc;
        }
  return y;
}

/// Layer norm over rows of length n (biased variance).
inline std::vector<double> layer_norm_loop(const std::vector<double>& x, std::size_t n, const std::vector<double>& w,
                                           const std::vector<double>& b, double eps = 1e-5) {
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < x.size() / n; ++r) {
    double mu = 0.0, var = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += x[r * n + i];
    mu /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) var += (x[r * n + i] - mu) * (x[r * n + i] - mu);
    var /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) y[r * n + i] = (x[r * n + i] - mu) / std::sqrt(var + eps) * w[i] + b[i];
  }
  return y;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  return max_abs_diff(a.data(), b.data());
}

inline bool bit_identical(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) return false;
  }
  return true;
}

}  // namespace swinrmt::verify
