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

// Differentiable operator set. Every op is 64-bit, row-major and records a
// backward rule through make_op(). Binary elementwise ops broadcast only when
// one operand's shape is a trailing suffix of the other's (or a single value).

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "swinrmt/tensor.hpp"

namespace swinrmt {

// ---------------------------------------------------------------------------
// Elementwise binary ops
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// Output shape of a suffix broadcast; throws when neither operand fits.
inline Shape broadcast_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.numel() == 1 || is_suffix(b.shape(), a.shape())) return a.shape();
  if (a.numel() == 1 || is_suffix(a.shape(), b.shape())) return b.shape();
  throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a.shape()) + " with " +
                   shape_str(b.shape()) + " (only trailing-dimension broadcast is supported)");
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  Shape out_shape = detail::broadcast_shape("add", a, b);
  const std::size_t n = numel_of(out_shape);
  const std::size_t na = a.numel(), nb = b.numel();
  std::vector<double> out(n);
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = ad[i % na] + bd[i % nb];
  return make_op(std::move(out_shape), std::move(out), "add", {a, b}, [na, nb](detail::Node& self) {
    auto ga = parent_grad(self, 0), gb = parent_grad(self, 1);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (!ga.empty()) ga[i % na] += self.grad[i];
      if (!gb.empty()) gb[i % nb] += self.grad[i];
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  Shape out_shape = detail::broadcast_shape("sub", a, b);
  const std::size_t n = numel_of(out_shape);
  const std::size_t na = a.numel(), nb = b.numel();
  std::vector<double> out(n);
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = ad[i % na] - bd[i % nb];
  return make_op(std::move(out_shape), std::move(out), "sub", {a, b}, [na, nb](detail::Node& self) {
    auto ga = parent_grad(self, 0), gb = parent_grad(self, 1);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (!ga.empty()) ga[i % na] += self.grad[i];
      if (!gb.empty()) gb[i % nb] -= self.grad[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  Shape out_shape = detail::broadcast_shape("mul", a, b);
  const std::size_t n = numel_of(out_shape);
  const std::size_t na = a.numel(), nb = b.numel();
  std::vector<double> out(n);
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = ad[i % na] * bd[i % nb];
  return make_op(std::move(out_shape), std::move(out), "mul", {a, b}, [na, nb](detail::Node& self) {
    auto ga = parent_grad(self, 0), gb = parent_grad(self, 1);
    const auto& ad = self.parents[0]->data;
    const auto& bd = self.parents[1]->data;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (!ga.empty()) ga[i % na] += self.grad[i] * bd[i % nb];
      if (!gb.empty()) gb[i % nb] += self.grad[i] * ad[i % na];
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise unary ops
// ---------------------------------------------------------------------------

inline Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= factor;
  return make_op(x.shape(), std::move(out), "scale", {x}, [factor](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * self.grad[i];
  });
}

inline Tensor add_scalar(const Tensor& x, double value) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v += value;
  return make_op(x.shape(), std::move(out), "add_scalar", {x}, [](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

inline Tensor neg(const Tensor& x) { return scale(x, -1.0); }

inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(xd[i]);
  return make_op(x.shape(), std::move(out), "sigmoid", {x}, [](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double y = self.data[i];
      gx[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

inline Tensor silu(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * sigmoid_scalar(xd[i]);
  return make_op(x.shape(), std::move(out), "silu", {x}, [](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    const auto& xd = self.parents[0]->data;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double s = sigmoid_scalar(xd[i]);
      gx[i] += self.grad[i] * (s + xd[i] * s * (1.0 - s));
    }
  });
}

namespace detail {
inline constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluC = 0.044715;
}  // namespace detail

/// GELU, tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
inline double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::tanh(detail::kGeluK * (x + detail::kGeluC * x * x * x)));
}

inline Tensor gelu(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gelu_scalar(xd[i]);
  return make_op(x.shape(), std::move(out), "gelu", {x}, [](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    const auto& xd = self.parents[0]->data;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = xd[i];
      const double t = std::tanh(detail::kGeluK * (v + detail::kGeluC * v * v * v));
      const double du = detail::kGeluK * (1.0 + 3.0 * detail::kGeluC * v * v);
      gx[i] += self.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
    }
  });
}

inline Tensor exp(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(xd[i]);
  return make_op(x.shape(), std::move(out), "exp", {x}, [](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * self.data[i];
  });
}

inline Tensor log(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(xd[i]);
  return make_op(x.shape(), std::move(out), "log", {x}, [](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    const auto& xd = self.parents[0]->data;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] / xd[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_op(Shape{}, {total}, "sum", {x}, [](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (double& g : gx) g += self.grad[0];
  });
}

inline Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

/// Sum over one axis; the axis is removed from the result.
inline Tensor sum_dim(const Tensor& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) throw ShapeError("sum_dim: axis out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  std::vector<double> out(outer * inner, 0.0);
  auto xd = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xd[(o * len + l) * inner + i];
  return make_op(std::move(out_shape), std::move(out), "sum_dim", {x}, [outer, inner, len](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t l = 0; l < len; ++l)
        for (std::size_t i = 0; i < inner; ++i) gx[(o * len + l) * inner + i] += self.grad[o * inner + i];
  });
}

inline Tensor mean_dim(const Tensor& x, std::size_t axis) {
  const double len = static_cast<double>(x.size(axis));
  return scale(sum_dim(x, axis), 1.0 / len);
}

// ---------------------------------------------------------------------------
// Shape manipulation: everything routes through one gather primitive
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_op(std::move(shape), std::move(out), "reshape", {x}, [](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

/// out[i] = x[index[i]], or 0 where index[i] < 0. Backward scatter-adds.
inline Tensor gather(const Tensor& x, Shape shape, std::shared_ptr<const std::vector<std::int64_t>> index,
                     std::string_view op = "gather") {
  if (numel_of(shape) != index->size()) throw ShapeError("gather: index size does not match result shape");
  std::vector<double> out(index->size());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::int64_t src = (*index)[i];
    out[i] = src < 0 ? 0.0 : xd[static_cast<std::size_t>(src)];
  }
  return make_op(std::move(shape), std::move(out), op, {x}, [index](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const std::int64_t src = (*index)[i];
      if (src >= 0) gx[static_cast<std::size_t>(src)] += self.grad[i];
    }
  });
}

namespace detail {

inline std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

// Calls fn(flat_out, multi_index) over a row-major traversal of `shape`.
template <typename Fn>
void for_each_index(const Shape& shape, Fn&& fn) {
  const std::size_t n = numel_of(shape);
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    fn(flat, idx);
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
}

}  // namespace detail

inline Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& s = x.shape();
  if (axes.size() != s.size()) throw ShapeError("permute: axes rank mismatch for " + shape_str(s));
  std::vector<bool> used(s.size(), false);
  Shape out_shape(s.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] >= s.size() || used[axes[i]]) throw ShapeError("permute: invalid axis list");
    used[axes[i]] = true;
    out_shape[i] = s[axes[i]];
  }
  const auto in_strides = detail::strides_of(s);
  auto index = std::make_shared<std::vector<std::int64_t>>(x.numel());
  detail::for_each_index(out_shape, [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < idx.size(); ++d) src += idx[d] * in_strides[axes[d]];
    (*index)[flat] = static_cast<std::int64_t>(src);
  });
  return gather(x, std::move(out_shape), std::move(index), "permute");
}

inline Tensor transpose_last2(const Tensor& x) {
  if (x.dim() < 2) throw ShapeError("transpose_last2 needs rank >= 2");
  std::vector<std::size_t> axes(x.dim());
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  std::swap(axes[axes.size() - 1], axes[axes.size() - 2]);
  return permute(x, axes);
}

/// Contiguous slice [begin, end) of the last axis.
inline Tensor slice_lastdim(const Tensor& x, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (s.empty() || begin >= end || end > s.back()) throw ShapeError("slice_lastdim: bad range for " + shape_str(s));
  const std::size_t last = s.back(), width = end - begin, rows = x.numel() / last;
  Shape out_shape = s;
  out_shape.back() = width;
  auto index = std::make_shared<std::vector<std::int64_t>>(rows * width);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) (*index)[r * width + c] = static_cast<std::int64_t>(r * last + begin + c);
  return gather(x, std::move(out_shape), std::move(index), "slice");
}

// ---------------------------------------------------------------------------
// Matrix product with broadcast over leading batch extents
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() < 2 || bs.size() < 2) {
    throw ShapeError("matmul: operands need rank >= 2, got " + shape_str(as) + " and " + shape_str(bs));
  }
  const std::size_t m = as[as.size() - 2], k = as.back(), k2 = bs[bs.size() - 2], n = bs.back();
  if (k != k2) {
    throw ShapeError("matmul: inner extents differ (" + std::to_string(k) + " vs " + std::to_string(k2) + ") for " +
                     shape_str(as) + " x " + shape_str(bs));
  }
  const Shape a_batch(as.begin(), as.end() - 2), b_batch(bs.begin(), bs.end() - 2);
  const std::size_t rank = std::max(a_batch.size(), b_batch.size());
  Shape out_batch(rank);
  std::vector<std::size_t> a_stride(rank, 0), b_stride(rank, 0);
  {
    const auto ast = detail::strides_of(a_batch), bst = detail::strides_of(b_batch);
    for (std::size_t i = 0; i < rank; ++i) {
      const std::size_t ai = i + a_batch.size() >= rank ? a_batch[i + a_batch.size() - rank] : 1;
      const std::size_t bi = i + b_batch.size() >= rank ? b_batch[i + b_batch.size() - rank] : 1;
      if (ai != bi && ai != 1 && bi != 1) {
        throw ShapeError("matmul: batch extents not broadcast-compatible: " + shape_str(as) + " x " + shape_str(bs));
      }
      out_batch[i] = std::max(ai, bi);
      if (ai != 1) a_stride[i] = ast[i + a_batch.size() - rank];
      if (bi != 1) b_stride[i] = bst[i + b_batch.size() - rank];
    }
  }
  // Offsets (in matrices) of each operand for every output batch entry.
  const std::size_t batches = numel_of(out_batch);
  auto a_off = std::make_shared<std::vector<std::size_t>>(batches);
  auto b_off = std::make_shared<std::vector<std::size_t>>(batches);
  detail::for_each_index(out_batch, [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    std::size_t ao = 0, bo = 0;
    for (std::size_t d = 0; d < idx.size(); ++d) {
      ao += idx[d] * a_stride[d];
      bo += idx[d] * b_stride[d];
    }
    (*a_off)[flat] = ao;
    (*b_off)[flat] = bo;
  });

  std::vector<double> out(batches * m * n, 0.0);
  auto ad = a.data(), bd = b.data();
  for (std::size_t t = 0; t < batches; ++t) {
    const double* A = ad.data() + (*a_off)[t] * m * k;
    const double* B = bd.data() + (*b_off)[t] * k * n;
    double* C = out.data() + t * m * n;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        for (std::size_t j = 0; j < n; ++j) C[i * n + j] += av * B[p * n + j];
      }
  }
  Shape out_shape = out_batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  return make_op(std::move(out_shape), std::move(out), "matmul", {a, b}, [=](detail::Node& self) {
    auto ga = parent_grad(self, 0), gb = parent_grad(self, 1);
    const auto& ad = self.parents[0]->data;
    const auto& bd = self.parents[1]->data;
    for (std::size_t t = 0; t < batches; ++t) {
      const double* G = self.grad.data() + t * m * n;
      if (!ga.empty()) {
        // dA = dC * B^T
        const double* B = bd.data() + (*b_off)[t] * k * n;
        double* GA = ga.data() + (*a_off)[t] * m * k;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
            GA[i * k + p] += acc;
          }
      }
      if (!gb.empty()) {
        // dB = A^T * dC
        const double* A = ad.data() + (*a_off)[t] * m * k;
        double* GB = gb.data() + (*b_off)[t] * k * n;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) GB[p * n + j] += av * G[i * n + j];
          }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Normalizations
// ---------------------------------------------------------------------------

inline Tensor softmax_lastdim(const Tensor& x) {
  const Shape& s = x.shape();
  if (s.empty() || s.back() == 0) throw ShapeError("softmax_lastdim: empty last dimension");
  const std::size_t len = s.back(), rows = x.numel() / len;
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * len;
    double* o = out.data() + r * len;
    const double mx = *std::max_element(in, in + len);
    double total = 0.0;
    for (std::size_t j = 0; j < len; ++j) total += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < len; ++j) o[j] /= total;
  }
  return make_op(s, std::move(out), "softmax", {x}, [len, rows](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * len;
      const double* g = self.grad.data() + r * len;
      double dot = 0.0;
      for (std::size_t j = 0; j < len; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < len; ++j) gx[r * len + j] += y[j] * (g[j] - dot);
    }
  });
}

inline Tensor log_softmax_lastdim(const Tensor& x) {
  const Shape& s = x.shape();
  if (s.empty() || s.back() == 0) throw ShapeError("log_softmax_lastdim: empty last dimension");
  const std::size_t len = s.back(), rows = x.numel() / len;
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * len;
    const double mx = *std::max_element(in, in + len);
    double total = 0.0;
    for (std::size_t j = 0; j < len; ++j) total += std::exp(in[j] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < len; ++j) out[r * len + j] = in[j] - lse;
  }
  return make_op(s, std::move(out), "log_softmax", {x}, [len, rows](detail::Node& self) {
    auto gx = parent_grad(self, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * len;
      const double* g = self.grad.data() + r * len;
      double gsum = 0.0;
      for (std::size_t j = 0; j < len; ++j) gsum += g[j];
      for (std::size_t j = 0; j < len; ++j) gx[r * len + j] += g[j] - std::exp(y[j]) * gsum;
    }
  });
}

/// Normalizes over the last axis; weight/bias may be undefined for no affine.
inline Tensor layer_norm(const Tensor& x, const Tensor& weight, const Tensor& bias, double eps = 1e-5) {
  const Shape& s = x.shape();
  if (s.empty()) throw ShapeError("layer_norm: scalar input");
  const std::size_t len = s.back(), rows = x.numel() / len;
  if ((weight.defined() && weight.numel() != len) || (bias.defined() && bias.numel() != len)) {
    throw ShapeError("layer_norm: affine parameters must have " + std::to_string(len) + " entries");
  }
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * len;
    double mu = 0.0;
    for (std::size_t j = 0; j < len; ++j) mu += in[j];
    mu /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t j = 0; j < len; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(len);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < len; ++j) {
      const double h = (in[j] - mu) * is;
      (*xhat)[r * len + j] = h;
      const double w = weight.defined() ? weight.data()[j] : 1.0;
      const double b = bias.defined() ? bias.data()[j] : 0.0;
      out[r * len + j] = h * w + b;
    }
  }
  const bool has_w = weight.defined(), has_b = bias.defined();
  return make_op(s, std::move(out), "layer_norm", {x, weight, bias},
                 [=](detail::Node& self) {
                   auto gx = parent_grad(self, 0), gw = parent_grad(self, 1), gb = parent_grad(self, 2);
                   const double* w = has_w ? self.parents[1]->data.data() : nullptr;
                   std::vector<double> dh(len);
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* g = self.grad.data() + r * len;
                     const double* h = xhat->data() + r * len;
                     double mean_dh = 0.0, mean_dh_h = 0.0;
                     for (std::size_t j = 0; j < len; ++j) {
                       dh[j] = g[j] * (w ? w[j] : 1.0);
                       mean_dh += dh[j];
                       mean_dh_h += dh[j] * h[j];
                       if (!gw.empty()) gw[j] += g[j] * h[j];
                       if (!gb.empty()) gb[j] += g[j];
                     }
                     mean_dh /= static_cast<double>(len);
                     mean_dh_h /= static_cast<double>(len);
                     if (!gx.empty()) {
                       for (std::size_t j = 0; j < len; ++j)
                         gx[r * len + j] += (*inv_std)[r] * (dh[j] - mean_dh - h[j] * mean_dh_h);
                     }
                   }
                   (void)has_b;
                 });
}

// ---------------------------------------------------------------------------
// Convolution (NCHW, cross-correlation)
// ---------------------------------------------------------------------------

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
};

namespace detail {

/// Output indices [lo, hi) whose tap at kernel offset k lands inside [0, in).
inline std::pair<std::size_t, std::size_t> conv_range(std::size_t k, std::size_t pad, std::size_t stride,
                                                      std::size_t in, std::size_t out) {
  const std::size_t lo = k >= pad ? 0 : (pad - k + stride - 1) / stride;
  const std::size_t limit = in + pad;  // need o * stride + k < in + pad
  const std::size_t hi = k >= limit ? 0 : std::min(out, (limit - k + stride - 1) / stride);
  return {std::min(lo, hi), hi};
}

}  // namespace detail

/// x [B, Cin, H, W], weight [Cout, Cin/groups, kh, kw], bias [Cout] or undefined.
inline Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions opt = {}) {
  if (x.dim() != 4 || weight.dim() != 4) {
    throw ShapeError("conv2d: expects x [B,C,H,W] and weight [O,C/g,kh,kw], got " + shape_str(x.shape()) + " and " +
                     shape_str(weight.shape()));
  }
  const std::size_t B = x.size(0), Cin = x.size(1), H = x.size(2), W = x.size(3);
  const std::size_t Cout = weight.size(0), Cg = weight.size(1), KH = weight.size(2), KW = weight.size(3);
  const std::size_t G = opt.groups, S = opt.stride, P = opt.padding;
  if (G == 0 || S == 0) throw ConfigError("conv2d: groups and stride must be positive");
  if (Cin % G != 0 || Cout % G != 0) {
    throw ConfigError("conv2d: groups=" + std::to_string(G) + " must divide in_channels=" + std::to_string(Cin) +
                      " and out_channels=" + std::to_string(Cout));
  }
  if (Cg != Cin / G) {
    throw ConfigError("conv2d: weight expects " + std::to_string(Cg) + " channels per group, input provides " +
                      std::to_string(Cin / G));
  }
  if (H + 2 * P < KH || W + 2 * P < KW) throw ShapeError("conv2d: kernel larger than padded input");
  if (bias.defined() && bias.numel() != Cout) throw ShapeError("conv2d: bias must have out_channels entries");
  const std::size_t OH = (H + 2 * P - KH) / S + 1, OW = (W + 2 * P - KW) / S + 1;
  const std::size_t Og = Cout / G;

  std::vector<double> out(B * Cout * OH * OW, 0.0);
  auto xd = x.data(), wd = weight.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < Cout; ++o) {
      const std::size_t g = o / Og;
      const double bv = bias.defined() ? bias.data()[o] : 0.0;
      double* op = out.data() + ((b * Cout + o) * OH) * OW;
      for (std::size_t i = 0; i < OH * OW; ++i) op[i] = bv;
      for (std::size_t c = 0; c < Cg; ++c) {
        const double* ip = xd.data() + ((b * Cin + g * Cg + c) * H) * W;
        const double* kp = wd.data() + ((o * Cg + c) * KH) * KW;
        for (std::size_t ky = 0; ky < KH; ++ky)
          for (std::size_t kx = 0; kx < KW; ++kx) {
            const double kv = kp[ky * KW + kx];
            const auto [y0, y1] = detail::conv_range(ky, P, S, H, OH);
            const auto [x0, x1] = detail::conv_range(kx, P, S, W, OW);
            for (std::size_t oy = y0; oy < y1; ++oy) {
              // unsigned wrap-around in `base` cancels once ox * S is added
              const std::size_t base = (oy * S + ky - P) * W + kx - P;
              double* orow = op + oy * OW;
              for (std::size_t ox = x0; ox < x1; ++ox) orow[ox] += kv * ip[base + ox * S];
            }
          }
      }
    }
  return make_op(Shape{B, Cout, OH, OW}, std::move(out), "conv2d", {x, weight, bias}, [=](detail::Node& self) {
    auto gx = parent_grad(self, 0), gw = parent_grad(self, 1), gb = parent_grad(self, 2);
    const auto& xd = self.parents[0]->data;
    const auto& wd = self.parents[1]->data;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < Cout; ++o) {
        const std::size_t g = o / Og;
        const double* gp = self.grad.data() + ((b * Cout + o) * OH) * OW;
        if (!gb.empty())
          for (std::size_t i = 0; i < OH * OW; ++i) gb[o] += gp[i];
        for (std::size_t c = 0; c < Cg; ++c) {
          const std::size_t xoff = ((b * Cin + g * Cg + c) * H) * W;
          const std::size_t woff = ((o * Cg + c) * KH) * KW;
          for (std::size_t ky = 0; ky < KH; ++ky)
            for (std::size_t kx = 0; kx < KW; ++kx) {
              double wacc = 0.0;
              const double kv = wd[woff + ky * KW + kx];
              const auto [y0, y1] = detail::conv_range(ky, P, S, H, OH);
              const auto [x0, x1] = detail::conv_range(kx, P, S, W, OW);
              for (std::size_t oy = y0; oy < y1; ++oy) {
                const std::size_t base = xoff + (oy * S + ky - P) * W + kx - P;
                const double* grow = gp + oy * OW;
                for (std::size_t ox = x0; ox < x1; ++ox) wacc += grow[ox] * xd[base + ox * S];
                if (!gx.empty())
                  for (std::size_t ox = x0; ox < x1; ++ox) gx[base + ox * S] += grow[ox] * kv;
              }
              if (!gw.empty()) gw[woff + ky * KW + kx] += wacc;
            }
        }
      }
  });
}

// ---------------------------------------------------------------------------
// Batch normalization over NCHW channels, normalized with running statistics.
// In training mode the running statistics are first moved toward the batch
// statistics by an exponential moving average; they are constants to autodiff.
// ---------------------------------------------------------------------------

inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kBatchNormEps = 1e-5;

/// running_mean / running_var are [C] buffers (leaves without grad) updated in place when training.
inline Tensor batch_norm2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Tensor& running_mean,
                           Tensor& running_var, bool training) {
  if (x.dim() != 4) throw ShapeError("batch_norm2d: expects [B,C,H,W], got " + shape_str(x.shape()));
  const std::size_t B = x.size(0), C = x.size(1), HW = x.size(2) * x.size(3);
  if (running_mean.numel() != C || running_var.numel() != C || weight.numel() != C || bias.numel() != C) {
    throw ShapeError("batch_norm2d: channel count mismatch");
  }
  auto rmean = running_mean.mutable_data();
  auto rvar = running_var.mutable_data();
  auto xd = x.data();
  if (training) {
    const double count = static_cast<double>(B * HW);
    for (std::size_t c = 0; c < C; ++c) {
      double mu = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < HW; ++i) mu += xd[(b * C + c) * HW + i];
      mu /= count;
      double var = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < HW; ++i) {
          const double d = xd[(b * C + c) * HW + i] - mu;
          var += d * d;
        }
      var = count > 1.0 ? var / (count - 1.0) : 0.0;
      rmean[c] = (1.0 - kBatchNormMomentum) * rmean[c] + kBatchNormMomentum * mu;
      rvar[c] = (1.0 - kBatchNormMomentum) * rvar[c] + kBatchNormMomentum * var;
    }
  }
  auto shift = std::make_shared<std::vector<double>>(C);
  auto inv_std = std::make_shared<std::vector<double>>(C);
  for (std::size_t c = 0; c < C; ++c) {
    (*shift)[c] = rmean[c];
    (*inv_std)[c] = 1.0 / std::sqrt(rvar[c] + kBatchNormEps);
  }
  std::vector<double> out(x.numel());
  auto wd = weight.data(), bd = bias.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < HW; ++i) {
        const std::size_t k = (b * C + c) * HW + i;
        out[k] = (xd[k] - (*shift)[c]) * (*inv_std)[c] * wd[c] + bd[c];
      }
  return make_op(x.shape(), std::move(out), "batch_norm", {x, weight, bias}, [=](detail::Node& self) {
    auto gx = parent_grad(self, 0), gw = parent_grad(self, 1), gb = parent_grad(self, 2);
    const auto& xd = self.parents[0]->data;
    const auto& wd = self.parents[1]->data;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < HW; ++i) {
          const std::size_t k = (b * C + c) * HW + i;
          const double g = self.grad[k];
          const double h = (xd[k] - (*shift)[c]) * (*inv_std)[c];
          if (!gx.empty()) gx[k] += g * wd[c] * (*inv_std)[c];
          if (!gw.empty()) gw[c] += g * h;
          if (!gb.empty()) gb[c] += g;
        }
  });
}

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

/// out[b, ...] = x[b, ...] * factors[b]; factors are constants.
inline Tensor scale_per_sample(const Tensor& x, std::vector<double> factors) {
  if (x.dim() == 0 || x.size(0) != factors.size()) throw ShapeError("scale_per_sample: one factor per sample");
  const std::size_t per = x.numel() / factors.size();
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * factors[i / per];
  return make_op(x.shape(), std::move(out), "scale_per_sample", {x},
                 [per, f = std::move(factors)](detail::Node& self) {
                   auto gx = parent_grad(self, 0);
                   for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * f[i / per];
                 });
}

}  // namespace swinrmt
