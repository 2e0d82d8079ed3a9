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

#include <cmath>
#include <string>

#include "swinrmt/ops.hpp"
#include "swinrmt/random.hpp"

namespace swinrmt {

// Callback used to enumerate stored tensors: (name, tensor, is_buffer).
// Buffers are saved in checkpoints but are not trainable and not counted.
template <typename F>
concept TensorVisitor = requires(F f, const std::string& name, Tensor& t) { f(name, t, true); };

inline Tensor make_param(Tensor t) {
  t.set_requires_grad(true);
  return t;
}

/// y = x W + b over the last axis; W is stored [in, out].
struct Linear {
  Tensor weight;
  Tensor bias;

  static Linear init(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Linear l;
    l.weight = make_param(uniform_tensor(Shape{in, out}, rng, -bound, bound));
    if (with_bias) l.bias = make_param(uniform_tensor(Shape{out}, rng, -bound, bound));
    return l;
  }

  std::size_t in_features() const { return weight.size(0); }
  std::size_t out_features() const { return weight.size(1); }

  Tensor operator()(const Tensor& x) const {
    Tensor y = matmul(x, weight);
    return bias.defined() ? add(y, bias) : y;
  }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight, false);
    if (bias.defined()) f(prefix + ".bias", bias, false);
  }
};

/// NCHW convolution parameters.
struct Conv2d {
  Tensor weight;  // [out, in/groups, k, k]
  Tensor bias;    // [out] or undefined
  Conv2dOptions options;

  static Conv2d init(std::size_t in, std::size_t out, std::size_t kernel, Conv2dOptions opt, Rng& rng,
                     bool with_bias = true) {
    const std::size_t per_group = in / opt.groups;
    const double bound = 1.0 / std::sqrt(static_cast<double>(per_group * kernel * kernel));
    Conv2d c;
    c.options = opt;
    c.weight = make_param(uniform_tensor(Shape{out, per_group, kernel, kernel}, rng, -bound, bound));
    if (with_bias) c.bias = make_param(uniform_tensor(Shape{out}, rng, -bound, bound));
    return c;
  }

  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, options); }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight, false);
    if (bias.defined()) f(prefix + ".bias", bias, false);
  }
};

struct LayerNorm {
  Tensor weight;
  Tensor bias;

  static LayerNorm init(std::size_t dim) {
    return {make_param(Tensor::ones(Shape{dim})), make_param(Tensor::zeros(Shape{dim}))};
  }

  Tensor operator()(const Tensor& x) const { return layer_norm(x, weight, bias, 1e-5); }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight, false);
    f(prefix + ".bias", bias, false);
  }
};

struct BatchNorm2d {
  Tensor weight;
  Tensor bias;
  Tensor running_mean;
  Tensor running_var;

  static BatchNorm2d init(std::size_t channels) {
    return {make_param(Tensor::ones(Shape{channels})), make_param(Tensor::zeros(Shape{channels})),
            Tensor::zeros(Shape{channels}), Tensor::ones(Shape{channels})};
  }

  Tensor operator()(const Tensor& x, bool training) {
    return batch_norm2d(x, weight, bias, running_mean, running_var, training);
  }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight, false);
    f(prefix + ".bias", bias, false);
    f(prefix + ".running_mean", running_mean, true);
    f(prefix + ".running_var", running_var, true);
  }
};

/// [B, H, W, C] <-> [B, C, H, W]
inline Tensor to_nchw(const Tensor& x) { return permute(x, {0, 3, 1, 2}); }
inline Tensor to_nhwc(const Tensor& x) { return permute(x, {0, 2, 3, 1}); }

}  // namespace swinrmt
