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

// Finite-difference cases for every differentiable op, grouped by module.
// Inputs are drawn in [-2, 2] unless the op's domain says otherwise.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "swinrmt/model.hpp"
#include "swinrmt/verify/gradcheck.hpp"
#include "swinrmt/verify/probes.hpp"

namespace swinrmt::verify {

inline const std::vector<std::uint64_t> kGradSeeds{1, 2, 3, 4, 5};

struct GradEntry {
  std::string scope;
  std::string op;
  std::function<GradCase(std::uint64_t)> make;
  double tolerance = kGradTolerance;
};

namespace detail {

inline Tensor U(const Shape& shape, Rng& rng) { return uniform_tensor(shape, rng, -2.0, 2.0); }

/// The loss sees only the first output: sum(f(inputs) * R) with R fixed by `seed`.
inline LossFn projected(std::function<Tensor(const std::vector<Tensor>&)> f, std::uint64_t seed) {
  return [f = std::move(f), seed](const std::vector<Tensor>& in) { return projection_loss(f(in), seed + 7919); };
}

template <typename T>
std::vector<Tensor> trainables(T& module, const std::string& prefix = "m") {
  std::vector<Tensor> out;
  module.visit(prefix, [&](const std::string&, Tensor& t, bool buffer) {
    if (!buffer) out.push_back(t);
  });
  return out;
}

inline void append(std::vector<Tensor>& to, const std::vector<Tensor>& from) { to.insert(to.end(), from.begin(), from.end()); }

/// Elementwise/unary op on one [2, 3] input.
inline GradEntry unary(const std::string& op, std::function<Tensor(const Tensor&)> f) {
  return {"tensor-engine", op, [f](std::uint64_t seed) {
            Rng rng(seed);
            return GradCase{projected([f](const std::vector<Tensor>& in) { return f(in[0]); }, seed),
                            {U(Shape{2, 3}, rng)}};
          }};
}

inline GradEntry attention_case(const std::string& op, Variant variant, bool masked) {
  return {"attention", op, [variant, masked](std::uint64_t seed) {
            Rng rng(seed);
            const AttentionConfig cfg = AttentionConfig::for_variant(variant, 4, 2, 3);
            auto params = std::make_shared<AttentionParams>(AttentionParams::init(cfg, rng));
            for (double& u : params->decay_w.param().mutable_data()) u = rng.uniform(-2.0, 2.0);
            for (double& u : params->decay_h.param().mutable_data()) u = rng.uniform(-2.0, 2.0);
            DecomposedMask masks;
            Tensor x = U(Shape{1, 2, 3, 4}, rng);
            if (masked) {
              const WindowLayout layout = make_layout(2, 1, 4, 4);
              masks = decompose_mask_1d(layout);
              x = U(Shape{layout.num_windows(), 2, 2, 4}, rng);
            }
            std::vector<Tensor> inputs{x};
            append(inputs, trainables(*params));
            return GradCase{projected([cfg, params, masks](const std::vector<Tensor>& in) {
                                        return attention_block_output(in[0], cfg, *params, masks);
                                      },
                                      seed),
                            inputs};
          }};
}

inline GradEntry windowed_case(Variant variant) {
  return {"windowing", "windowed_attention " + to_string(variant), [variant](std::uint64_t seed) {
            Rng rng(seed);
            const AttentionConfig cfg = AttentionConfig::for_variant(variant, 4, 2, 2);
            auto params = std::make_shared<AttentionParams>(AttentionParams::init(cfg, rng));
            const WindowLayout layout = make_layout(2, 1, 3, 4);
            std::vector<Tensor> inputs{U(Shape{1, 3, 4, 4}, rng)};
            append(inputs, trainables(*params));
            return GradCase{projected([cfg, params, layout](const std::vector<Tensor>& in) {
                                        return windowed_attention(in[0], cfg, *params, layout);
                                      },
                                      seed),
                            inputs, 80};
          }};
}

inline GradEntry block_case(Variant variant) {
  return {"model", "block_forward " + to_string(variant), [variant](std::uint64_t seed) {
            Rng rng(seed);
            const AttentionConfig cfg = AttentionConfig::for_variant(variant, 4, 2, 2);
            auto block = std::make_shared<Block>(Block::init(cfg, 1, 0.0, 0.5, 2, rng));
            std::vector<Tensor> inputs{U(Shape{1, 4, 4, 4}, rng)};
            append(inputs, trainables(*block));
            return GradCase{projected([block](const std::vector<Tensor>& in) {
                                        ForwardContext ctx;
                                        return block_forward(in[0], *block, ctx);
                                      },
                                      seed),
                            inputs, 80};
          }};
}

inline GradEntry model_case(Variant variant) {
  return {"model", "model " + to_string(variant),
          [variant](std::uint64_t seed) {
            // LayerScale at 1: at its 1e-2 init some gradients sit near 1e-9, below what
            // an h = 1e-5 central difference resolves in binary64.
            ModelConfig config = ModelConfig::micro(variant);
            config.layerscale_init = 1.0;
            auto model = std::make_shared<Model>(Model::init(config, seed));
            Rng rng(seed + 100);
            const Tensor images = uniform_tensor(Shape{2, 3, 16, 16}, rng, -1.0, 1.0);
            return GradCase{projected([model, images](const std::vector<Tensor>&) { return model->forward(images); },
                                      seed),
                            model->parameters(), 100};
          },
          kModelGradTolerance};
}

}  // namespace detail

inline std::vector<GradEntry> gradient_entries() {
  using detail::projected;
  using detail::U;
  using Ins = std::vector<Tensor>;
  std::vector<GradEntry> e;

  // tensor-engine
  e.push_back({"tensor-engine", "add", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return add(in[0], in[1]); }, seed),
                                 {U(Shape{3, 4}, rng), U(Shape{4}, rng)}};
               }});
  e.push_back({"tensor-engine", "sub", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return sub(in[0], in[1]); }, seed),
                                 {U(Shape{2, 3}, rng), U(Shape{3}, rng)}};
               }});
  e.push_back({"tensor-engine", "mul", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return mul(in[0], in[1]); }, seed),
                                 {U(Shape{3, 4}, rng), U(Shape{4}, rng)}};
               }});
  e.push_back(detail::unary("scale", [](const Tensor& x) { return scale(x, -0.7); }));
  e.push_back(detail::unary("add_scalar", [](const Tensor& x) { return add_scalar(x, 0.3); }));
  e.push_back(detail::unary("sigmoid", [](const Tensor& x) { return sigmoid(x); }));
  e.push_back(detail::unary("silu", [](const Tensor& x) { return silu(x); }));
  e.push_back(detail::unary("gelu", [](const Tensor& x) { return gelu(x); }));
  e.push_back(detail::unary("exp", [](const Tensor& x) { return exp(x); }));
  e.push_back({"tensor-engine", "log", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return log(in[0]); }, seed),
                                 {uniform_tensor(Shape{2, 3}, rng, 0.5, 2.0)}};
               }});
  e.push_back({"tensor-engine", "sum", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{[](const Ins& in) { return sum(mul(in[0], exp(in[0]))); }, {U(Shape{2, 3}, rng)}};
               }});
  e.push_back({"tensor-engine", "sum_dim", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return sum_dim(in[0], 1); }, seed),
                                 {U(Shape{2, 3, 4}, rng)}};
               }});
  e.push_back({"tensor-engine", "mean_dim", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return mean_dim(in[0], 2); }, seed),
                                 {U(Shape{2, 3, 4}, rng)}};
               }});
  e.push_back({"tensor-engine", "reshape", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return reshape(in[0], Shape{4, 6}); }, seed),
                                 {U(Shape{2, 3, 4}, rng)}};
               }});
  e.push_back({"tensor-engine", "permute", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return permute(in[0], {2, 0, 1}); }, seed),
                                 {U(Shape{2, 3, 4}, rng)}};
               }});
  e.push_back({"tensor-engine", "slice", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return slice_lastdim(in[0], 1, 3); }, seed),
                                 {U(Shape{2, 4}, rng)}};
               }});
  e.push_back({"tensor-engine", "matmul", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return matmul(in[0], in[1]); }, seed),
                                 {U(Shape{2, 3, 4}, rng), U(Shape{4, 2}, rng)}};
               }});
  e.push_back({"tensor-engine", "softmax", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return softmax_lastdim(in[0]); }, seed),
                                 {U(Shape{3, 5}, rng)}};
               }});
  e.push_back({"tensor-engine", "log_softmax", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return log_softmax_lastdim(in[0]); }, seed),
                                 {U(Shape{3, 5}, rng)}};
               }});
  e.push_back({"tensor-engine", "layer_norm", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return layer_norm(in[0], in[1], in[2]); }, seed),
                                 {U(Shape{3, 6}, rng), U(Shape{6}, rng), U(Shape{6}, rng)}};
               }});
  e.push_back({"tensor-engine", "conv2d", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) {
                                   return conv2d(in[0], in[1], in[2], {.stride = 2, .padding = 1, .groups = 1});
                                 },
                                           seed),
                                 {U(Shape{1, 2, 5, 5}, rng), U(Shape{3, 2, 3, 3}, rng), U(Shape{3}, rng)}};
               }});
  e.push_back({"tensor-engine", "conv2d depthwise", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) {
                                   return conv2d(in[0], in[1], in[2], {.stride = 1, .padding = 1, .groups = 3});
                                 },
                                           seed),
                                 {U(Shape{2, 3, 4, 4}, rng), U(Shape{3, 1, 3, 3}, rng), U(Shape{3}, rng)}};
               }});
  e.push_back({"tensor-engine", "batch_norm", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto mean = std::make_shared<Tensor>(U(Shape{3}, rng));
                 auto var = std::make_shared<Tensor>(uniform_tensor(Shape{3}, rng, 0.5, 2.0));
                 return GradCase{projected([mean, var](const Ins& in) {
                                   return batch_norm2d(in[0], in[1], in[2], *mean, *var, false);
                                 },
                                           seed),
                                 {U(Shape{2, 3, 2, 2}, rng), U(Shape{3}, rng), U(Shape{3}, rng)}};
               }});
  e.push_back({"tensor-engine", "scale_per_sample", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return scale_per_sample(in[0], {0.0, 2.0, 0.5}); }, seed),
                                 {U(Shape{3, 2, 2}, rng)}};
               }});

  // positional
  e.push_back({"positional", "decay_mask_additive", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto spec = std::make_shared<DecaySpec>(DecaySpec::learnable(3));
                 for (double& u : spec->param().mutable_data()) u = rng.uniform(-2.0, 2.0);
                 return GradCase{projected([spec](const Ins&) { return decay_mask_additive(*spec, 4); }, seed),
                                 {spec->param()}};
               }});
  e.push_back({"positional", "decay_mask_multiplicative", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto spec = std::make_shared<DecaySpec>(DecaySpec::learnable(3));
                 for (double& u : spec->param().mutable_data()) u = rng.uniform(-2.0, 2.0);
                 return GradCase{projected([spec](const Ins&) { return decay_mask_multiplicative(*spec, 4); }, seed),
                                 {spec->param()}};
               }});
  e.push_back({"positional", "alibi_bias", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return alibi_bias(in[0], 5); }, seed), {U(Shape{4}, rng)}};
               }});
  e.push_back({"positional", "rope", [](std::uint64_t seed) {
                 Rng rng(seed);
                 std::vector<std::int64_t> pos(5);
                 for (auto& p : pos) p = static_cast<std::int64_t>(rng.index(40)) - 20;
                 return GradCase{projected([pos](const Ins& in) { return rope_apply(in[0], rope_frequencies(4), pos); },
                                           seed),
                                 {U(Shape{2, 5, 4}, rng)}};
               }});

  // attention kernels
  e.push_back({"attention", "retention_pass_1d", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto spec = std::make_shared<DecaySpec>(DecaySpec::learnable(2));
                 for (double& u : spec->param().mutable_data()) u = rng.uniform(-2.0, 2.0);
                 return GradCase{projected([spec](const Ins& in) {
                                   return retention_pass_1d(in[0], in[1], in[2], decay_mask_additive(*spec, 4));
                                 },
                                           seed),
                                 {U(Shape{2, 2, 4, 4}, rng), U(Shape{2, 2, 4, 4}, rng), U(Shape{2, 2, 4, 4}, rng),
                                  spec->param()}};
               }});
  e.push_back({"attention", "swat_pass_1d", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto spec = std::make_shared<DecaySpec>(DecaySpec::learnable(2));
                 for (double& u : spec->param().mutable_data()) u = rng.uniform(-2.0, 2.0);
                 return GradCase{projected([spec](const Ins& in) {
                                   return swat_pass_1d(in[0], in[1], in[2], alibi_bias(in[3], 4),
                                                       decay_mask_multiplicative(*spec, 4), 3);
                                 },
                                           seed),
                                 {U(Shape{2, 2, 4, 4}, rng), U(Shape{2, 2, 4, 4}, rng), U(Shape{2, 2, 4, 4}, rng),
                                  U(Shape{2}, rng), spec->param()}};
               }});
  e.push_back({"attention", "post_softmax_decay", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto spec = std::make_shared<DecaySpec>(DecaySpec::learnable(2));
                 for (double& u : spec->param().mutable_data()) u = rng.uniform(-2.0, 2.0);
                 return GradCase{projected([spec](const Ins& in) {
                                   return post_softmax_decay_weights(in[0], in[1], decay_mask_multiplicative(*spec, 4));
                                 },
                                           seed),
                                 {U(Shape{2, 4, 4}, rng), U(Shape{2, 4, 4}, rng), spec->param()}};
               }});
  e.push_back({"attention", "swiglu_value", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return swiglu_value(in[0]); }, seed),
                                 {U(Shape{2, 3, 8}, rng)}};
               }});
  e.push_back({"attention", "lce", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto dw = std::make_shared<Conv2d>(Conv2d::init(4, 4, 5, {.stride = 1, .padding = 2, .groups = 4}, rng));
                 auto pw = std::make_shared<Conv2d>(Conv2d::init(4, 4, 1, {}, rng));
                 std::vector<Tensor> inputs{U(Shape{1, 3, 3, 4}, rng), dw->weight, dw->bias, pw->weight, pw->bias};
                 return GradCase{projected([dw, pw](const Ins& in) { return lce(in[0], *dw, *pw); }, seed), inputs};
               }});
  e.push_back({"attention", "g1_gate", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto gate = std::make_shared<Linear>(Linear::init(4, 4, rng));
                 return GradCase{projected([gate](const Ins& in) { return g1_gate(in[0], in[1], *gate); }, seed),
                                 {U(Shape{1, 2, 2, 4}, rng), U(Shape{1, 2, 2, 4}, rng), gate->weight, gate->bias}};
               }});
  for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
    e.push_back(detail::attention_case("attention_block_output " + to_string(v), v, false));
    e.push_back(detail::attention_case("attention_block_output " + to_string(v) + " masked", v, true));
  }

  // windowing
  e.push_back({"windowing", "pad", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return pad_hw(in[0], 1, 2); }, seed),
                                 {U(Shape{1, 3, 3, 2}, rng)}};
               }});
  e.push_back({"windowing", "crop", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return crop_hw(in[0], 3, 2); }, seed),
                                 {U(Shape{1, 4, 4, 2}, rng)}};
               }});
  e.push_back({"windowing", "roll", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return roll_hw(in[0], 1, -2); }, seed),
                                 {U(Shape{1, 3, 4, 2}, rng)}};
               }});
  e.push_back({"windowing", "window_partition", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return window_partition(in[0], 2); }, seed),
                                 {U(Shape{1, 5, 5, 2}, rng)}};
               }});
  e.push_back({"windowing", "window_reverse", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return GradCase{projected([](const Ins& in) { return window_reverse(in[0], 2, 3, 4); }, seed),
                                 {U(Shape{4, 2, 2, 2}, rng)}};
               }});
  for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) e.push_back(detail::windowed_case(v));

  // model
  e.push_back({"model", "ffn", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto ffn = std::make_shared<Ffn>(Ffn::init(4, 2, rng));
                 std::vector<Tensor> inputs{U(Shape{1, 2, 3, 4}, rng)};
                 detail::append(inputs, detail::trainables(*ffn));
                 return GradCase{projected([ffn](const Ins& in) { return (*ffn)(in[0]); }, seed), inputs, 80};
               }});
  e.push_back({"model", "patch_embed", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto stem = std::make_shared<PatchEmbed>(PatchEmbed::init(3, 4, rng));
                 std::vector<Tensor> inputs{U(Shape{1, 3, 8, 8}, rng)};
                 detail::append(inputs, detail::trainables(*stem));
                 return GradCase{projected([stem](const Ins& in) { return (*stem)(in[0], false); }, seed), inputs, 80};
               }});
  e.push_back({"model", "patch_merge", [](std::uint64_t seed) {
                 Rng rng(seed);
                 auto merge = std::make_shared<PatchMerge>(PatchMerge::init(2, 4, rng));
                 std::vector<Tensor> inputs{U(Shape{1, 3, 3, 2}, rng)};
                 detail::append(inputs, detail::trainables(*merge));
                 return GradCase{projected([merge](const Ins& in) { return (*merge)(in[0], false); }, seed), inputs, 80};
               }});
  for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) e.push_back(detail::block_case(v));
  for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) e.push_back(detail::model_case(v));
  return e;
}

/// Runs every entry in `scope` ("all" for everything) over `seeds`.
inline std::vector<GradCheckReport> run_gradient_suite(const std::string& scope = "all",
                                                       const std::vector<std::uint64_t>& seeds = kGradSeeds) {
  std::vector<GradCheckReport> reports;
  for (const GradEntry& entry : gradient_entries()) {
    if (scope != "all" && entry.scope != scope) continue;
    reports.push_back(gradcheck_seeds(entry.op, entry.make, seeds, entry.tolerance));
  }
  return reports;
}

}  // namespace swinrmt::verify
