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

// Four-stage pyramid: convolutional stem, SwinRMT blocks, convolutional patch
// merging, LayerNorm + global-average-pool + linear head.

#include <cstdint>
#include <string>
#include <vector>

#include "swinrmt/attention.hpp"
#include "swinrmt/layers.hpp"
#include "swinrmt/windowing.hpp"

namespace swinrmt {

inline constexpr std::size_t kNumStages = 4;

struct ModelConfig {
  Variant variant = Variant::Retention;
  std::size_t img_size = 224;
  std::size_t in_channels = 3;
  std::vector<std::size_t> embed_dims{64, 128, 256, 512};
  std::vector<std::size_t> depths{2, 2, 6, 2};
  std::vector<std::size_t> num_heads{2, 4, 8, 16};
  std::vector<std::size_t> window_sizes{7, 7, 7, 7};
  double layerscale_init = 1e-2;
  double droppath_max = 0.1;
  std::size_t num_classes = 100;
  std::size_t mlp_ratio = 4;
  bool baseline_lce = true;  // whether the baseline keeps LCE

  bool operator==(const ModelConfig&) const = default;

  /// dims [8,16,32,64], depths [1,1,1,1], heads [1,2,2,4] on 16x16 inputs.
  static ModelConfig micro(Variant variant, std::size_t img = 16, std::size_t classes = 2) {
    ModelConfig c;
    c.variant = variant;
    c.img_size = img;
    c.embed_dims = {8, 16, 32, 64};
    c.depths = {1, 1, 1, 1};
    c.num_heads = {1, 2, 2, 4};
    c.num_classes = classes;
    return c;
  }

  std::size_t shift_size(std::size_t stage) const { return window_sizes.at(stage) / 2; }
  std::size_t total_blocks() const {
    std::size_t n = 0;
    for (std::size_t d : depths) n += d;
    return n;
  }

  AttentionConfig attention(std::size_t stage) const {
    return AttentionConfig::for_variant(variant, embed_dims.at(stage), num_heads.at(stage), window_sizes.at(stage),
                                        baseline_lce);
  }

  /// Spatial side of each stage's feature map.
  std::vector<std::size_t> stage_resolutions() const {
    std::vector<std::size_t> res(kNumStages);
    std::size_t r = img_size / 4;
    for (std::size_t s = 0; s < kNumStages; ++s) {
      res[s] = r;
      r = (r + 1) / 2;
    }
    return res;
  }

  void validate() const {
    if (embed_dims.size() != kNumStages || depths.size() != kNumStages || num_heads.size() != kNumStages ||
        window_sizes.size() != kNumStages) {
      throw ConfigError("model: embed_dims, depths, num_heads and window_sizes need one entry per stage (4)");
    }
    if (img_size == 0 || img_size % 4 != 0) {
      throw ConfigError("model: image size must be a positive multiple of 4, got " + std::to_string(img_size));
    }
    if (in_channels == 0 || num_classes == 0 || mlp_ratio == 0) throw ConfigError("model: zero-sized dimension");
    if (embed_dims[0] % 2 != 0) throw ConfigError("model: stem needs an even embedding dimension");
    for (std::size_t s = 0; s < kNumStages; ++s) {
      if (s > 0 && embed_dims[s] != 2 * embed_dims[s - 1]) {
        throw ConfigError("model: embed_dims must double from stage to stage");
      }
      if (depths[s] == 0) throw ConfigError("model: every stage needs at least one block");
      if (window_sizes[s] == 0) throw ConfigError("model: window sizes must be positive");
      attention(s).validate();
    }
    if (droppath_max < 0.0 || droppath_max > 1.0) throw ConfigError("model: droppath_max must lie in [0, 1]");
  }
};

/// rate_k = p_max * k / (n - 1); a single block gets 0.
inline std::vector<double> droppath_schedule(std::size_t total_blocks, double p_max) {
  if (total_blocks == 0) throw ConfigError("droppath_schedule: need at least one block");
  std::vector<double> rates(total_blocks, 0.0);
  if (total_blocks == 1) return rates;
  for (std::size_t k = 0; k < total_blocks; ++k)
    rates[k] = p_max * static_cast<double>(k) / static_cast<double>(total_blocks - 1);
  return rates;
}

/// Training flag plus the generator that drives DropPath.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;
};

/// Per-sample residual-branch drop with inverted 1/(1-p) scaling; identity in eval.
inline Tensor drop_path(const Tensor& x, double rate, ForwardContext& ctx) {
  if (!ctx.training || rate <= 0.0) return x;
  if (ctx.rng == nullptr) throw ConfigError("drop_path: training mode needs a generator");
  std::vector<double> factors(x.size(0));
  for (double& f : factors) {
    const bool keep = ctx.rng->uniform() >= rate;
    f = keep && rate < 1.0 ? 1.0 / (1.0 - rate) : 0.0;
  }
  return scale_per_sample(x, std::move(factors));
}

struct Ffn {
  LayerNorm norm1;
  Linear fc1;
  Conv2d dwconv;
  LayerNorm norm2;
  Linear fc2;

  static Ffn init(std::size_t dim, std::size_t ratio, Rng& rng) {
    const std::size_t hidden = dim * ratio;
    return {LayerNorm::init(dim), Linear::init(dim, hidden, rng),
            Conv2d::init(hidden, hidden, 3, {.stride = 1, .padding = 1, .groups = hidden}, rng),
            LayerNorm::init(hidden), Linear::init(hidden, dim, rng)};
  }

  /// LN -> Linear -> GELU -> DWConv3x3 -> LN -> Linear on [B, H, W, C].
  Tensor operator()(const Tensor& x) const {
    Tensor h = gelu(fc1(norm1(x)));
    h = to_nhwc(dwconv(to_nchw(h)));
    return fc2(norm2(h));
  }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    norm1.visit(prefix + ".norm1", f);
    fc1.visit(prefix + ".fc1", f);
    dwconv.visit(prefix + ".dwconv", f);
    norm2.visit(prefix + ".norm2", f);
    fc2.visit(prefix + ".fc2", f);
  }
};

/// Partition (with optional cyclic shift) -> attention -> reverse.
inline Tensor windowed_attention(const Tensor& x, const AttentionConfig& cfg, const AttentionParams& params,
                                 const WindowLayout& layout) {
  const std::size_t M = layout.eff_window, s = layout.eff_shift;
  Tensor t = pad_hw(x, layout.pad_h, layout.pad_w);
  t = cyclic_shift(t, s);
  t = window_partition(t, M);
  t = attention_block_output(t, cfg, params, decompose_mask_1d(layout));
  t = window_reverse(t, M, layout.padded_h(), layout.padded_w());
  t = cyclic_unshift(t, s);
  return crop_hw(t, layout.height, layout.width);
}

struct Block {
  AttentionConfig attn_cfg;
  std::size_t shift = 0;  // nominal shift for this block: 0 or floor(M/2)
  double drop_rate = 0.0;
  Conv2d pos;  // DWConv 3x3 positional encoding, absent for the baseline
  LayerNorm norm;
  AttentionParams attn;
  Ffn ffn;
  Tensor gamma1;
  Tensor gamma2;

  static Block init(const AttentionConfig& cfg, std::size_t shift, double drop_rate, double layerscale,
                    std::size_t mlp_ratio, Rng& rng) {
    Block b;
    b.attn_cfg = cfg;
    b.shift = shift;
    b.drop_rate = drop_rate;
    const std::size_t C = cfg.dim;
    if (cfg.variant != Variant::Baseline) {
      b.pos = Conv2d::init(C, C, 3, {.stride = 1, .padding = 1, .groups = C}, rng);
    }
    b.norm = LayerNorm::init(C);
    b.attn = AttentionParams::init(cfg, rng);
    b.ffn = Ffn::init(C, mlp_ratio, rng);
    b.gamma1 = make_param(Tensor(Shape{C}, layerscale));
    b.gamma2 = make_param(Tensor(Shape{C}, layerscale));
    return b;
  }

  WindowLayout layout_for(std::size_t height, std::size_t width) const {
    return make_layout(attn_cfg.window_size, shift, height, width);
  }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    if (pos.weight.defined()) pos.visit(prefix + ".pos", f);
    norm.visit(prefix + ".norm", f);
    attn.visit(prefix + ".attn", f);
    ffn.visit(prefix + ".ffn", f);
    f(prefix + ".gamma1", gamma1, false);
    f(prefix + ".gamma2", gamma2, false);
  }
};

/// x += DWConv3x3(x); x += DropPath(g1 * Attn(LN(x))); x += DropPath(g2 * FFN(x)).
inline Tensor block_forward(const Tensor& x_in, const Block& block, const WindowLayout& layout, ForwardContext& ctx) {
  Tensor x = x_in;
  if (block.pos.weight.defined()) x = add(x, to_nhwc(block.pos(to_nchw(x))));
  const Tensor attn = windowed_attention(block.norm(x), block.attn_cfg, block.attn, layout);
  x = add(x, drop_path(mul(attn, block.gamma1), block.drop_rate, ctx));
  x = add(x, drop_path(mul(block.ffn(x), block.gamma2), block.drop_rate, ctx));
  return x;
}

inline Tensor block_forward(const Tensor& x, const Block& block, ForwardContext& ctx) {
  return block_forward(x, block, block.layout_for(x.size(1), x.size(2)), ctx);
}

/// Four 3x3 convs (strides 2,1,2,1) with BN; GELU after the first three.
struct PatchEmbed {
  Conv2d conv[4];
  BatchNorm2d bn[4];

  static PatchEmbed init(std::size_t in_channels, std::size_t embed, Rng& rng) {
    const std::size_t half = embed / 2;
    const std::size_t ins[4] = {in_channels, half, half, embed};
    const std::size_t outs[4] = {half, half, embed, embed};
    const std::size_t strides[4] = {2, 1, 2, 1};
    PatchEmbed p;
    for (int i = 0; i < 4; ++i) {
      p.conv[i] = Conv2d::init(ins[i], outs[i], 3, {.stride = strides[i], .padding = 1, .groups = 1}, rng, false);
      p.bn[i] = BatchNorm2d::init(outs[i]);
    }
    return p;
  }

  /// [B, C_in, H, W] -> [B, H/4, W/4, C_embed]
  Tensor operator()(const Tensor& x, bool training) {
    if (x.dim() != 4 || x.size(2) % 4 != 0 || x.size(3) % 4 != 0) {
      throw ConfigError("patch_embed: input must be [B, C, H, W] with H, W divisible by 4, got " +
                        shape_str(x.shape()));
    }
    Tensor h = x;
    for (int i = 0; i < 4; ++i) {
      h = bn[i](conv[i](h), training);
      if (i < 3) h = gelu(h);
    }
    return to_nhwc(h);
  }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    for (int i = 0; i < 4; ++i) {
      conv[i].visit(prefix + ".conv" + std::to_string(i), f);
      bn[i].visit(prefix + ".bn" + std::to_string(i), f);
    }
  }
};

/// Conv3x3 stride 2 pad 1 (C -> C_out) + BN on a channels-last map.
struct PatchMerge {
  Conv2d conv;
  BatchNorm2d bn;

  static PatchMerge init(std::size_t in, std::size_t out, Rng& rng) {
    return {Conv2d::init(in, out, 3, {.stride = 2, .padding = 1, .groups = 1}, rng, false), BatchNorm2d::init(out)};
  }

  Tensor operator()(const Tensor& x, bool training) { return to_nhwc(bn(conv(to_nchw(x)), training)); }

  template <TensorVisitor F>
  void visit(const std::string& prefix, F&& f) {
    conv.visit(prefix + ".conv", f);
    bn.visit(prefix + ".bn", f);
  }
};

class Model {
 public:
  static Model init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Model m;
    m.config_ = config;
    Rng root(seed);
    Rng rng = root.split("params");
    m.drop_rng_ = root.split("droppath");
    m.stem_ = PatchEmbed::init(config.in_channels, config.embed_dims[0], rng);
    const auto rates = droppath_schedule(config.total_blocks(), config.droppath_max);
    std::size_t k = 0;
    m.stages_.resize(kNumStages);
    for (std::size_t s = 0; s < kNumStages; ++s) {
      for (std::size_t b = 0; b < config.depths[s]; ++b, ++k) {
        const std::size_t shift = b % 2 == 1 ? config.shift_size(s) : 0;
        m.stages_[s].push_back(
            Block::init(config.attention(s), shift, rates[k], config.layerscale_init, config.mlp_ratio, rng));
      }
      if (s + 1 < kNumStages) m.merges_.push_back(PatchMerge::init(config.embed_dims[s], config.embed_dims[s + 1], rng));
    }
    m.norm_ = LayerNorm::init(config.embed_dims.back());
    m.head_ = Linear::init(config.embed_dims.back(), config.num_classes, rng);
    return m;
  }

  const ModelConfig& config() const { return config_; }
  std::vector<std::vector<Block>>& stages() { return stages_; }
  const std::vector<std::vector<Block>>& stages() const { return stages_; }

  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }
  /// BN running statistics follow an EMA in training mode unless frozen here.
  void set_bn_stat_updates(bool enabled) { bn_updates_ = enabled; }
  Rng& droppath_rng() { return drop_rng_; }

  /// [B, C_in, H, W] -> logits [B, num_classes]
  Tensor forward(const Tensor& images) {
    ForwardContext ctx{training_, &drop_rng_};
    const bool bn_update = training_ && bn_updates_;
    Tensor x = stem_(images, bn_update);
    for (std::size_t s = 0; s < kNumStages; ++s) {
      for (const Block& block : stages_[s]) x = block_forward(x, block, ctx);
      if (s + 1 < kNumStages) x = merges_[s](x, bn_update);
    }
    x = norm_(x);
    const std::size_t B = x.size(0), H = x.size(1), W = x.size(2), C = x.size(3);
    x = mean_dim(reshape(x, Shape{B, H * W, C}), 1);
    return head_(x);
  }

  /// Layout each block used (or would use) for the configured input size.
  std::vector<std::vector<WindowLayout>> layouts() const {
    std::vector<std::vector<WindowLayout>> out(kNumStages);
    const auto res = config_.stage_resolutions();
    for (std::size_t s = 0; s < kNumStages; ++s)
      for (const Block& b : stages_[s]) out[s].push_back(b.layout_for(res[s], res[s]));
    return out;
  }

  template <TensorVisitor F>
  void visit(F&& f) {
    stem_.visit("stem", f);
    for (std::size_t s = 0; s < kNumStages; ++s) {
      for (std::size_t b = 0; b < stages_[s].size(); ++b)
        stages_[s][b].visit("stages." + std::to_string(s) + ".blocks." + std::to_string(b), f);
      if (s + 1 < kNumStages) merges_[s].visit("merges." + std::to_string(s), f);
    }
    norm_.visit("norm", f);
    head_.visit("head", f);
  }

  std::vector<Tensor> parameters() {
    std::vector<Tensor> out;
    visit([&](const std::string&, Tensor& t, bool buffer) {
      if (!buffer) out.push_back(t);
    });
    return out;
  }

  /// Number of trainable values, counted by enumeration.
  std::size_t num_parameters() {
    std::size_t n = 0;
    visit([&](const std::string&, Tensor& t, bool buffer) {
      if (!buffer) n += t.numel();
    });
    return n;
  }

  void zero_grad() {
    visit([](const std::string&, Tensor& t, bool) { t.zero_grad(); });
  }

 private:
  ModelConfig config_;
  bool training_ = false;
  bool bn_updates_ = true;
  Rng drop_rng_;
  PatchEmbed stem_;
  std::vector<std::vector<Block>> stages_;
  std::vector<PatchMerge> merges_;
  LayerNorm norm_;
  Linear head_;
};

/// Trainable value count from the config alone (BN running statistics excluded).
inline std::size_t count_params(const ModelConfig& config) {
  config.validate();
  const auto linear = [](std::size_t in, std::size_t out) { return in * out + out; };
  std::size_t total = 0;
  // stem: bias-free convs, BN affine after each
  const std::size_t E = config.embed_dims[0], half = E / 2;
  total += config.in_channels * half * 9 + 2 * half;
  total += half * half * 9 + 2 * half;
  total += half * E * 9 + 2 * E;
  total += E * E * 9 + 2 * E;
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const AttentionConfig cfg = config.attention(s);
    const std::size_t C = cfg.dim, hidden = C * config.mlp_ratio, nh = cfg.num_heads;
    std::size_t block = 0;
    if (cfg.variant != Variant::Baseline) block += 9 * C + C;  // positional DWConv
    block += 2 * C;                                             // attention LN
    block += 3 * linear(C, C) + linear(C, cfg.value_dim());     // q, k, o, v
    if (cfg.use_g1) block += linear(C, C);
    if (cfg.use_lce) block += (25 * C + C) + linear(C, C);
    block += 2 * nh;                                   // per-axis decay rates
    if (cfg.variant == Variant::Swat) block += nh;     // ALiBi slopes
    block += 2 * C + linear(C, hidden) + (9 * hidden + hidden) + 2 * hidden + linear(hidden, C);
    block += 2 * C;  // LayerScale
    total += block * config.depths[s];
    if (s + 1 < kNumStages) total += C * config.embed_dims[s + 1] * 9 + 2 * config.embed_dims[s + 1];
  }
  total += 2 * config.embed_dims.back() + linear(config.embed_dims.back(), config.num_classes);
  return total;
}

}  // namespace swinrmt
