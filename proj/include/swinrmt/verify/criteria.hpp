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

// Release-gate checks. Each returns a pass flag plus a one-line detail.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "swinrmt/checkpoint.hpp"
#include "swinrmt/train.hpp"
#include "swinrmt/verify/gradcheck.hpp"
#include "swinrmt/verify/oracles.hpp"
#include "swinrmt/verify/probes.hpp"
#include "swinrmt/verify/reference.hpp"

namespace swinrmt::verify {

struct Outcome {
  bool passed = true;
  std::string detail;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

/// Random decay rates (both axes) and, for SWAT, slopes jittered around the balanced set.
inline void randomize_positional(AttentionParams& p, Rng& rng) {
  for (DecaySpec* spec : {&p.decay_w, &p.decay_h})
    for (double& u : spec->param().mutable_data()) u = rng.uniform(-2.0, 2.0);
  if (p.alibi_slopes.defined())
    for (double& s : p.alibi_slopes.mutable_data()) s += rng.uniform(-0.1, 0.1);
}

struct AttentionCase {
  AttentionConfig cfg;
  AttentionParams params;
  Tensor x;
  DecomposedMask masks;
  std::string label;
};

/// Random attention case: variant cycles with `index`; every fourth case runs
/// over the windows of a shifted layout so the 1-D masks are exercised.
inline AttentionCase random_attention_case(std::size_t index, std::uint64_t seed) {
  Rng rng(seed);
  const Variant variants[] = {Variant::Baseline, Variant::Retention, Variant::Swat};
  const Variant variant = variants[index % 3];
  const std::size_t heads = 1 + rng.index(4);
  const std::size_t d = 2 * (1 + rng.index(2));
  AttentionCase c;
  c.cfg = AttentionConfig::for_variant(variant, heads * d, heads, 2 + rng.index(6));
  c.params = AttentionParams::init(c.cfg, rng);
  randomize_positional(c.params, rng);
  std::size_t B = 1 + rng.index(2), H = 1 + rng.index(6), W = 1 + rng.index(6);
  if (index % 4 == 3) {
    const std::size_t M = 2 + rng.index(2);
    const WindowLayout layout = make_layout(M, M / 2, 2 * M, 2 * M);
    c.masks = decompose_mask_1d(layout);
    B = layout.num_windows();
    H = W = M;
  }
  c.x = uniform_tensor(Shape{B, H, W, c.cfg.dim}, rng, -2.0, 2.0);
  std::ostringstream os;
  os << to_string(variant) << " heads=" << heads << " d=" << d << " window " << H << "x" << W << " batch " << B
     << (c.masks.empty() ? "" : " masked");
  c.label = os.str();
  return c;
}

}  // namespace detail

/// Softmax-placed decay keeps rows stochastic; decay applied after the softmax leaks mass.
inline Outcome criterion_row_stochasticity(std::size_t cases = 20) {
  NoGradGuard guard;
  Outcome out;
  double worst_additive = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng(1000 + i);
    const std::size_t heads = 1 + rng.index(4), L = 1 + rng.index(8), d = 2 * (1 + rng.index(3));
    DecaySpec spec = DecaySpec::learnable(heads);
    for (double& u : spec.param().mutable_data()) u = rng.uniform(-3.0, 3.0);
    const Tensor q = uniform_tensor(Shape{2, heads, L, d}, rng, -2.0, 2.0);
    const Tensor k = uniform_tensor(Shape{2, heads, L, d}, rng, -2.0, 2.0);
    const Tensor mass = row_mass_probe(retention_weights(q, k, decay_mask_additive(spec, L)));
    for (double m : mass.data()) worst_additive = std::max(worst_additive, std::abs(m - 1.0));
    if (L > 1) {
      const Tensor leak = row_mass_probe(post_softmax_decay_weights(q, k, decay_mask_multiplicative(spec, L)));
      for (double m : leak.data()) {
        if (!(m < 1.0)) {
          out.passed = false;
          out.detail = "post-softmax decay row sum " + detail::fmt(m) + " is not below 1 (case " + std::to_string(i) + ")";
        }
      }
    }
  }
  if (worst_additive > 1e-10) {
    out.passed = false;
    out.detail = "softmax-placed decay row sum off by " + detail::fmt(worst_additive);
  }
  const Tensor zero(Shape{1, 3, 2});
  const double uniform_case =
      row_mass_probe(post_softmax_decay_weights(zero, zero, decay_mask_multiplicative(DecaySpec::fixed({0.5}), 3)))
          .data()[0];
  if (std::abs(uniform_case - 0.58333333333333333) > 1e-10) {
    out.passed = false;
    out.detail = "uniform gamma=0.5 L=3 row-0 mass " + detail::fmt(uniform_case) + ", expected 0.58333";
  }
  if (out.passed) {
    out.detail = "max |row sum - 1| = " + detail::fmt(worst_additive) + "; leaked row-0 mass " +
                 std::to_string(uniform_case);
  }
  return out;
}

/// dmsa_decomposed against the loop oracle over random variants, windows and head counts.
inline Outcome criterion_oracle_equivalence(std::size_t cases = 20) {
  NoGradGuard guard;
  Outcome out;
  double worst = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    detail::AttentionCase c = detail::random_attention_case(i, 2000 + i);
    const double err = max_abs_diff(dmsa_decomposed(c.x, c.cfg, c.params, c.masks),
                                    oracle_attention_2d(c.x, c.cfg, c.params, c.masks));
    worst = std::max(worst, err);
    if (!(err <= 1e-10)) {
      out.passed = false;
      out.detail = c.label + ": max abs diff " + detail::fmt(err);
      return out;
    }
  }
  out.detail = std::to_string(cases) + " cases, max abs diff " + detail::fmt(worst);
  return out;
}

/// Exhaustive adaptive-window laws plus the three named cases.
inline Outcome criterion_adaptive_window_laws() {
  Outcome out;
  std::size_t checked = 0;
  for (std::size_t M = 1; M <= 8; ++M)
    for (std::size_t s = 0; s < M; ++s)
      for (std::size_t H = 1; H <= 16; ++H)
        for (std::size_t W = 1; W <= 16; ++W) {
          const AdaptiveWindow a = adaptive_window(M, s, H, W);
          const std::size_t m = std::min({M, H, W});
          ++checked;
          if (a.window != m || a.shift != std::min(s, m / 2) || !(a.shift < a.window)) {
            out.passed = false;
            out.detail = "law violated at M=" + std::to_string(M) + " s=" + std::to_string(s) + " H=" +
                         std::to_string(H) + " W=" + std::to_string(W);
            return out;
          }
        }
  const struct {
    std::size_t M, s, H, W, m, sh;
  } named[] = {{7, 3, 56, 56, 7, 3}, {7, 3, 4, 4, 4, 2}, {7, 3, 2, 2, 2, 1}};
  for (const auto& n : named) {
    const AdaptiveWindow a = adaptive_window(n.M, n.s, n.H, n.W);
    if (a.window != n.m || a.shift != n.sh) {
      out.passed = false;
      out.detail = "named case (" + std::to_string(n.M) + "," + std::to_string(n.s) + "," + std::to_string(n.H) + "," +
                   std::to_string(n.W) + ") gave (" + std::to_string(a.window) + "," + std::to_string(a.shift) + ")";
      return out;
    }
  }
  out.detail = std::to_string(checked) + " tuples plus 3 named cases";
  return out;
}

/// A map that fits in one window gives the same output as attention over the whole map.
inline Outcome criterion_bypass_equivalence(std::size_t cases = 10) {
  NoGradGuard guard;
  Outcome out;
  double worst = 0.0;
  const Variant variants[] = {Variant::Baseline, Variant::Retention, Variant::Swat};
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng(3000 + i);
    const std::size_t heads = 1 + rng.index(3), n = 1 + rng.index(6);
    const std::size_t window = n + rng.index(4);
    const AttentionConfig cfg = AttentionConfig::for_variant(variants[i % 3], 2 * heads, heads, window);
    AttentionParams params = AttentionParams::init(cfg, rng);
    detail::randomize_positional(params, rng);
    const Tensor x = uniform_tensor(Shape{1 + rng.index(2), n, n, cfg.dim}, rng, -2.0, 2.0);
    const WindowLayout layout = make_layout(window, 0, n, n);
    if (layout.num_windows() != 1) {
      out.passed = false;
      out.detail = "layout is not single-window";
      return out;
    }
    const double err =
        max_abs_diff(windowed_attention(x, cfg, params, layout), attention_block_output(x, cfg, params));
    worst = std::max(worst, err);
    if (!(err <= 1e-10)) {
      out.passed = false;
      out.detail = to_string(cfg.variant) + " " + std::to_string(n) + "x" + std::to_string(n) + ": diff " +
                   detail::fmt(err);
      return out;
    }
  }
  out.detail = std::to_string(cases) + " cases, max abs diff " + detail::fmt(worst);
  return out;
}

struct ImpulseReport {
  double max_leak = 0.0;         // largest |output| outside the impulse's region
  double min_self_response = 0;  // smallest |output| at the impulse token itself
  std::size_t impulses = 0;
};

/// Drops a unit impulse into V at every token of an n x n map in turn, with
/// q = k = 0 and neutral positional terms, and measures the shifted-window
/// output outside the impulse's pre-shift region.
inline ImpulseReport impulse_propagation(Variant variant, std::size_t n, std::size_t window, std::size_t shift) {
  NoGradGuard guard;
  const WindowLayout layout = make_layout(window, shift, n, n);
  const std::size_t M = layout.eff_window, s = layout.eff_shift, Np = layout.padded_h();
  AttentionConfig cfg = AttentionConfig::for_variant(variant, 2, 1, window);
  Rng rng(0);
  AttentionParams params = AttentionParams::init(cfg, rng);
  params.decay_w = DecaySpec::fixed({1.0});
  params.decay_h = DecaySpec::fixed({1.0});
  if (params.alibi_slopes.defined()) params.alibi_slopes = Tensor(Shape{1});
  const DecomposedMask masks = decompose_mask_1d(layout);
  const auto regions = shift_region_ids(layout);
  // pre-shift token (h, w) sits at ((h - s) mod Np, (w - s) mod Np) after the roll
  const auto shifted = [&](std::size_t h, std::size_t w) {
    const std::size_t sh = (h + Np - s) % Np, sw = (w + Np - s) % Np;
    return std::pair{sh, sw};
  };
  const auto key = [&](std::size_t h, std::size_t w) {
    const auto [sh, sw] = shifted(h, w);
    return std::tuple{sh / M, sw / M, regions[sh * Np + sw]};
  };

  ImpulseReport report;
  report.min_self_response = std::numeric_limits<double>::infinity();
  const Tensor zeros = Tensor(Shape{1, Np, Np, 2});
  const auto heads = [&](const Tensor& map) {
    return swinrmt::detail::split_heads(window_partition(cyclic_shift(map, s), M), 1);
  };
  for (std::size_t ih = 0; ih < n; ++ih)
    for (std::size_t iw = 0; iw < n; ++iw) {
      Tensor v(Shape{1, Np, Np, 2});
      v.mutable_data()[(ih * Np + iw) * 2] = 1.0;
      v.mutable_data()[(ih * Np + iw) * 2 + 1] = 1.0;
      const Tensor qk = heads(zeros);
      Tensor o = dmsa_heads(qk, qk, heads(v), cfg, params, masks);
      o = cyclic_unshift(window_reverse(o, M, Np, Np), s);
      ++report.impulses;
      for (std::size_t h = 0; h < n; ++h)
        for (std::size_t w = 0; w < n; ++w) {
          const double mag = std::abs(o.data()[(h * Np + w) * 2]) + std::abs(o.data()[(h * Np + w) * 2 + 1]);
          if (h == ih && w == iw) report.min_self_response = std::min(report.min_self_response, mag);
          if (key(h, w) != key(ih, iw)) report.max_leak = std::max(report.max_leak, mag);
        }
    }
  return report;
}

inline Outcome criterion_shift_mask_isolation() {
  Outcome out;
  std::ostringstream os;
  for (const auto& [n, M, s] : {std::tuple<std::size_t, std::size_t, std::size_t>{4, 2, 1}, {8, 4, 2}}) {
    for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
      const ImpulseReport r = impulse_propagation(v, n, M, s);
      if (r.max_leak != 0.0 || !(r.min_self_response > 0.0)) {
        out.passed = false;
        out.detail = to_string(v) + " " + std::to_string(n) + "x" + std::to_string(n) + " M=" + std::to_string(M) +
                     " s=" + std::to_string(s) + ": leak " + detail::fmt(r.max_leak) + ", self response " +
                     detail::fmt(r.min_self_response);
        return out;
      }
    }
    os << n << "x" << n << "/M=" << M << "/s=" << s << " ";
  }
  out.detail = os.str() + "zero leakage, all variants";
  return out;
}

inline Outcome criterion_regime_reproduction() {
  Outcome out;
  ModelConfig c;
  const RegimeReport r224 = regime_report(c, 224);
  const RegimeReport r32 = regime_report(c, 32);
  const std::vector<bool> want224{false, false, false, true}, want32{false, true, true, true};
  std::ostringstream os;
  for (std::size_t s = 0; s < kNumStages; ++s) {
    if (r224.stages[s].is_global != want224[s] || r32.stages[s].is_global != want32[s]) out.passed = false;
    os << (s ? " " : "") << r224.stages[s].height << (r224.stages[s].is_global ? "G" : "w");
  }
  os << " | ";
  for (std::size_t s = 0; s < kNumStages; ++s)
    os << (s ? " " : "") << r32.stages[s].height << (r32.stages[s].is_global ? "G" : "w");
  out.detail = "224: " + os.str();
  return out;
}

inline Outcome criterion_param_ordering() {
  Outcome out;
  ModelConfig c;
  c.variant = Variant::Swat;
  const std::size_t swat = count_params(c);
  c.variant = Variant::Retention;
  const std::size_t retention = count_params(c);
  c.variant = Variant::Baseline;
  const std::size_t baseline = count_params(c);
  out.passed = swat > retention && retention > baseline;
  out.detail = "swat " + std::to_string(swat) + " > retention " + std::to_string(retention) + " > baseline " +
               std::to_string(baseline);
  return out;
}

struct ToyTrainingOutcome {
  Outcome outcome;
  std::vector<std::pair<Variant, std::vector<MetricRow>>> logs;
};

/// All three variants at the documented defaults, each run twice with the same seed.
inline ToyTrainingOutcome criterion_toy_training(std::uint64_t seed = 0, bool rerun = true) {
  ToyTrainingOutcome result;
  std::ostringstream os;
  for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
    TrainOptions opt;
    opt.model = ModelConfig::micro(v, 32, 2);
    opt.seed = seed;
    const TrainResult first = train_toy(opt);
    result.logs.emplace_back(v, first.log);
    os << to_string(v) << " " << detail::fmt(100.0 * first.final_accuracy) << "% ";
    if (first.final_accuracy < 0.95) result.outcome.passed = false;
    if (rerun) {
      const TrainResult second = train_toy(opt);
      if (second.log != first.log) {
        result.outcome.passed = false;
        os << "(rerun log differs) ";
      }
    }
  }
  os << "(threshold 95%)";
  if (rerun && result.outcome.passed) os << ", same-seed reruns identical";
  result.outcome.detail = os.str();
  return result;
}

inline Outcome criterion_rope_isometry(std::size_t seeds = 10) {
  NoGradGuard guard;
  Outcome out;
  double worst_norm = 0.0, worst_inverse = 0.0;
  for (std::size_t i = 0; i < seeds; ++i) {
    Rng rng(4000 + i);
    const std::size_t L = 1 + rng.index(8), d = 2 * (1 + rng.index(4));
    const Tensor x = uniform_tensor(Shape{2, L, d}, rng, -2.0, 2.0);
    std::vector<std::int64_t> pos(L), neg(L);
    for (std::size_t p = 0; p < L; ++p) {
      pos[p] = static_cast<std::int64_t>(rng.index(100)) - 50;
      neg[p] = -pos[p];
    }
    const auto theta = rope_frequencies(d);
    const Tensor y = rope_apply(x, theta, pos);
    for (std::size_t j = 0; j < x.numel(); j += 2) {
      const double before = std::hypot(x.data()[j], x.data()[j + 1]);
      const double after = std::hypot(y.data()[j], y.data()[j + 1]);
      worst_norm = std::max(worst_norm, std::abs(before - after));
    }
    worst_inverse = std::max(worst_inverse, max_abs_diff(rope_apply(y, theta, neg), x));
  }
  out.passed = worst_norm <= 1e-12 && worst_inverse <= 1e-12;
  out.detail = "pair norm drift " + detail::fmt(worst_norm) + ", inverse error " + detail::fmt(worst_inverse);
  return out;
}

/// save -> load -> forward reproduces the pre-save logits bit for bit.
inline Outcome criterion_checkpoint_roundtrip(const std::filesystem::path& dir) {
  NoGradGuard guard;
  Outcome out;
  std::filesystem::create_directories(dir);
  std::size_t index = 0;
  for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
    ModelConfig c = ModelConfig::micro(v, 16 + 16 * index, 3);
    Model model = Model::init(c, 77 + index);
    // move the BN statistics off their defaults so buffers are exercised too
    model.set_training(true);
    Rng rng(5000 + index);
    model.forward(uniform_tensor(Shape{2, 3, c.img_size, c.img_size}, rng, -1.0, 1.0));
    model.set_training(false);
    const Tensor images = uniform_tensor(Shape{2, 3, c.img_size, c.img_size}, rng, -1.0, 1.0);
    const Tensor before = model.forward(images);
    const auto prefix = dir / ("roundtrip_" + to_string(v));
    save_checkpoint(prefix, model);
    Model loaded = load_checkpoint(prefix);
    const Tensor after = loaded.forward(images);
    if (!bit_identical(before, after)) {
      out.passed = false;
      out.detail = to_string(v) + ": reloaded logits differ";
      return out;
    }
    ++index;
  }
  out.detail = "3 configs bit-identical";
  return out;
}

}  // namespace swinrmt::verify
