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

// Per-module verification suites behind `swinrmt verify --scope <name>`.
// Each suite runs its worked examples, its property checks and the gradient
// checks of the ops it owns.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "swinrmt/verify/criteria.hpp"
#include "swinrmt/verify/grad_suite.hpp"

namespace swinrmt::verify {

struct CheckResult {
  std::string scope;
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

class Suite {
 public:
  explicit Suite(std::string scope) : scope_(std::move(scope)) {}

  /// Runs one check; an exception counts as a failure carrying its message.
  void check(const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    results_.push_back({scope_, name, o.passed, o.detail});
  }

  void gradients() {
    for (const GradCheckReport& r : run_gradient_suite(scope_)) {
      std::ostringstream os;
      os << "max rel err " << r.max_rel_error << " over " << r.coordinates << " coords";
      if (r.failing_coordinate) os << "; " << *r.failing_coordinate;
      results_.push_back({scope_, "grad " + r.op, r.passed(), os.str()});
    }
  }

  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  std::string scope_;
  std::vector<CheckResult> results_;
};

inline Outcome within(double err, double tol) { return {err <= tol, "max abs err " + fmt(err)}; }

inline Outcome values_near(const Tensor& t, const std::vector<double>& want, double tol) {
  if (t.numel() != want.size()) return {false, "size " + std::to_string(t.numel())};
  return within(max_abs_diff(t.data(), want), tol);
}

inline Outcome all_near(const Tensor& t, double want, double tol) {
  return values_near(t, std::vector<double>(t.numel(), want), tol);
}

inline std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline Outcome grad_near(const Tensor& t, const std::vector<double>& want, double tol) {
  if (!t.has_grad()) return {false, "no gradient"};
  return within(max_abs_diff(t.grad(), want), tol);
}

/// Row i of [heads, L, L] weights by plain loops: softmax or sigmoid scoring.
inline std::vector<double> pass_1d_loop(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& bias,
                                        const Tensor& decay, std::size_t w_s, bool swat) {
  const std::size_t H = q.size(0), L = q.size(1), d = q.size(2);
  std::vector<double> out(H * L * d, 0.0);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < L; ++i) {
      std::vector<double> w(L);
      for (std::size_t j = 0; j < L; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += q.at({h, i, c}) * k.at({h, j, c});
        w[j] = swat ? 1.0 / (1.0 + std::exp(-(dot + bias.at({h, i, j})))) / static_cast<double>(w_s) * decay.at({h, i, j})
                    : dot / std::sqrt(static_cast<double>(d)) + bias.at({h, i, j});
      }
      if (!swat) w = softmax_loop(w);
      for (std::size_t j = 0; j < L; ++j)
        for (std::size_t c = 0; c < d; ++c) out[(h * L + i) * d + c] += w[j] * v.at({h, j, c});
    }
  return out;
}

inline Outcome fails_with_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return {true, std::string("rejected: ") + e.what()};
  }
  return {false, "accepted invalid input"};
}

}  // namespace detail

inline std::vector<CheckResult> tensor_engine_suite() {
  detail::Suite s("tensor-engine");
  using detail::values_near;
  s.check("matmul identity", [] {
    return values_near(matmul(Tensor(Shape{2, 2}, {1, 0, 0, 1}), Tensor(Shape{2, 2}, {2, 3, 4, 5})), {2, 3, 4, 5}, 0.0);
  });
  s.check("matmul hand arithmetic",
          [] { return values_near(matmul(Tensor(Shape{1, 2}, {1, 2}), Tensor(Shape{2, 1}, {3, 4})), {11}, 0.0); });
  s.check("matmul loop oracle", [] {
    Rng rng(7);
    const Tensor a = uniform_tensor(Shape{3, 4}, rng, -10, 10), b = uniform_tensor(Shape{4, 2}, rng, -10, 10);
    return values_near(matmul(a, b), matmul_loop(detail::values(a), detail::values(b), 3, 4, 2), 1e-12);
  });
  s.check("softmax symmetric input", [] { return values_near(softmax_lastdim(Tensor(Shape{3})), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15); });
  s.check("softmax large logits", [] { return values_near(softmax_lastdim(Tensor(Shape{2}, {1000, 0})), {1, 0}, 1e-12); });
  s.check("softmax extended-precision oracle", [] {
    Rng rng(3);
    const Tensor x = uniform_tensor(Shape{5}, rng, -2, 2);
    return values_near(softmax_lastdim(x), softmax_loop(detail::values(x)), 1e-12);
  });
  s.check("softmax rows sum to one at magnitude 1e3", [] {
    Rng rng(31);
    const Tensor x = uniform_tensor(Shape{64, 9}, rng, -1e3, 1e3);
    return detail::all_near(sum_dim(softmax_lastdim(x), 1), 1.0, 1e-12);
  });
  s.check("sigmoid(0), silu(0)", [] { return values_near(add(sigmoid(Tensor(Shape{1})), silu(Tensor(Shape{1}))), {0.5}, 0.0); });
  s.check("layer_norm of a constant row", [] {
    return detail::all_near(layer_norm(Tensor(Shape{1, 6}, 3.5), Tensor::ones(Shape{6}), Tensor::zeros(Shape{6})), 0.0, 1e-3);
  });
  s.check("conv2d 1x1 identity", [] {
    Rng rng(1);
    const Tensor x = uniform_tensor(Shape{1, 1, 4, 4}, rng, -1, 1);
    return values_near(conv2d(x, Tensor::ones(Shape{1, 1, 1, 1}), Tensor{}), detail::values(x), 0.0);
  });
  s.check("conv2d of a delta", [] {
    Tensor x(Shape{1, 1, 5, 5});
    x.mutable_data()[2 * 5 + 2] = 1.0;
    std::vector<double> want(25, 0.0);
    for (std::size_t y = 1; y <= 3; ++y)
      for (std::size_t c = 1; c <= 3; ++c) want[y * 5 + c] = 1.0;
    return values_near(conv2d(x, Tensor::ones(Shape{1, 1, 3, 3}), Tensor{}, {.stride = 1, .padding = 1, .groups = 1}),
                       want, 0.0);
  });
  s.check("conv2d loop oracle", [] {
    Rng rng(11);
    const Tensor x = uniform_tensor(Shape{1, 2, 6, 6}, rng, -10, 10), w = uniform_tensor(Shape{3, 2, 3, 3}, rng, -10, 10);
    const Tensor b = uniform_tensor(Shape{3}, rng, -10, 10);
    const Conv2dOptions opt{.stride = 2, .padding = 1, .groups = 1};
    return values_near(conv2d(x, w, b, opt),
                       conv2d_loop(detail::values(x), detail::values(w), detail::values(b), 1, 2, 6, 6, 3, 3, opt), 1e-12);
  });
  s.check("conv2d depthwise loop oracle", [] {
    Rng rng(12);
    const Tensor x = uniform_tensor(Shape{2, 4, 5, 5}, rng, -10, 10), w = uniform_tensor(Shape{4, 1, 5, 5}, rng, -10, 10);
    const Tensor b = uniform_tensor(Shape{4}, rng, -10, 10);
    const Conv2dOptions opt{.stride = 1, .padding = 2, .groups = 4};
    return values_near(conv2d(x, w, b, opt),
                       conv2d_loop(detail::values(x), detail::values(w), detail::values(b), 2, 4, 5, 5, 4, 5, opt), 1e-12);
  });
  s.check("conv2d rejects bad groups", [] {
    return detail::fails_with_error([] { conv2d(Tensor(Shape{1, 3, 4, 4}), Tensor(Shape{4, 1, 3, 3}), Tensor{}, {.groups = 2}); });
  });
  s.check("matmul rejects mismatched inner extents",
          [] { return detail::fails_with_error([] { matmul(Tensor(Shape{2, 3}), Tensor(Shape{2, 3})); }); });
  s.check("backward of sum is ones", [] {
    Tensor x = make_param(Tensor(Shape{2, 3}, 0.7));
    sum(x).backward();
    return detail::grad_near(x, std::vector<double>(6, 1.0), 0.0);
  });
  s.check("backward of half sum of squares is x", [] {
    Rng rng(2);
    Tensor x = make_param(uniform_tensor(Shape{3, 2}, rng, -2, 2));
    scale(sum(mul(x, x)), 0.5).backward();
    return detail::grad_near(x, detail::values(x), 1e-15);
  });
  s.check("backward of sum(softmax) vanishes", [] {
    Rng rng(4);
    Tensor x = make_param(uniform_tensor(Shape{3, 4}, rng, -2, 2));
    sum(softmax_lastdim(x)).backward();
    return detail::grad_near(x, std::vector<double>(12, 0.0), 1e-15);
  });
  s.check("second backward is an error", [] {
    Tensor x = make_param(Tensor(Shape{2}, 1.0));
    const Tensor loss = sum(mul(x, x));
    loss.backward();
    return detail::fails_with_error([&] { loss.backward(); });
  });
  s.check("backward of a non-scalar is an error", [] {
    Tensor x = make_param(Tensor(Shape{2}, 1.0));
    return detail::fails_with_error([&] { mul(x, x).backward(); });
  });
  s.gradients();
  return s.take();
}

inline std::vector<CheckResult> positional_suite() {
  detail::Suite s("positional");
  using detail::values_near;
  s.check("additive decay, gamma 0.5", [] {
    const Tensor m = decay_mask_additive(DecaySpec::fixed({0.5}), 3);
    return values_near(slice_lastdim(reshape(m, Shape{3, 3}), 0, 3), {0, -std::log(2.0), -2 * std::log(2.0), -std::log(2.0), 0,
                                                                         -std::log(2.0), -2 * std::log(2.0), -std::log(2.0), 0},
                       1e-15);
  });
  s.check("additive decay at the upper bound", [] {
    DecaySpec spec = DecaySpec::learnable(1);
    spec.param().mutable_data()[0] = 60.0;
    const Tensor m = decay_mask_additive(spec, 9);
    const auto [lo, hi] = std::minmax_element(m.data().begin(), m.data().end());
    return Outcome{*lo >= -9 * 0.001001 && *hi <= 0.0, "range [" + detail::fmt(*lo) + ", " + detail::fmt(*hi) + "]"};
  });
  s.check("additive decay, L = 1", [] { return values_near(decay_mask_additive(DecaySpec::learnable(2), 1), {0, 0}, 0.0); });
  s.check("multiplicative decay, gamma 0.5", [] {
    return values_near(slice_lastdim(reshape(decay_mask_multiplicative(DecaySpec::fixed({0.5}), 3), Shape{3, 3}), 0, 3),
                       {1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1}, 1e-15);
  });
  s.check("multiplicative decay leaks row mass", [] {
    const Tensor w = post_softmax_decay_weights(Tensor(Shape{1, 3, 2}), Tensor(Shape{1, 3, 2}),
                                                decay_mask_multiplicative(DecaySpec::fixed({0.5}), 3));
    return values_near(slice_lastdim(row_mass_probe(w), 0, 1), {1.75 / 3.0}, 1e-15);
  });
  s.check("multiplicative decay, gamma 0.999", [] {
    return values_near(decay_mask_multiplicative(DecaySpec::fixed({0.999}), 2), {1, 0.999, 0.999, 1}, 1e-15);
  });
  s.check("both placements share one generator", [] {
    Rng rng(8);
    DecaySpec spec = DecaySpec::learnable(3);
    for (double& u : spec.param().mutable_data()) u = rng.uniform(-4, 4);
    return values_near(exp(decay_mask_additive(spec, 7)), detail::values(decay_mask_multiplicative(spec, 7)), 1e-12);
  });
  s.check("additive decay symmetric and translation invariant", [] {
    Rng rng(9);
    DecaySpec spec = DecaySpec::learnable(2);
    for (double& u : spec.param().mutable_data()) u = rng.uniform(-4, 4);
    const std::size_t L = 6;
    const Tensor m = decay_mask_additive(spec, L);
    for (std::size_t h = 0; h < 2; ++h)
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
          const std::size_t dist = i > j ? i - j : j - i;
          if (m.at({h, i, j}) != m.at({h, j, i}) || m.at({h, i, j}) != m.at({h, 0, dist}) || m.at({h, i, j}) > 0.0)
            return Outcome{false, "entry (" + std::to_string(i) + "," + std::to_string(j) + ")"};
        }
    return Outcome{true, "2 heads, L = 6"};
  });
  s.check("gamma stays inside (0.5, 0.999)", [] {
    DecaySpec spec = DecaySpec::learnable(4);
    const double raw[] = {-800.0, -3.0, 3.0, 800.0};
    for (std::size_t i = 0; i < 4; ++i) spec.param().mutable_data()[i] = raw[i];
    const auto g = spec.gammas();
    const bool ok = std::all_of(g.begin(), g.end(), [](double x) { return x >= kGammaMin && x <= kGammaMax; });
    return Outcome{ok, "gammas " + detail::fmt(g.front()) + " .. " + detail::fmt(g.back())};
  });
  s.check("balanced slopes for 4 heads", [] {
    const auto slopes = balanced_alibi_slopes(4);
    return values_near(Tensor(Shape{4}, slopes), {-0.5, -0.25, 0.5, 0.25}, 0.0);
  });
  s.check("balanced slopes sum to zero, odd head gets 0", [] {
    for (std::size_t n : {2, 4, 6, 8, 16}) {
      const auto sl = balanced_alibi_slopes(n);
      double total = 0.0;
      for (double v : sl) total += v;
      if (total != 0.0) return Outcome{false, std::to_string(n) + " heads sum " + detail::fmt(total)};
    }
    const auto odd = balanced_alibi_slopes(5);
    return Outcome{std::count(odd.begin(), odd.end(), 0.0) == 1, "5 heads: one zero slope"};
  });
  s.check("alibi row for slope -0.5", [] {
    const Tensor b = alibi_bias(Tensor(Shape{1}, {-0.5}), 3);
    return values_near(slice_lastdim(reshape(b, Shape{3, 3}), 0, 3), {0, -0.5, -1, -0.5, 0, -0.5, -1, -0.5, 0}, 0.0);
  });
  s.check("alibi rows monotone with the slope sign", [] {
    const auto slopes = balanced_alibi_slopes(4);
    const Tensor b = alibi_bias(Tensor(Shape{4}, slopes), 6);
    for (std::size_t h = 0; h < 4; ++h)
      for (std::size_t j = 1; j < 6; ++j) {
        const double step = b.at({h, 0, j}) - b.at({h, 0, j - 1});
        if (b.at({h, j, j}) != 0.0 || !(step * slopes[h] > 0.0)) return Outcome{false, "head " + std::to_string(h)};
      }
    return Outcome{true, "4 heads, L = 6"};
  });
  s.check("rope at position 0 is identity", [] {
    Rng rng(5);
    const Tensor x = uniform_tensor(Shape{1, 4}, rng, -2, 2);
    return values_near(rope_apply(x, rope_frequencies(4), {0}), detail::values(x), 0.0);
  });
  s.check("inverse-frequency schedule, d = 4",
          [] { return values_near(Tensor(Shape{2}, rope_frequencies(4)), {1.0, 0.01}, 1e-15); });
  s.check("rope rejects odd head dimension", [] { return detail::fails_with_error([] { rope_frequencies(5); }); });
  s.check("rope isometry and inverse", [] { return criterion_rope_isometry(10); });
  s.check("flattened positions", [] {
    const auto p = flatten_positions(2, 3);
    const bool ok = p == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5} && flatten_positions(1, 1) == std::vector<std::int64_t>{0} &&
                    p[1 * 3 + 2] == 5;
    return Outcome{ok, "2x3 -> 0..5, (1, 2) -> 5"};
  });
  s.gradients();
  return s.take();
}

inline std::vector<CheckResult> attention_suite() {
  detail::Suite s("attention");
  using detail::values_near;
  s.check("retention, zero bias and q: mean of v", [] {
    Rng rng(1);
    const Tensor v = uniform_tensor(Shape{1, 4, 2}, rng, -2, 2);
    const Tensor out = retention_pass_1d(Tensor(Shape{1, 4, 2}), uniform_tensor(Shape{1, 4, 2}, rng, -2, 2), v, Tensor(Shape{1, 4, 4}));
    std::vector<double> want(8, 0.0);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 2; ++c) want[i * 2 + c] = (v.at({0, 0, c}) + v.at({0, 1, c}) + v.at({0, 2, c}) + v.at({0, 3, c})) / 4.0;
    return values_near(out, want, 1e-15);
  });
  s.check("retention at the lowest gamma favours the diagonal", [] {
    Rng rng(2);
    DecaySpec spec = DecaySpec::learnable(1);
    spec.param().mutable_data()[0] = -800.0;
    const Tensor w = retention_weights(Tensor(Shape{1, 8, 2}), uniform_tensor(Shape{1, 8, 2}, rng, -2, 2), decay_mask_additive(spec, 8));
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        if (j != i && w.at({0, i, i}) < w.at({0, i, j})) return Outcome{false, "row " + std::to_string(i)};
    return Outcome{true, "diagonal dominates every row"};
  });
  s.check("retention loop oracle", [] {
    Rng rng(42);
    DecaySpec spec = DecaySpec::learnable(2);
    const Tensor q = uniform_tensor(Shape{2, 4, 4}, rng, -2, 2), k = uniform_tensor(Shape{2, 4, 4}, rng, -2, 2);
    const Tensor v = uniform_tensor(Shape{2, 4, 4}, rng, -2, 2), bias = decay_mask_additive(spec, 4);
    return values_near(retention_pass_1d(q, k, v, bias), detail::pass_1d_loop(q, k, v, bias, bias, 1, false), 1e-10);
  });
  s.check("swat scores at zero logits", [] {
    const std::size_t w_s = 7;
    return detail::all_near(swat_weights(Tensor(Shape{1, 3, 2}), Tensor(Shape{1, 3, 2}), Tensor(Shape{1, 3, 3}),
                                         Tensor::ones(Shape{1, 3, 3}), w_s),
                            0.5 / 7.0, 1e-15);
  });
  s.check("swat with zero values", [] {
    Rng rng(3);
    const Tensor q = uniform_tensor(Shape{2, 3, 2}, rng, -2, 2);
    return detail::all_near(swat_pass_1d(q, q, Tensor(Shape{2, 3, 2}), Tensor(Shape{2, 3, 3}), Tensor::ones(Shape{2, 3, 3}), 4), 0.0, 0.0);
  });
  s.check("swat loop oracle", [] {
    Rng rng(7);
    DecaySpec spec = DecaySpec::learnable(2);
    const Tensor q = uniform_tensor(Shape{2, 4, 4}, rng, -2, 2), k = uniform_tensor(Shape{2, 4, 4}, rng, -2, 2);
    const Tensor v = uniform_tensor(Shape{2, 4, 4}, rng, -2, 2);
    const Tensor alibi = alibi_bias(Tensor(Shape{2}, balanced_alibi_slopes(2)), 4), decay = decay_mask_multiplicative(spec, 4);
    return values_near(swat_pass_1d(q, k, v, alibi, decay, 5), detail::pass_1d_loop(q, k, v, alibi, decay, 5, true), 1e-10);
  });
  s.check("swat scores bounded by decay / w_s", [] {
    Rng rng(6);
    DecaySpec spec = DecaySpec::learnable(3);
    for (double& u : spec.param().mutable_data()) u = rng.uniform(-3, 3);
    const Tensor decay = decay_mask_multiplicative(spec, 6);
    const Tensor a = swat_weights(uniform_tensor(Shape{3, 6, 4}, rng, -2, 2), uniform_tensor(Shape{3, 6, 4}, rng, -2, 2),
                                  alibi_bias(Tensor(Shape{3}, balanced_alibi_slopes(3)), 6), decay, 4);
    for (std::size_t i = 0; i < a.numel(); ++i)
      if (!(a.data()[i] > 0.0 && a.data()[i] <= decay.data()[i] / 4.0)) return Outcome{false, "entry " + std::to_string(i)};
    return Outcome{true, "0 < A <= gamma^|i-j| / w_s"};
  });
  s.check("single-token window", [] {
    Rng rng(4);
    const AttentionConfig cfg = AttentionConfig::for_variant(Variant::Retention, 4, 2, 7);
    const AttentionParams p = AttentionParams::init(cfg, rng);
    const Tensor x = uniform_tensor(Shape{3, 1, 1, 4}, rng, -2, 2);
    return values_near(dmsa_decomposed(x, cfg, p), detail::values(p.v(x)), 1e-15);
  });
  s.check("swiglu with zero gate half", [] {
    Tensor v(Shape{2, 6});
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t c = 0; c < 3; ++c) v.mutable_data()[i * 6 + c] = 1.0 + static_cast<double>(c);
    return detail::all_near(swiglu_value(v), 0.0, 0.0);
  });
  // SiLU tends to the identity for large inputs, so V2 = 20 gives V1 * V2
  s.check("swiglu with saturated gate half", [] {
    Rng rng(5);
    Tensor v = uniform_tensor(Shape{3, 4}, rng, 0.5, 2);
    std::vector<double> v1;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < 4; ++c) {
        if (c < 2) v1.push_back(20.0 * v.at({i, c}));
        else v.mutable_data()[i * 4 + c] = 20.0;
      }
    const Tensor out = swiglu_value(v);
    double worst = 0.0;
    for (std::size_t i = 0; i < v1.size(); ++i) worst = std::max(worst, std::abs(out.data()[i] - v1[i]) / std::abs(v1[i]));
    return Outcome{worst <= 1e-8, "max rel err " + detail::fmt(worst)};
  });
  s.check("swiglu elementwise oracle", [] {
    Rng rng(5);
    const Tensor v = uniform_tensor(Shape{2, 3, 6}, rng, -2, 2);
    std::vector<double> want;
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 3; ++c) {
        const double g = v.data()[r * 6 + 3 + c];
        want.push_back(v.data()[r * 6 + c] * g / (1.0 + std::exp(-g)));
      }
    return values_near(swiglu_value(v), want, 1e-12);
  });
  s.check("swiglu rejects an odd width", [] { return detail::fails_with_error([] { swiglu_value(Tensor(Shape{2, 3})); }); });
  s.check("lce with zero weights", [] {
    Rng rng(9);
    Conv2d dw = Conv2d::init(2, 2, 5, {.stride = 1, .padding = 2, .groups = 2}, rng);
    Conv2d pw = Conv2d::init(2, 2, 1, {}, rng);
    for (Tensor* t : {&dw.weight, &dw.bias, &pw.weight, &pw.bias}) std::fill(t->mutable_data().begin(), t->mutable_data().end(), 0.0);
    return detail::all_near(lce(uniform_tensor(Shape{1, 4, 4, 2}, rng, -2, 2), dw, pw), 0.0, 0.0);
  });
  s.check("lce with delta kernels is identity", [] {
    Rng rng(9);
    Conv2d dw{Tensor(Shape{2, 1, 5, 5}), Tensor(Shape{2}), {.stride = 1, .padding = 2, .groups = 2}};
    Conv2d pw{Tensor(Shape{2, 2, 1, 1}, {1, 0, 0, 1}), Tensor(Shape{2}), {}};
    dw.weight.mutable_data()[12] = dw.weight.mutable_data()[25 + 12] = 1.0;
    const Tensor v = uniform_tensor(Shape{1, 4, 4, 2}, rng, -2, 2);
    return values_near(lce(v, dw, pw), detail::values(v), 0.0);
  });
  s.check("lce loop oracle", [] {
    Rng rng(9);
    const Conv2d dw = Conv2d::init(2, 2, 5, {.stride = 1, .padding = 2, .groups = 2}, rng);
    const Conv2d pw = Conv2d::init(2, 2, 1, {}, rng);
    const Tensor v = uniform_tensor(Shape{1, 4, 4, 2}, rng, -2, 2);
    const auto nchw = [](const Tensor& t) { return detail::values(to_nchw(t)); };
    const auto mid = conv2d_loop(nchw(v), detail::values(dw.weight), detail::values(dw.bias), 1, 2, 4, 4, 2, 5, dw.options);
    const auto out = conv2d_loop(mid, detail::values(pw.weight), detail::values(pw.bias), 1, 2, 4, 4, 2, 1, pw.options);
    return values_near(lce(v, dw, pw), detail::values(to_nhwc(Tensor(Shape{1, 2, 4, 4}, out))), 1e-12);
  });
  s.check("g1 gate saturated open", [] {
    Rng rng(21);
    Linear gate = Linear::init(3, 3, rng);
    std::fill(gate.bias.mutable_data().begin(), gate.bias.mutable_data().end(), 40.0);
    const Tensor o = uniform_tensor(Shape{2, 3}, rng, 0.5, 2);
    return values_near(g1_gate(o, uniform_tensor(Shape{2, 3}, rng, -2, 2), gate), detail::values(o), 1e-8);
  });
  s.check("g1 gate at zero weights halves o", [] {
    Rng rng(21);
    const Linear gate{Tensor(Shape{3, 3}), Tensor{}};
    const Tensor o = uniform_tensor(Shape{2, 3}, rng, -2, 2);
    return values_near(g1_gate(o, uniform_tensor(Shape{2, 3}, rng, -2, 2), gate), detail::values(scale(o, 0.5)), 0.0);
  });
  s.check("g1 gate elementwise oracle", [] {
    Rng rng(21);
    const Linear gate = Linear::init(3, 3, rng);
    const Tensor o = uniform_tensor(Shape{2, 3}, rng, -2, 2), x = uniform_tensor(Shape{2, 3}, rng, -2, 2);
    std::vector<double> want;
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 3; ++c) {
        double g = gate.bias.data()[c];
        for (std::size_t i = 0; i < 3; ++i) g += x.at({r, i}) * gate.weight.at({i, c});
        want.push_back(o.at({r, c}) / (1.0 + std::exp(-g)));
      }
    return values_near(g1_gate(o, x, gate), want, 1e-12);
  });
  s.check("g1 gate is monotone in its logit", [] {
    Rng rng(22);
    const Tensor o = uniform_tensor(Shape{1, 3}, rng, 0.1, 2);
    double prev = 0.0;
    for (double b = -6.0; b <= 6.0; b += 0.5) {
      const Linear gate{Tensor(Shape{3, 3}), Tensor(Shape{3}, b)};
      const double y = g1_gate(o, Tensor(Shape{1, 3}), gate).data()[0];
      if (y < prev) return Outcome{false, "decreased at bias " + detail::fmt(b)};
      prev = y;
    }
    return Outcome{true, "non-decreasing over bias -6..6"};
  });
  s.check("g1 gate only with retention", [] {
    return detail::fails_with_error([] {
      AttentionConfig cfg = AttentionConfig::for_variant(Variant::Swat, 4, 2, 7);
      cfg.use_g1 = true;
      cfg.validate();
    });
  });
  s.check("baseline equals retention with the gate held open", [] {
    Rng rng(30);
    const AttentionConfig ret = AttentionConfig::for_variant(Variant::Retention, 4, 2, 3);
    AttentionParams p = AttentionParams::init(ret, rng);
    std::fill(p.gate.weight.mutable_data().begin(), p.gate.weight.mutable_data().end(), 0.0);
    std::fill(p.gate.bias.mutable_data().begin(), p.gate.bias.mutable_data().end(), 60.0);
    const Tensor x = uniform_tensor(Shape{2, 3, 3, 4}, rng, -2, 2);
    const AttentionConfig base = AttentionConfig::for_variant(Variant::Baseline, 4, 2, 3);
    return detail::within(max_abs_diff(attention_block_output(x, ret, p), attention_block_output(x, base, p)), 1e-10);
  });
  s.check("block output loop oracle, all variants", [] {
    double worst = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      detail::AttentionCase c = detail::random_attention_case(i, 600 + i);
      worst = std::max(worst, max_abs_diff(attention_block_output(c.x, c.cfg, c.params, c.masks),
                                           oracle_attention_block(c.x, c.cfg, c.params, c.masks)));
    }
    return detail::within(worst, 1e-10);
  });
  s.check("decayed softmax rows are stochastic", [] { return criterion_row_stochasticity(20); });
  s.check("decomposed attention matches loop oracle", [] { return criterion_oracle_equivalence(20); });
  s.gradients();
  return s.take();
}

inline std::vector<CheckResult> windowing_suite() {
  detail::Suite s("windowing");
  s.check("adaptive window laws", [] { return criterion_adaptive_window_laws(); });
  s.check("adaptive window rejects shift >= window", [] { return detail::fails_with_error([] { adaptive_window(4, 4, 8, 8); }); });
  s.check("single window is a reshape", [] {
    Rng rng(1);
    const Tensor x = uniform_tensor(Shape{2, 3, 3, 2}, rng, -2, 2);
    return detail::values_near(window_partition(x, 3), detail::values(x), 0.0);
  });
  s.check("4x4 map, window 2: window 0 contents", [] {
    Tensor x(Shape{1, 4, 4, 1});
    for (std::size_t i = 0; i < 16; ++i) x.mutable_data()[i] = static_cast<double>(i);
    const Tensor w = window_partition(x, 2);
    return Outcome{w.size(0) == 4 && w.data()[0] == 0 && w.data()[1] == 1 && w.data()[2] == 4 && w.data()[3] == 5,
                   std::to_string(w.size(0)) + " windows"};
  });
  s.check("partition / reverse round trip up to 16x16", [] {
    Rng rng(2);
    for (std::size_t H = 1; H <= 16; ++H)
      for (std::size_t W = 1; W <= 16; ++W)
        for (std::size_t M = 1; M <= std::min(H, W); ++M) {
          const WindowLayout l = make_layout(M, 0, H, W);
          const Tensor x = uniform_tensor(Shape{1, H, W, 1}, rng, -2, 2);
          const Tensor back = crop_hw(window_reverse(window_partition(pad_hw(x, l.pad_h, l.pad_w), M), M, l.padded_h(), l.padded_w()), H, W);
          if (!bit_identical(back, x)) return Outcome{false, std::to_string(H) + "x" + std::to_string(W) + " M=" + std::to_string(M)};
        }
    return Outcome{true, "exact for every extent and window"};
  });
  s.check("5x5 map, window 2: 9 windows", [] {
    const WindowLayout l = make_layout(2, 0, 5, 5);
    return Outcome{l.num_windows() == 9 && l.padded_h() == 6, std::to_string(l.num_windows()) + " windows"};
  });
  s.check("no shift, no mask", [] {
    const WindowLayout l = make_layout(4, 0, 8, 8);
    return Outcome{!l.shift_mask && decompose_mask_1d(l).empty(), "mask absent"};
  });
  s.check("single-window layout, no mask", [] {
    const WindowLayout l = make_layout(7, 3, 2, 2);
    return Outcome{l.num_windows() == 1 && l.eff_shift == 1 && l.is_global(), "2x2 map, M=7"};
  });
  s.check("shift mask against wrap-around oracle", [] {
    for (const auto& [n, M, sh] : {std::tuple<std::size_t, std::size_t, std::size_t>{4, 2, 1}, {8, 4, 2}, {6, 3, 1}}) {
      const WindowLayout l = make_layout(M, sh, n, n);
      const Tensor mask = *l.shift_mask;
      const std::size_t T = M * M, nw = n / M;
      // a token of the shifted frame came across the border iff coord + s wrapped
      const auto wrapped = [&](std::size_t c) { return c + sh >= n; };
      for (std::size_t w = 0; w < nw * nw; ++w)
        for (std::size_t a = 0; a < T; ++a)
          for (std::size_t b = 0; b < T; ++b) {
            const std::size_t ha = (w / nw) * M + a / M, wa = (w % nw) * M + a % M;
            const std::size_t hb = (w / nw) * M + b / M, wb = (w % nw) * M + b % M;
            const bool blocked = wrapped(ha) != wrapped(hb) || wrapped(wa) != wrapped(wb);
            if (blocked != (mask.at({w, a, b}) < 0.0))
              return Outcome{false, std::to_string(n) + "x" + std::to_string(n) + " window " + std::to_string(w)};
          }
    }
    return Outcome{true, "4x4/2/1, 8x8/4/2, 6x6/3/1"};
  });
  s.check("unshift inverts shift", [] {
    Rng rng(3);
    const Tensor x = uniform_tensor(Shape{2, 5, 5, 3}, rng, -2, 2);
    return Outcome{bit_identical(cyclic_unshift(cyclic_shift(x, 2), 2), x) && bit_identical(cyclic_shift(x, 0), x), "exact"};
  });
  s.check("shifted windows do not leak across regions", [] { return criterion_shift_mask_isolation(); });
  s.check("single window equals full-map attention", [] { return criterion_bypass_equivalence(10); });
  s.gradients();
  return s.take();
}

inline std::vector<CheckResult> model_suite() {
  detail::Suite s("model");
  s.check("stem output shape", [] {
    NoGradGuard guard;
    Rng rng(1);
    PatchEmbed stem = PatchEmbed::init(3, 8, rng);
    const Tensor y = stem(uniform_tensor(Shape{1, 3, 32, 32}, rng, -1, 1), false);
    return Outcome{y.shape() == Shape{1, 8, 8, 8}, shape_str(y.shape())};
  });
  s.check("stem at zero weights", [] {
    NoGradGuard guard;
    Rng rng(1);
    PatchEmbed stem = PatchEmbed::init(3, 8, rng);
    for (Conv2d& c : stem.conv) std::fill(c.weight.mutable_data().begin(), c.weight.mutable_data().end(), 0.0);
    return detail::all_near(stem(uniform_tensor(Shape{2, 3, 16, 16}, rng, -1, 1), false), 0.0, 0.0);
  });
  s.check("stem rejects indivisible input", [] {
    Rng rng(1);
    PatchEmbed stem = PatchEmbed::init(3, 8, rng);
    return detail::fails_with_error([&] { stem(Tensor(Shape{1, 3, 18, 18}), false); });
  });
  s.check("patch merge shapes", [] {
    NoGradGuard guard;
    Rng rng(2);
    PatchMerge merge = PatchMerge::init(4, 8, rng);
    const Shape a = merge(Tensor(Shape{1, 2, 2, 4}), false).shape(), b = merge(Tensor(Shape{1, 3, 3, 4}), false).shape();
    return Outcome{a == Shape{1, 1, 1, 8} && b == Shape{1, 2, 2, 8}, shape_str(a) + ", " + shape_str(b)};
  });
  s.check("droppath schedule", [] {
    const auto r = droppath_schedule(12, 0.1);
    const bool ok = r.front() == 0.0 && std::abs(r[1] - 0.1 / 11) < 1e-15 && std::abs(r.back() - 0.1) < 1e-15 &&
                    droppath_schedule(1, 0.1) == std::vector<double>{0.0} &&
                    droppath_schedule(5, 0.0) == std::vector<double>(5, 0.0);
    return Outcome{ok, "12 blocks: 0 .. 0.1"};
  });
  s.check("ffn with zero output layer", [] {
    NoGradGuard guard;
    Rng rng(17);
    Ffn ffn = Ffn::init(4, 4, rng);
    for (Tensor* t : {&ffn.fc2.weight, &ffn.fc2.bias}) std::fill(t->mutable_data().begin(), t->mutable_data().end(), 0.0);
    return detail::all_near(ffn(uniform_tensor(Shape{1, 2, 2, 4}, rng, -2, 2)), 0.0, 0.0);
  });
  const auto block_case = [](double layerscale, double drop, bool training) {
    NoGradGuard guard;
    Rng rng(5);
    const Block block = Block::init(AttentionConfig::for_variant(Variant::Retention, 4, 2, 2), 1, drop, layerscale, 2, rng);
    const Tensor x = uniform_tensor(Shape{2, 4, 4, 4}, rng, -2, 2);
    Rng drop_rng(6);
    ForwardContext ctx{training, &drop_rng};
    const Tensor want = add(x, to_nhwc(block.pos(to_nchw(x))));
    return detail::within(max_abs_diff(block_forward(x, block, ctx), want), 0.0);
  };
  s.check("block with zero LayerScale", [&] { return block_case(0.0, 0.0, false); });
  s.check("block with drop rate 1 in training", [&] { return block_case(0.5, 1.0, true); });
  s.check("drop path is identity in eval, 0 or 1/(1-p) in training", [] {
    NoGradGuard guard;
    const Tensor x = Tensor::ones(Shape{64, 3});
    Rng rng(7);
    ForwardContext eval{false, &rng}, train{true, &rng};
    if (!bit_identical(drop_path(x, 0.3, eval), x)) return Outcome{false, "eval changed the input"};
    const Tensor y = drop_path(x, 0.3, train);
    for (double v : y.data())
      if (v != 0.0 && std::abs(v - 1.0 / 0.7) > 1e-15) return Outcome{false, "factor " + detail::fmt(v)};
    return Outcome{true, "64 samples"};
  });
  s.check("logits shape and finiteness", [] {
    NoGradGuard guard;
    for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
      Model m = Model::init(ModelConfig::micro(v, 16, 5), 1);
      Rng rng(2);
      const Tensor y = m.forward(uniform_tensor(Shape{3, 3, 16, 16}, rng, -1, 1));
      const bool finite = std::all_of(y.data().begin(), y.data().end(), [](double z) { return std::isfinite(z); });
      if (y.shape() != Shape{3, 5} || !finite) return Outcome{false, to_string(v) + " " + shape_str(y.shape())};
    }
    return Outcome{true, "[3, 5], all finite"};
  });
  s.check("eval-mode determinism", [] {
    NoGradGuard guard;
    Rng rng(3);
    const Tensor images = uniform_tensor(Shape{2, 3, 32, 32}, rng, -1, 1);
    for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
      Model a = Model::init(ModelConfig::micro(v, 32), 9), b = Model::init(ModelConfig::micro(v, 32), 9);
      if (!bit_identical(a.forward(images), b.forward(images)) || !bit_identical(a.forward(images), a.forward(images)))
        return Outcome{false, to_string(v)};
    }
    return Outcome{true, "bit-identical across instances and calls"};
  });
  s.check("stage layouts at 32x32, M = 7", [] {
    const auto layouts = Model::init(ModelConfig::micro(Variant::Retention, 32), 0).layouts();
    const std::size_t want[] = {7, 4, 2, 1};
    std::string got;
    bool ok = true;
    for (std::size_t st = 0; st < kNumStages; ++st) {
      ok = ok && layouts[st][0].eff_window == want[st];
      got += std::to_string(layouts[st][0].eff_window) + " ";
    }
    ok = ok && layouts[3][0].is_global() && !layouts[0][0].is_global();
    return Outcome{ok, "effective windows " + got};
  });
  s.check("blocks alternate regular and shifted windows", [] {
    ModelConfig c = ModelConfig::micro(Variant::Swat, 64);
    c.depths = {2, 2, 2, 2};
    const auto layouts = Model::init(c, 0).layouts();
    for (std::size_t st = 0; st < kNumStages; ++st)
      for (std::size_t b = 0; b < 2; ++b)
        if ((layouts[st][b].eff_shift > 0) != (b % 2 == 1 && layouts[st][b].eff_window > 1))
          return Outcome{false, "stage " + std::to_string(st) + " block " + std::to_string(b)};
    return Outcome{true, "odd blocks shifted where the layout permits"};
  });
  s.check("parameter count matches enumeration", [] {
    for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
      for (const ModelConfig& c : {ModelConfig::micro(v), ModelConfig::micro(v, 32, 10)}) {
        ModelConfig cc = c;
        cc.depths = {1, 2, 1, 1};
        const std::size_t counted = count_params(cc), enumerated = Model::init(cc, 0).num_parameters();
        if (counted != enumerated)
          return Outcome{false, to_string(v) + ": " + std::to_string(counted) + " vs " + std::to_string(enumerated)};
      }
    }
    return Outcome{true, "3 variants, 2 configs"};
  });
  s.check("swat minus retention count", [] {
    ModelConfig c;
    c.variant = Variant::Swat;
    const std::size_t swat = count_params(c);
    c.variant = Variant::Retention;
    const std::size_t ret = count_params(c);
    // extra C x C value columns and slopes, minus W_G
    std::size_t want = 0;
    for (std::size_t st = 0; st < kNumStages; ++st) {
      const std::size_t C = c.embed_dims[st];
      want += c.depths[st] * ((C * C + C) + c.num_heads[st] - (C * C + C));
    }
    return Outcome{swat - ret == want, "delta " + std::to_string(swat - ret)};
  });
  s.check("doubling widths about quadruples the count", [] {
    ModelConfig c;
    const double base = static_cast<double>(count_params(c));
    for (auto& d : c.embed_dims) d *= 2;
    const double ratio = static_cast<double>(count_params(c)) / base;
    return Outcome{ratio >= 3.2 && ratio <= 4.8, "ratio " + detail::fmt(ratio)};
  });
  s.check("parameter-count ordering", [] { return criterion_param_ordering(); });
  s.check("checkpoint round trip", [] {
    const auto dir = std::filesystem::temp_directory_path() / "swinrmt-verify-checkpoints";
    Outcome o = criterion_checkpoint_roundtrip(dir);
    std::filesystem::remove_all(dir);
    return o;
  });
  s.check("invalid config rejected", [] {
    return detail::fails_with_error([] {
      ModelConfig c;
      c.embed_dims = {64, 96, 256, 512};
      c.validate();
    });
  });
  s.gradients();
  return s.take();
}

inline std::vector<CheckResult> verify_module_suite() {
  detail::Suite s("verify");
  s.check("oracle on a 1x1 window", [] {
    NoGradGuard guard;
    double worst = 0.0;
    for (Variant v : {Variant::Retention, Variant::Swat}) {
      Rng rng(1);
      const AttentionConfig cfg = AttentionConfig::for_variant(v, 4, 2, 3);
      const AttentionParams p = AttentionParams::init(cfg, rng);
      const Tensor x = uniform_tensor(Shape{2, 1, 1, 4}, rng, -2, 2);
      Tensor v_eff = p.v(x);
      if (v == Variant::Swat) {
        // one sigmoid score per head, applied once by each of the two passes
        v_eff = swiglu_value(v_eff);
        const Tensor q = p.q(x), k = p.k(x);
        std::vector<double> f(v_eff.numel());
        for (std::size_t b = 0; b < 2; ++b)
          for (std::size_t h = 0; h < 2; ++h) {
            const double dot = q.data()[b * 4 + 2 * h] * k.data()[b * 4 + 2 * h] + q.data()[b * 4 + 2 * h + 1] * k.data()[b * 4 + 2 * h + 1];
            const double a = 1.0 / (1.0 + std::exp(-dot)) / 3.0;
            f[b * 4 + 2 * h] = f[b * 4 + 2 * h + 1] = a * a;
          }
        v_eff = mul(v_eff, Tensor(v_eff.shape(), f));
      }
      worst = std::max(worst, max_abs_diff(oracle_attention_2d(x, cfg, p), v_eff));
    }
    return detail::within(worst, 1e-15);
  });
  s.check("oracle refuses oversize windows", [] {
    Rng rng(1);
    const AttentionConfig cfg = AttentionConfig::for_variant(Variant::Retention, 2, 1, 7);
    const AttentionParams p = AttentionParams::init(cfg, rng);
    return detail::fails_with_error([&] { oracle_attention_2d(Tensor(Shape{1, 7, 7, 2}), cfg, p); });
  });
  const auto oracle_case = [](Variant v, std::size_t H, std::size_t W, std::uint64_t seed) {
    NoGradGuard guard;
    Rng rng(seed);
    const AttentionConfig cfg = AttentionConfig::for_variant(v, 4, 2, std::max(H, W));
    const AttentionParams p = AttentionParams::init(cfg, rng);
    const Tensor x = uniform_tensor(Shape{1, H, W, 4}, rng, -2, 2);
    return detail::within(max_abs_diff(dmsa_decomposed(x, cfg, p), oracle_attention_2d(x, cfg, p)), 1e-10);
  };
  s.check("oracle, 2x2 retention", [&] { return oracle_case(Variant::Retention, 2, 2, 13); });
  s.check("oracle, 3x2 swat", [&] { return oracle_case(Variant::Swat, 3, 2, 3); });
  s.check("row mass of the decayed softmax", [] {
    Rng rng(2);
    const Tensor q = uniform_tensor(Shape{2, 5, 4}, rng, -2, 2), k = uniform_tensor(Shape{2, 5, 4}, rng, -2, 2);
    return detail::all_near(row_mass_probe(retention_weights(q, k, decay_mask_additive(DecaySpec::learnable(2), 5))), 1.0, 1e-10);
  });
  s.check("post-softmax row mass shrinks with L", [] {
    double prev = 2.0;
    for (std::size_t L = 1; L <= 16; ++L) {
      const Tensor z(Shape{1, L, 2});
      const double m = row_mass_probe(post_softmax_decay_weights(z, z, decay_mask_multiplicative(DecaySpec::fixed({0.5}), L))).data()[0];
      if (m > prev) return Outcome{false, "L = " + std::to_string(L)};
      prev = m;
    }
    return Outcome{true, "row-0 mass non-increasing over L = 1..16, at 16: " + detail::fmt(prev)};
  });
  s.check("post-softmax row mass falls with gamma", [] {
    double prev = 2.0;
    for (double g : {0.999, 0.9, 0.7, 0.5, 0.3}) {
      const Tensor z(Shape{1, 4, 2});
      const Tensor m = row_mass_probe(post_softmax_decay_weights(z, z, decay_mask_multiplicative(DecaySpec::fixed({g}), 4)));
      const double worst = *std::max_element(m.data().begin(), m.data().end());
      if (!(worst < 1.0) || worst >= prev) return Outcome{false, "gamma " + detail::fmt(g)};
      prev = worst;
    }
    return Outcome{true, "max row mass strictly decreasing"};
  });
  s.check("regime reproduction", [] { return criterion_regime_reproduction(); });
  s.check("window 1 is never global above 1x1", [] {
    ModelConfig c;
    c.window_sizes = {1, 1, 1, 1};
    const RegimeReport big = regime_report(c, 224), tiny = regime_report(c, 4);
    const bool ok = std::none_of(big.stages.begin(), big.stages.end(), [](const StageRegime& r) { return r.is_global; }) &&
                    std::all_of(tiny.stages.begin(), tiny.stages.end(), [](const StageRegime& r) { return r.is_global; });
    return Outcome{ok, "224: none global; 4: all 1x1 and global"};
  });
  s.check("gradcheck of a linear layer", [] {
    Rng rng(4);
    const auto lin = std::make_shared<Linear>(Linear::init(3, 2, rng));
    const GradCheckReport r = gradcheck(
        "linear", [lin](const std::vector<Tensor>& in) { return projection_loss((*lin)(in[0]), 11); },
        {uniform_tensor(Shape{4, 3}, rng, -2, 2), lin->weight, lin->bias});
    return Outcome{r.passed() && r.max_rel_error <= 1e-6, r.summary()};
  });
  s.check("gradcheck reports a wrong gradient", [] {
    corrupt_backward_for_testing("exp");
    Rng rng(5);
    const GradCheckReport r =
        gradcheck("exp", [](const std::vector<Tensor>& in) { return sum(exp(in[0])); }, {uniform_tensor(Shape{3}, rng, -2, 2)});
    corrupt_backward_for_testing("");
    return Outcome{!r.passed() && r.failing_coordinate.has_value(), r.summary()};
  });
  return s.take();
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& scope_names() {
  static const std::vector<std::string> names{"tensor-engine", "positional", "attention", "windowing", "model", "verify"};
  return names;
}

/// Runs one scope, or every scope for "all". Unknown names throw ConfigError.
inline std::vector<CheckResult> run_scope(const std::string& scope) {
  using SuiteFn = std::vector<CheckResult> (*)();
  const std::pair<const char*, SuiteFn> suites[] = {{"tensor-engine", tensor_engine_suite}, {"positional", positional_suite},
                                                    {"attention", attention_suite},         {"windowing", windowing_suite},
                                                    {"model", model_suite},                 {"verify", verify_module_suite}};
  std::vector<CheckResult> out;
  bool known = scope == "all";
  for (const auto& [name, fn] : suites) {
    if (scope != "all" && scope != name) continue;
    known = true;
    auto r = fn();
    out.insert(out.end(), r.begin(), r.end());
  }
  if (!known) {
    std::string list;
    for (const auto& n : scope_names()) list += " " + n;
    throw ConfigError("unknown scope '" + scope + "'; expected all or one of:" + list);
  }
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

/// scope, check, PASS/FAIL, detail; tab-separated, followed by a totals line.
inline void print_results(std::ostream& os, const std::vector<CheckResult>& results) {
  std::size_t failed = 0;
  for (const CheckResult& r : results) {
    os << r.scope << '\t' << r.name << '\t' << (r.passed ? "PASS" : "FAIL") << '\t' << r.detail << '\n';
    if (!r.passed) ++failed;
  }
  os << results.size() - failed << '/' << results.size() << " checks passed";
  if (failed > 0) {
    os << "; failing:";
    for (const CheckResult& r : results)
      if (!r.passed) os << " [" << r.scope << "] " << r.name << ";";
  }
  os << '\n';
}

}  // namespace swinrmt::verify
