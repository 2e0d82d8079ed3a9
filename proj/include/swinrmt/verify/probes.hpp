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

// Measurement probes: attention row mass, the post-softmax decay exhibit,
// and per-stage windowing regime.

#include <algorithm>
#include <ostream>
#include <vector>

#include "swinrmt/model.hpp"

namespace swinrmt::verify {

/// Last-axis sums of a score tensor [..., L, L].
inline Tensor row_mass_probe(const Tensor& scores) {
  NoGradGuard guard;
  return sum_dim(scores, scores.dim() - 1);
}

/// softmax(q k^T / sqrt(d)) * gamma^|i-j|: decay multiplied after normalization.
/// Rows no longer sum to one. Kept only as a measurable exhibit.
inline Tensor post_softmax_decay_weights(const Tensor& q, const Tensor& k, const Tensor& decay_mult) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.shape().back()));
  return mul(softmax_lastdim(scale(matmul(q, transpose_last2(k)), inv_sqrt_d)), decay_mult);
}

struct StageRegime {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t eff_window = 0;
  std::size_t eff_shift = 0;
  bool is_global = false;
};

struct RegimeReport {
  std::vector<StageRegime> stages;
};

/// Walks the stage resolutions for `img_size` and applies adaptive window sizing
/// with the nominal shift floor(M/2).
inline RegimeReport regime_report(const ModelConfig& config, std::size_t img_size) {
  ModelConfig c = config;
  c.img_size = img_size;
  c.validate();
  RegimeReport report;
  const auto res = c.stage_resolutions();
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const std::size_t M = c.window_sizes[s];
    const AdaptiveWindow eff = adaptive_window(M, c.shift_size(s), res[s], res[s]);
    report.stages.push_back({res[s], res[s], eff.window, eff.shift, eff.window >= std::max(res[s], res[s])});
  }
  return report;
}

inline void print_regime(std::ostream& os, const RegimeReport& report) {
  os << "stage\tH'\tW'\tM_eff\ts_eff\tregime\n";
  for (std::size_t s = 0; s < report.stages.size(); ++s) {
    const StageRegime& r = report.stages[s];
    os << s + 1 << '\t' << r.height << '\t' << r.width << '\t' << r.eff_window << '\t' << r.eff_shift << '\t'
       << (r.is_global ? "global" : "windowed") << '\n';
  }
}

}  // namespace swinrmt::verify
