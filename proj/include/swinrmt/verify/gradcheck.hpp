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

// Central finite differences against tape gradients.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swinrmt/ops.hpp"
#include "swinrmt/random.hpp"

namespace swinrmt::verify {

inline constexpr double kFiniteDiffStep = 1e-5;
inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kModelGradTolerance = 1e-3;

struct GradCheckReport {
  std::string op;
  double max_rel_error = 0.0;
  std::optional<std::string> failing_coordinate;
  std::vector<std::uint64_t> seeds;
  double tolerance = kGradTolerance;
  std::size_t coordinates = 0;

  bool passed() const { return !failing_coordinate && max_rel_error <= tolerance; }

  void merge(const GradCheckReport& other) {
    coordinates += other.coordinates;
    seeds.insert(seeds.end(), other.seeds.begin(), other.seeds.end());
    if (other.max_rel_error > max_rel_error) max_rel_error = other.max_rel_error;
    if (!failing_coordinate && other.failing_coordinate) failing_coordinate = other.failing_coordinate;
  }

  std::string summary() const {
    std::ostringstream os;
    os << op << ": max rel err " << max_rel_error << " over " << coordinates << " coords (tol " << tolerance << ")";
    if (failing_coordinate) os << ", first failure at " << *failing_coordinate;
    return os.str();
  }
};

/// |a - n| / max(|a|, |n|, 1e-8)
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

/// Scalar loss over a tensor: sum(y * R) with R drawn in [-1, 1] from `seed`,
/// so every output entry contributes a distinct weight.
inline Tensor projection_loss(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(y, uniform_tensor(y.shape(), rng, -1.0, 1.0)));
}

using LossFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Checks d loss / d input for every input leaf. When `max_coords` is
/// nonzero, that many coordinates are sampled uniformly (seeded by `sample_seed`).
inline GradCheckReport gradcheck(const std::string& op, const LossFn& loss_fn, std::vector<Tensor> inputs,
                                 double tolerance = kGradTolerance, std::size_t max_coords = 0,
                                 std::uint64_t sample_seed = 0) {
  GradCheckReport report;
  report.op = op;
  report.tolerance = tolerance;
  const bool checks = finite_checks();
  set_finite_checks(true);
  try {
    for (Tensor& t : inputs) {
      t.set_requires_grad(true);
      t.zero_grad();
    }
    loss_fn(inputs).backward();

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      for (std::size_t j = 0; j < inputs[i].numel(); ++j) coords.emplace_back(i, j);
    if (max_coords > 0 && coords.size() > max_coords) {
      Rng pick(sample_seed);
      for (std::size_t n = 0; n < max_coords; ++n) std::swap(coords[n], coords[n + pick.index(coords.size() - n)]);
      coords.resize(max_coords);
    }

    NoGradGuard guard;
    for (auto [i, j] : coords) {
      const double analytic = inputs[i].has_grad() ? inputs[i].grad()[j] : 0.0;
      auto data = inputs[i].mutable_data();
      const double saved = data[j];
      data[j] = saved + kFiniteDiffStep;
      const double up = loss_fn(inputs).item();
      data[j] = saved - kFiniteDiffStep;
      const double down = loss_fn(inputs).item();
      data[j] = saved;
      const double numeric = (up - down) / (2.0 * kFiniteDiffStep);
      const double err = relative_error(analytic, numeric);
      ++report.coordinates;
      if (err > report.max_rel_error) report.max_rel_error = err;
      if (err > tolerance && !report.failing_coordinate) {
        std::ostringstream os;
        os << "input " << i << " [" << j << "] analytic " << analytic << " numeric " << numeric;
        report.failing_coordinate = os.str();
      }
    }
  } catch (const NumericError& e) {
    report.failing_coordinate = std::string("non-finite intermediate in op '") + e.op() + "': " + e.what();
    report.max_rel_error = std::numeric_limits<double>::infinity();
  }
  set_finite_checks(checks);
  return report;
}

/// A gradcheck case built per seed: inputs plus a loss over them.
struct GradCase {
  LossFn loss;
  std::vector<Tensor> inputs;
  std::size_t max_coords = 0;
};

inline GradCheckReport gradcheck_seeds(const std::string& op, const std::function<GradCase(std::uint64_t)>& make,
                                       const std::vector<std::uint64_t>& seeds, double tolerance = kGradTolerance) {
  GradCheckReport total;
  total.op = op;
  total.tolerance = tolerance;
  for (std::uint64_t seed : seeds) {
    GradCase c = make(seed);
    GradCheckReport r = gradcheck(op, c.loss, c.inputs, tolerance, c.max_coords, seed);
    r.seeds = {seed};
    total.merge(r);
  }
  return total;
}

}  // namespace swinrmt::verify
