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

// Runs the eleven acceptance criteria and prints one PASS/FAIL line per
// criterion. Wall-clock bounds are part of each criterion and are enforced.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "swinrmt/verify/criteria.hpp"
#include "swinrmt/verify/grad_suite.hpp"

namespace {

using swinrmt::verify::Outcome;

struct Criterion {
  const char* name;
  double bound_seconds;  // 0 when the criterion carries no time bound
  std::function<Outcome()> run;
};

Outcome gradient_suite() {
  using namespace swinrmt::verify;
  Outcome out;
  const auto reports = run_gradient_suite("all");
  double worst_op = 0.0, worst_model = 0.0;
  std::size_t coords = 0;
  for (const auto& r : reports) {
    const bool model = r.op.rfind("model ", 0) == 0;
    coords += r.coordinates;
    (model ? worst_model : worst_op) = std::max(model ? worst_model : worst_op, r.max_rel_error);
    const double want_tol = model ? kModelGradTolerance : kGradTolerance;
    if (r.tolerance != want_tol || r.seeds != kGradSeeds) {
      out.passed = false;
      out.detail = r.op + ": checked at tolerance " + std::to_string(r.tolerance) + " over " +
                   std::to_string(r.seeds.size()) + " seeds";
      return out;
    }
    if (!r.passed()) {
      out.passed = false;
      out.detail = r.summary();
      return out;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu entries x 5 seeds, %zu coords; worst op %.2e, worst model %.2e", reports.size(),
                coords, worst_op, worst_model);
  out.detail = buf;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string workdir = (std::filesystem::temp_directory_path() / "swinrmt-acceptance").string();
  app.add_option("--workdir", workdir, "scratch directory for checkpoints");
  CLI11_PARSE(app, argc, argv);

  using namespace swinrmt::verify;
  const std::vector<Criterion> criteria{
      {"row-stochasticity split", 1.0, [] { return criterion_row_stochasticity(20); }},
      {"oracle equivalence", 10.0, [] { return criterion_oracle_equivalence(20); }},
      {"gradient suite", 120.0, gradient_suite},
      {"adaptive window laws", 1.0, criterion_adaptive_window_laws},
      {"bypass equivalence", 5.0, [] { return criterion_bypass_equivalence(10); }},
      {"shift-mask isolation", 5.0, criterion_shift_mask_isolation},
      {"regime reproduction", 0.0, criterion_regime_reproduction},
      {"parameter-count ordering", 0.0, criterion_param_ordering},
      {"toy training", 600.0, [] { return criterion_toy_training(0, true).outcome; }},
      {"rope isometry and inversion", 1.0, [] { return criterion_rope_isometry(10); }},
      {"checkpoint round trip", 30.0, [&] { return criterion_checkpoint_roundtrip(workdir); }},
  };

  std::size_t passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.passed = false;
      out.detail = std::string("threw: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.passed && c.bound_seconds > 0.0 && seconds > c.bound_seconds) {
      out.passed = false;
      out.detail += "; took " + std::to_string(seconds) + " s, bound " + std::to_string(c.bound_seconds) + " s";
    }
    if (out.passed) ++passed;
    std::printf("%s [%zu] %s (%.2f s): %s\n", out.passed ? "PASS" : "FAIL", i + 1, c.name, seconds, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu acceptance criteria passed\n", passed, criteria.size());
  return passed == criteria.size() ? 0 : 1;
}
