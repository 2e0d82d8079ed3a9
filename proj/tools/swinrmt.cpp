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

// swinrmt: verify / train / eval / inspect / bench / config.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swinrmt/checkpoint.hpp"
#include "swinrmt/config_io.hpp"
#include "swinrmt/train.hpp"
#include "swinrmt/verify/suites.hpp"

namespace {

using namespace swinrmt;

struct Common {
  std::string variant;
  std::string config_path;
  std::uint64_t seed = 0;
};

void add_model_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--variant", c.variant, "Attention variant")
      ->check(CLI::IsMember({"baseline", "retention", "swat"}));
  cmd->add_option("--config", c.config_path, "Model config file (JSON)")->check(CLI::ExistingFile);
}

void add_seed_flag(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Root seed")->envname("SWINRMT_SEED")->capture_default_str();
}

/// The config file (or `fallback`) with --variant applied on top.
ModelConfig resolve_config(const Common& c, ModelConfig fallback) {
  ModelConfig config = c.config_path.empty() ? std::move(fallback) : load_config_file(c.config_path);
  if (!c.variant.empty()) config.variant = parse_variant(c.variant);
  config.validate();
  return config;
}

int cmd_verify(const std::string& scope, const std::string& out_path) {
  const auto results = verify::run_scope(scope);
  verify::print_results(std::cout, results);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw FormatError("cannot write " + out_path);
    verify::print_results(f, results);
  }
  return verify::all_passed(results) ? 0 : 1;
}

void print_layouts(const Model& model) {
  std::cout << "stage\tblock\tH'\tW'\tM\ts\tM_eff\ts_eff\tpad_h\tpad_w\twindows\tregime\n";
  const auto layouts = model.layouts();
  for (std::size_t s = 0; s < layouts.size(); ++s)
    for (std::size_t b = 0; b < layouts[s].size(); ++b) {
      const WindowLayout& l = layouts[s][b];
      std::cout << s + 1 << '\t' << b << '\t' << l.height << '\t' << l.width << '\t' << l.window << '\t' << l.shift << '\t'
                << l.eff_window << '\t' << l.eff_shift << '\t' << l.pad_h << '\t' << l.pad_w << '\t' << l.num_windows()
                << '\t' << (l.is_global() ? "global" : "windowed") << '\n';
    }
}

int cmd_inspect(const ModelConfig& config) {
  std::cout << "variant " << to_string(config.variant) << ", image " << config.img_size << "x" << config.img_size
            << ", config hash " << config_hash(config) << "\n\n";
  verify::print_regime(std::cout, verify::regime_report(config, config.img_size));
  std::cout << "\nparameters\t" << count_params(config) << "\n";
  for (Variant v : {Variant::Baseline, Variant::Retention, Variant::Swat}) {
    ModelConfig other = config;
    other.variant = v;
    std::cout << "  " << to_string(v) << "\t" << count_params(other) << "\n";
  }
  std::cout << "\n";
  print_layouts(Model::init(config, 0));
  return 0;
}

int cmd_train(TrainOptions opt, const std::string& out) {
  std::cout << "# variant " << to_string(opt.model.variant) << ", seed " << opt.seed << ", steps " << opt.steps
            << ", batch " << opt.batch << ", lr " << opt.lr << ", label smoothing " << opt.label_smoothing << "\n";
  TrainResult result = train_toy(opt, [](const MetricRow& row) { std::cout << format_metrics(row) << std::endl; });
  if (!out.empty()) {
    save_checkpoint(out, result.model);
    std::cout << "# checkpoint " << CheckpointPaths::from_prefix(out).manifest.string() << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& prefix, const TrainOptions& data_opt) {
  Model model = load_checkpoint(prefix);
  const ModelConfig& c = model.config();
  const StripeDataset data = StripeDataset::generate(data_opt.eval_samples, c.img_size, c.in_channels, data_opt.noise,
                                                     Rng(data_opt.seed).split("data"));
  const auto [loss, acc] = evaluate(model, data, data.count(), data_opt.label_smoothing);
  std::printf("variant %s samples %zu loss=%.6f acc=%.4f\n", to_string(c.variant).c_str(), data.count(), loss, acc);
  return 0;
}

double median_ms(std::size_t warmup, std::size_t runs, const std::function<void()>& fn) {
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<double> t;
  for (std::size_t i = 0; i < runs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2), t.end());
  return t[t.size() / 2];
}

int cmd_bench(Variant variant, std::uint64_t seed, std::size_t warmup, std::size_t runs, std::size_t dim) {
  Rng rng(seed);
  const AttentionConfig cfg = AttentionConfig::for_variant(variant, dim, 2, 4);
  const AttentionParams params = AttentionParams::init(cfg, rng);
  std::cout << "kind\tvariant\tmap\twindow\twindows\ttokens\tforward_ms\tforward_backward_ms\n";
  const auto row = [&](const std::string& kind, std::size_t n, std::size_t window, std::size_t windows,
                       const std::function<Tensor(const Tensor&)>& f) {
    const Tensor x = uniform_tensor(Shape{1, n, n, dim}, rng, -1.0, 1.0);
    const double fwd = median_ms(warmup, runs, [&] {
      NoGradGuard guard;
      f(x);
    });
    const double both = median_ms(warmup, runs, [&] {
      Tensor leaf = x.detach();
      leaf.set_requires_grad(true);
      sum(f(leaf)).backward();
    });
    std::printf("%s\t%s\t%zux%zu\t%zu\t%zu\t%zu\t%.4f\t%.4f\n", kind.c_str(), to_string(variant).c_str(), n, n, window,
                windows, n * n, fwd, both);
    std::fflush(stdout);
  };
  // fixed window 4, growing map: window count grows 4 -> 64
  for (std::size_t n : {8, 16, 24, 32}) {
    const WindowLayout layout = make_layout(4, 0, n, n);
    row("windowed", n, 4, layout.num_windows(),
        [&](const Tensor& x) { return windowed_attention(x, cfg, params, layout); });
  }
  // equal token count: one window spanning the map vs attention on the map itself
  for (std::size_t n : {4, 8}) {
    AttentionConfig wide = cfg;
    wide.window_size = n;
    const WindowLayout layout = make_layout(n, 0, n, n);
    row("single-window", n, n, 1, [&](const Tensor& x) { return windowed_attention(x, wide, params, layout); });
    row("full-map", n, n, 1, [&](const Tensor& x) { return attention_block_output(x, wide, params); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated SwinRMT kernels: verification, toy training and inspection"};
  app.require_subcommand(1);

  Common common;
  std::string scope = "all", report_path, corrupt, out, checkpoint;
  TrainOptions train;
  std::size_t img_size = 0, warmup = 3, runs = 10, bench_dim = 32;

  CLI::App* verify = app.add_subcommand("verify", "Run the verification suites");
  verify->add_option("--scope", scope, "all or one module")
      ->check(CLI::IsMember([] {
        auto names = verify::scope_names();
        names.insert(names.begin(), "all");
        return names;
      }()))
      ->capture_default_str();
  verify->add_option("--report", report_path, "Also write the table to this file");
  // test fixture: scales the backward rule of the named op so the suite must fail
  verify->add_option("--corrupt-backward", corrupt)->group("");

  CLI::App* train_cmd = app.add_subcommand("train", "Toy training on the synthetic stripe task");
  add_model_flags(train_cmd, common);
  add_seed_flag(train_cmd, common);
  train_cmd->add_option("--steps", train.steps, "Optimizer steps")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train.lr, "Peak learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--batch", train.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--label-smoothing", train.label_smoothing, "Label smoothing epsilon")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--eval-every", train.eval_every, "Steps between metric lines")->capture_default_str();
  train_cmd->add_option("--out", out, "Checkpoint prefix (writes <out>.manifest.json and <out>.bin)");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on freshly generated stripe images");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint prefix")->required();
  add_seed_flag(eval, common);
  eval->add_option("--samples", train.eval_samples, "Number of images")->capture_default_str();

  CLI::App* inspect = app.add_subcommand("inspect", "Windowing regimes, parameter counts and block layouts");
  add_model_flags(inspect, common);
  inspect->add_option("--img", img_size, "Override the image size");

  CLI::App* bench = app.add_subcommand("bench", "Time windowed attention forward and backward");
  bench->add_option("--variant", common.variant, "Attention variant")
      ->check(CLI::IsMember({"baseline", "retention", "swat"}));
  add_seed_flag(bench, common);
  bench->add_option("--runs", runs, "Timed runs per shape (median reported)")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{10}, std::size_t{100000}));
  bench->add_option("--warmup", warmup, "Untimed runs per shape")->capture_default_str();
  bench->add_option("--dim", bench_dim, "Channel count")->capture_default_str();

  CLI::App* config = app.add_subcommand("config", "Print a model config as JSON");
  add_model_flags(config, common);
  config->add_flag("--micro", "Start from the micro config instead of the desk default");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      corrupt_backward_for_testing(corrupt);
      return cmd_verify(scope, report_path);
    }
    if (*train_cmd) {
      train.seed = common.seed;
      train.model = resolve_config(common, ModelConfig::micro(Variant::Retention, 32, 2));
      return cmd_train(train, out);
    }
    if (*eval) {
      train.seed = common.seed;
      return cmd_eval(checkpoint, train);
    }
    if (*inspect) {
      ModelConfig c = resolve_config(common, ModelConfig{});
      if (img_size != 0) c.img_size = img_size;
      c.validate();
      return cmd_inspect(c);
    }
    if (*bench) {
      return cmd_bench(common.variant.empty() ? Variant::Retention : parse_variant(common.variant), common.seed, warmup,
                       runs, bench_dim);
    }
    if (*config) {
      const bool micro = config->count("--micro") > 0;
      std::cout << serialize_config(resolve_config(common, micro ? ModelConfig::micro(Variant::Retention) : ModelConfig{}));
      return 0;
    }
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
