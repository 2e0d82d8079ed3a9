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

// Toy training on a synthetic two-class stripe task.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "swinrmt/model.hpp"

namespace swinrmt {

/// Class 0: horizontal stripes, class 1: vertical stripes, both plus Gaussian noise.
struct StripeDataset {
  std::size_t channels = 3;
  std::size_t size = 32;
  std::vector<double> images;  // [N, C, S, S]
  std::vector<int> labels;

  std::size_t count() const { return labels.size(); }

  static StripeDataset generate(std::size_t n, std::size_t size, std::size_t channels, double noise, Rng rng) {
    StripeDataset ds;
    ds.channels = channels;
    ds.size = size;
    ds.images.resize(n * channels * size * size);
    ds.labels.resize(n);
    const std::size_t plane = size * size;
    for (std::size_t i = 0; i < n; ++i) {
      const int label = static_cast<int>(rng.index(2));
      const double period = rng.uniform(3.0, 9.0);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double contrast = rng.uniform(0.6, 1.4);
      ds.labels[i] = label;
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t y = 0; y < size; ++y)
          for (std::size_t x = 0; x < size; ++x) {
            const double coord = static_cast<double>(label == 0 ? y : x);
            const double v = contrast * std::sin(2.0 * std::numbers::pi * coord / period + phase);
            ds.images[(i * channels + c) * plane + y * size + x] = v + noise * rng.normal();
          }
    }
    return ds;
  }

  Tensor batch_images(const std::vector<std::size_t>& idx) const {
    const std::size_t per = channels * size * size;
    std::vector<double> out(idx.size() * per);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::copy_n(images.begin() + static_cast<std::ptrdiff_t>(idx[b] * per), per,
                  out.begin() + static_cast<std::ptrdiff_t>(b * per));
    }
    return Tensor(Shape{idx.size(), channels, size, size}, std::move(out));
  }

  std::vector<int> batch_labels(const std::vector<std::size_t>& idx) const {
    std::vector<int> out;
    for (std::size_t i : idx) out.push_back(labels[i]);
    return out;
  }
};

/// Mean over the batch of -sum_c t_c log p_c with t = (1 - eps) onehot + eps / K.
inline Tensor label_smoothed_cross_entropy(const Tensor& logits, const std::vector<int>& labels, double eps) {
  if (logits.dim() != 2 || logits.size(0) != labels.size()) {
    throw ShapeError("cross entropy: logits " + shape_str(logits.shape()) + " vs " + std::to_string(labels.size()) +
                     " labels");
  }
  const std::size_t B = logits.size(0), K = logits.size(1);
  std::vector<double> target(B * K, eps / static_cast<double>(K));
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= K) throw ShapeError("cross entropy: label out of range");
    target[b * K + static_cast<std::size_t>(labels[b])] += 1.0 - eps;
  }
  return scale(sum(mul(log_softmax_lastdim(logits), Tensor(Shape{B, K}, std::move(target)))),
               -1.0 / static_cast<double>(B));
}

/// Linear warm-up over `warmup` steps, then cosine decay to zero.
inline double scheduled_lr(std::size_t step, std::size_t total, std::size_t warmup, double peak) {
  if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (total <= warmup) return peak;
  const double t = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return 0.5 * peak * (1.0 + std::cos(std::numbers::pi * t));
}

struct AdamW {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;

  /// Decoupled decay applies to matrices and conv kernels only (rank >= 2).
  void step(std::vector<Tensor>& params, double lr) {
    if (m_.empty()) {
      for (const Tensor& p : params) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& p = params[i];
      if (!p.has_grad()) continue;
      auto data = p.mutable_data();
      auto grad = p.grad();
      const bool decay = p.dim() >= 2;
      for (std::size_t j = 0; j < data.size(); ++j) {
        m_[i][j] = beta1 * m_[i][j] + (1.0 - beta1) * grad[j];
        v_[i][j] = beta2 * v_[i][j] + (1.0 - beta2) * grad[j] * grad[j];
        if (decay) data[j] -= lr * weight_decay * data[j];
        data[j] -= lr * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + eps);
      }
    }
  }

 private:
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainOptions {
  ModelConfig model = ModelConfig::micro(Variant::Retention, 32, 2);
  std::uint64_t seed = 0;
  std::size_t steps = 300;
  std::size_t batch = 32;
  double lr = 1e-3;
  double weight_decay = 0.05;
  double label_smoothing = 0.1;
  double warmup_fraction = 0.1;
  std::size_t eval_every = 50;
  std::size_t dataset_size = 1024;
  std::size_t eval_samples = 256;
  double noise = 0.3;
  bool freeze_bn_stats = false;
};

struct MetricRow {
  std::size_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double lr = 0.0;

  bool operator==(const MetricRow&) const = default;
};

inline std::string format_metrics(const MetricRow& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "step=%zu loss=%.6f acc=%.4f lr=%.6e", r.step, r.loss, r.accuracy, r.lr);
  return buf;
}

struct TrainResult {
  Model model;
  std::vector<MetricRow> log;
  double final_accuracy = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eval-mode loss and accuracy over the first `n` samples.
inline std::pair<double, double> evaluate(Model& model, const StripeDataset& data, std::size_t n, double smoothing,
                                          std::size_t batch = 64) {
  NoGradGuard guard;
  const bool was_training = model.training();
  model.set_training(false);
  n = std::min(n, data.count());
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < n; start += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(n, start + batch); ++i) idx.push_back(i);
    const auto labels = data.batch_labels(idx);
    const Tensor logits = model.forward(data.batch_images(idx));
    loss += label_smoothed_cross_entropy(logits, labels, smoothing).item() * static_cast<double>(idx.size());
    const std::size_t K = logits.size(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      auto row = logits.data().subspan(b * K, K);
      const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      if (best == labels[b]) ++correct;
    }
  }
  model.set_training(was_training);
  return {loss / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

/// Runs the toy training loop. `on_eval` sees each metrics row as it is produced.
inline TrainResult train_toy(const TrainOptions& opt, const std::function<void(const MetricRow&)>& on_eval = {}) {
  if (opt.steps == 0 || opt.batch == 0) throw ConfigError("train: steps and batch must be positive");
  if (opt.lr < 0.0) throw ConfigError("train: learning rate must be non-negative");
  Rng root(opt.seed);
  const StripeDataset data =
      StripeDataset::generate(opt.dataset_size, opt.model.img_size, opt.model.in_channels, opt.noise, root.split("data"));
  Rng sampler = root.split("batches");
  TrainResult result{Model::init(opt.model, root.split("model").next_u64()), {}, 0.0};
  Model& model = result.model;
  model.set_bn_stat_updates(!opt.freeze_bn_stats);
  std::vector<Tensor> params = model.parameters();
  AdamW optimizer;
  optimizer.weight_decay = opt.weight_decay;
  const auto warmup =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.warmup_fraction * static_cast<double>(opt.steps))));
  const std::size_t eval_every = opt.eval_every == 0 ? opt.steps : opt.eval_every;

  for (std::size_t step = 0; step < opt.steps; ++step) {
    const double lr = scheduled_lr(step, opt.steps, warmup, opt.lr);
    std::vector<std::size_t> idx(opt.batch);
    for (auto& i : idx) i = sampler.index(data.count());
    model.set_training(true);
    model.zero_grad();
    try {
      Tensor loss = label_smoothed_cross_entropy(model.forward(data.batch_images(idx)), data.batch_labels(idx),
                                                 opt.label_smoothing);
      if (!std::isfinite(loss.item())) {
        throw TrainingDiverged("training diverged at step " + std::to_string(step) + ": loss " +
                               std::to_string(loss.item()) + " at lr " + std::to_string(lr));
      }
      loss.backward();
    } catch (const NumericError& e) {
      throw TrainingDiverged("training diverged at step " + std::to_string(step) + " in op '" + e.op() + "': " +
                             e.what());
    }
    optimizer.step(params, lr);

    if ((step + 1) % eval_every == 0 || step + 1 == opt.steps) {
      const auto [eval_loss, acc] = evaluate(model, data, opt.eval_samples, opt.label_smoothing);
      if (!std::isfinite(eval_loss)) throw TrainingDiverged("training diverged: eval loss is not finite at step " +
                                                            std::to_string(step + 1));
      const MetricRow row{step + 1, eval_loss, acc, lr};
      result.log.push_back(row);
      if (on_eval) on_eval(row);
    }
  }
  model.set_training(false);
  result.final_accuracy = result.log.back().accuracy;
  return result;
}

}  // namespace swinrmt
