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

// Builds a micro SWAT model, runs it on random images, prints the stage
// regimes, gradchecks one attention pass and round-trips a checkpoint.
//
//   quickstart [scratch-dir]

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "swinrmt/checkpoint.hpp"
#include "swinrmt/verify/gradcheck.hpp"
#include "swinrmt/verify/probes.hpp"
#include "swinrmt/verify/reference.hpp"

int main(int argc, char** argv) {
  using namespace swinrmt;
  const std::filesystem::path dir =
      argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::temp_directory_path() / "swinrmt-quickstart";

  const ModelConfig config = ModelConfig::micro(Variant::Swat, 32, 2);
  Model model = Model::init(config, 7);
  std::printf("micro swat: %zu parameters\n", model.num_parameters());

  Rng rng(1);
  const Tensor images = uniform_tensor(Shape{2, 3, 32, 32}, rng, -1.0, 1.0);
  Tensor logits;
  {
    NoGradGuard guard;
    logits = model.forward(images);
  }
  std::printf("logits [%zu, %zu]: %.6f %.6f / %.6f %.6f\n", logits.size(0), logits.size(1), logits.at({0, 0}),
              logits.at({0, 1}), logits.at({1, 0}), logits.at({1, 1}));

  verify::print_regime(std::cout, verify::regime_report(config, 32));

  // One SWAT pass over 5 tokens: q, k, v and the ALiBi slopes all get checked.
  const verify::LossFn pass = [](const std::vector<Tensor>& in) {
    const Tensor decay = decay_mask_multiplicative(DecaySpec::fixed({0.9}), 5);
    return verify::projection_loss(swat_pass_1d(in[0], in[1], in[2], alibi_bias(in[3], 5), decay, 7), 3);
  };
  const auto report = verify::gradcheck("swat_pass_1d", pass,
                                        {uniform_tensor(Shape{1, 5, 4}, rng, -1, 1), uniform_tensor(Shape{1, 5, 4}, rng, -1, 1),
                                         uniform_tensor(Shape{1, 5, 4}, rng, -1, 1), Tensor(Shape{1}, {-0.5})});
  std::printf("gradcheck %s\n", report.summary().c_str());

  save_checkpoint(dir / "micro_swat", model);
  Model loaded = load_checkpoint(dir / "micro_swat");
  bool same = false;
  {
    NoGradGuard guard;
    same = verify::bit_identical(logits, loaded.forward(images));
  }
  std::printf("checkpoint round trip: %s\n", same ? "bit-identical" : "MISMATCH");
  return report.passed() && same ? 0 : 1;
}
