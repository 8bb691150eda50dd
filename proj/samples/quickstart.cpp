// Copyright 2026 The fraudcnn Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small end-to-end run on a synthetic panel: prepare images, train a reduced
// network, evaluate, and render one Grad-CAM overlay.

#include <iostream>

#include "fraudcnn/fraudcnn.hpp"

int main() {
  using namespace fraudcnn;
  RunConfig cfg = parse_config_json(nlohmann::json::object());
  cfg.synth.n_companies = 300;
  cfg.synth.fraud_rate = 0.1;
  cfg.synth.f_fin = 40;
  cfg.synth.f_esg = 12;
  cfg.synth.f_ic = 12;
  cfg.synth.block_width_min = 8;
  cfg.synth.block_width_max = 12;
  cfg.model.block1_channels = 8;
  cfg.model.block2_channels = 16;
  cfg.model.dense_hidden = 32;
  cfg.train.learning_rate = 0.001;
  cfg.train.epochs = 6;

  const auto data = generate_synthetic(cfg.synth);
  auto prepared = prepare_images(data.panel, cfg, std::cout);
  Model<float> model(model_config_for(cfg, prepared.split.train));
  train_model(model, cfg, prepared.split, std::cout);

  const auto e = evaluate(model, prepared.split.test, 0.5);
  std::cout << "test auc " << e.metrics.auc << ", recall " << e.metrics.recall << '\n';

  const auto& test = prepared.split.test;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test.labels[i] != 1) continue;
    const auto heat = gradcam(model, std::span<const float>(test.pixels[i]));
    const auto ov = upsample_overlay(heat, test.pixels[i], test.height, test.schema, 4);
    write_ppm(ov.image, "quickstart_overlay.ppm");
    std::cout << "overlay for " << test.ids[i] << ": " << ov.image.width << "x" << ov.image.height << '\n';
    break;
  }
}
