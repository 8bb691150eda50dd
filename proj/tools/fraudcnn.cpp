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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fraudcnn/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fraud detection on panel data rendered as years x features images"};
  std::string command, config_path, output, preset;
  std::uint64_t seed = 0;
  std::string names;
  for (const auto& [name, c] : fraudcnn::command_names()) names += (names.empty() ? "" : ", ") + name;
  app.add_option("command", command, "One of: " + names)->required();
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--output", output, "Output directory (overrides paths.output)");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every stage (overrides the config)");
  app.add_option("--preset", preset, "exante-paper, expost-paper or initial-paper");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto c = fraudcnn::parse_command(command);
    auto cfg = config_path.empty() ? fraudcnn::parse_config_json(nlohmann::json::object(), preset)
                                   : fraudcnn::parse_config(config_path, preset);
    if (!output.empty()) cfg.paths.output = output;
    if (*seed_opt) fraudcnn::apply_seed(cfg, seed);
    fraudcnn::run(c, cfg, std::cerr);
  } catch (const fraudcnn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fraudcnn::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
