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


#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <sys/wait.h>

#include "test_util.hpp"

using namespace fraudcnn;

namespace {

RunConfig parse(const std::string& text, const std::string& preset = {}) {
  return parse_config_json(nlohmann::json::parse(text), preset);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(Config, EmptyConfigUsesExAntePreset) {
  const auto c = parse("{}");
  EXPECT_EQ(c.preset, "exante-paper");
  EXPECT_EQ(c.prepare.mode, Mode::ExAnte);
  EXPECT_EQ(c.train.learning_rate, 0.0005);
  EXPECT_EQ(c.train.epochs, 8u);
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.threshold.kind, ThresholdPolicy::Kind::Manual);
  EXPECT_EQ(c.threshold.value, 0.75);
}

TEST(Config, EmptyFileUsesDefaults) {
  testutil::TempDir dir("cfg_empty");
  testutil::write_text(dir.file("c.json"), "");
  EXPECT_EQ(parse_config(dir.file("c.json")).train.epochs, 8u);
}

TEST(Config, OtherPresets) {
  const auto p = parse("{}", "expost-paper");
  EXPECT_EQ(p.prepare.mode, Mode::ExPost);
  EXPECT_EQ(p.train.learning_rate, 0.001);
  EXPECT_EQ(p.train.epochs, 6u);
  EXPECT_EQ(p.train.batch_size, 32u);
  EXPECT_EQ(p.threshold.value, 0.45);
  const auto i = parse(R"({"preset": "initial-paper"})");
  EXPECT_EQ(i.train.learning_rate, 0.01);
  EXPECT_EQ(i.train.epochs, 5u);
  EXPECT_NE(error_of(R"({"preset": "nope"})"), "");
}

TEST(Config, UnknownKeyIsNamed) {
  const auto e = error_of(R"({"train": {"learnig_rate": 0.01}})");
  EXPECT_NE(e.find("learnig_rate"), std::string::npos) << e;
  EXPECT_NE(error_of(R"({"trian": {}})").find("trian"), std::string::npos);
}

TEST(Config, TypeMismatchIsAnError) {
  EXPECT_NE(error_of(R"({"train": {"epochs": "many"}})"), "");
  EXPECT_NE(error_of(R"({"threshold": {"policy": "best"}})"), "");
}

TEST(Config, ExplicitValuesOverridePreset) {
  const auto c = parse(R"({"train": {"learning_rate": 0.01}, "threshold": {"policy": "max_f2"}})");
  EXPECT_EQ(c.train.learning_rate, 0.01);
  EXPECT_EQ(c.train.epochs, 8u);
  EXPECT_EQ(c.threshold.kind, ThresholdPolicy::Kind::MaxF2);
}

TEST(Config, SeedPropagates) {
  const auto c = parse(R"({"seed": 9})");
  EXPECT_EQ(c.synth.seed, 9u);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.prepare.split.seed, 9u);
}

TEST(Config, ResolvedEchoReparses) {
  const auto c = parse(R"({"seed": 3, "synth": {"n_companies": 50}, "threshold": {"policy": "max_f2"}})");
  const auto back = parse_config_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, SampleConfigParses) {
  const auto c = parse_config(FRAUDCNN_SOURCE_DIR "/samples/exante.json");
  EXPECT_EQ(c.threshold.kind, ThresholdPolicy::Kind::MaxF2);
}

TEST(Commands, NamesRoundTrip) {
  for (const auto& [name, cmd] : command_names()) EXPECT_EQ(parse_command(name), cmd);
  EXPECT_THROW(parse_command("fly"), Error);
}

TEST(Commands, TrainWithoutPrepareNamesTheMissingStep) {
  testutil::TempDir dir("no_prepare");
  auto c = parse("{}");
  c.paths.output = dir.path().string();
  std::ostringstream log;
  try {
    run(Command::Train, c, log);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("run prepare first"), std::string::npos) << e.what();
  }
}

struct CliResult {
  int code;
  std::string output;
};

CliResult cli(const std::string& args, const testutil::TempDir& dir) {
  const auto log = dir.file("cli.log");
  const int rc = std::system((std::string(FRAUDCNN_CLI) + " " + args + " > " + log + " 2>&1").c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, testutil::read_text(log)};
}

TEST(Cli, TrainBeforePrepareExitsOne) {
  testutil::TempDir dir("cli_order");
  const auto r = cli("train --output " + dir.file("run"), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("run prepare first"), std::string::npos) << r.output;
}

TEST(Cli, BadConfigExitsOne) {
  testutil::TempDir dir("cli_badcfg");
  testutil::write_text(dir.file("c.json"), R"({"train": {"learnig_rate": 1}})");
  const auto r = cli("prepare --config " + dir.file("c.json") + " --output " + dir.file("run"), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("learnig_rate"), std::string::npos) << r.output;
}

TEST(Cli, UnknownCommandExitsOne) {
  testutil::TempDir dir("cli_unknown");
  EXPECT_EQ(cli("fly", dir).code, 1);
}

// The whole chain on a small panel.
TEST(Cli, FullPipelineProducesEveryArtifact) {
  testutil::TempDir dir("cli_full");
  testutil::write_text(dir.file("c.json"), R"({
    "seed": 3,
    "synth": {"n_companies": 160, "fraud_rate": 0.1, "f_fin": 20, "f_esg": 6, "f_ic": 6,
              "block_width_min": 4, "block_width_max": 8},
    "model": {"block1_channels": 4, "block2_channels": 6, "dense_hidden": 8},
    "train": {"epochs": 2},
    "threshold": {"policy": "max_f2"},
    "explain": {"layers": [1, 3]}
  })");
  const auto out = dir.path() / "run";
  for (const char* cmd : {"synth", "prepare", "train", "tune", "eval", "explain", "baseline", "compare"}) {
    const auto r = cli(std::string(cmd) + " --config " + dir.file("c.json") + " --output " + out.string(), dir);
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.output;
  }
  for (const char* f : {"config.resolved.json", "synth/panel.csv", "synth/ground_truth.json", "prepared/split.csv",
                        "train/model.ckpt", "train/train_report.csv", "tune/threshold.json", "eval/metrics.json",
                        "eval/test_predictions.csv", "baseline/predictions.csv", "compare/comparison.csv"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  const auto metrics = nlohmann::json::parse(testutil::read_text(out / "eval/metrics.json"));
  EXPECT_TRUE(metrics.contains("auc"));
  const auto manifest = nlohmann::json::parse(testutil::read_text(out / "train/manifest.json"));
  EXPECT_EQ(manifest["command"], "train");

  std::size_t explained = 0;
  for (const auto& e : std::filesystem::directory_iterator(out / "explain")) {
    if (!e.is_directory()) continue;
    ++explained;
    EXPECT_TRUE(std::filesystem::exists(e.path() / "overlay.ppm"));
    EXPECT_TRUE(std::filesystem::exists(e.path() / "overlay.json"));
    EXPECT_TRUE(std::filesystem::exists(e.path() / "layer1.pgm"));
    EXPECT_TRUE(std::filesystem::exists(e.path() / "layer3.pgm"));
  }
  EXPECT_EQ(explained, 1u);

  const auto cmp = testutil::read_text(out / "compare/comparison.csv");
  std::size_t lines = 0;
  for (char ch : cmp) lines += ch == '\n';
  EXPECT_EQ(lines, 3u) << cmp;  // header, cnn, l1-logistic
}

}  // namespace
