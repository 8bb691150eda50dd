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

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraudcnn/baselines.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/explain.hpp"
#include "fraudcnn/features.hpp"
#include "fraudcnn/metrics.hpp"
#include "fraudcnn/synth.hpp"
#include "fraudcnn/train.hpp"

namespace fraudcnn {

struct PathsConfig {
  std::string data;        // panel CSV; defaults to <output>/synth/panel.csv
  std::string schema;      // defaults to <output>/synth/schema.csv
  std::string violations;  // defaults to <output>/synth/violations.csv
  std::string output = "run";
};

enum class SmoteOrder { AfterSplit, BeforeSplit };
enum class GrayStage { Raw, Standardized };
enum class ScalerFit { All, Train };

struct PrepareConfig {
  Mode mode = Mode::ExAnte;
  int target_year = 0;  // 0 = last panel year
  std::size_t min_years = 6;
  double sparse_threshold = 0.30;
  std::size_t impute_k = 5;
  bool gray_filter = true;
  double gray_quantile = 0.05;
  GrayStage gray_stage = GrayStage::Raw;
  std::size_t iforest_trees = 100;
  std::size_t iforest_psi = 256;
  ScalerFit scaler_fit = ScalerFit::All;
  bool smote = true;
  std::size_t smote_k = 5;
  SmoteOrder smote_order = SmoteOrder::AfterSplit;
  SplitSpec split;
};

struct ModelSection {
  std::size_t block1_channels = 32;
  std::size_t block2_channels = 64;
  std::size_t dense_hidden = 128;
  double conv_dropout = 0.25;
  double dense_dropout = 0.5;
};

struct ExplainConfig {
  std::string company;  // empty = first fraud company of the test split
  std::size_t scale = 4;
  Palette palette = Palette::Gray;
  bool separators = true;
  std::vector<std::size_t> layers{1, 4};
};

enum class BaselineProtocol { Temporal, Image };

struct BaselineConfig {
  BaselineProtocol protocol = BaselineProtocol::Temporal;
  double C = 1.0;
  std::size_t iters = 1000;
  double threshold = 0.35;
  YearRange train_years{2010, 2017};
  YearRange valid_years{2018, 2019};
  YearRange test_years{2020, 2021};
};

struct ExternalPredictions {
  std::string name;
  std::string path;
  double threshold = 0.5;
};

struct CompareConfig {
  std::vector<ExternalPredictions> external;
};

struct RunConfig {
  std::string preset = "exante-paper";
  std::uint64_t seed = 42;
  PathsConfig paths;
  SynthConfig synth;
  PrepareConfig prepare;
  ModelSection model;
  TrainHyper train;
  ThresholdPolicy threshold = ThresholdPolicy::manual(0.75);
  ExplainConfig explain;
  BaselineConfig baseline;
  CompareConfig compare;

  std::filesystem::path out() const { return paths.output; }
  std::string data_path() const { return paths.data.empty() ? (out() / "synth" / "panel.csv").string() : paths.data; }
  std::string schema_path() const {
    return paths.schema.empty() ? (out() / "synth" / "schema.csv").string() : paths.schema;
  }
  std::string violations_path() const {
    return paths.violations.empty() ? (out() / "synth" / "violations.csv").string() : paths.violations;
  }
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"exante-paper", "expost-paper", "initial-paper"};
  return names;
}

inline void apply_preset(RunConfig& c, const std::string& name) {
  if (name == "exante-paper") {
    c.prepare.mode = Mode::ExAnte;
    c.train.learning_rate = 0.0005;
    c.train.epochs = 8;
    c.train.batch_size = 64;
    c.threshold = ThresholdPolicy::manual(0.75);
  } else if (name == "expost-paper") {
    c.prepare.mode = Mode::ExPost;
    c.train.learning_rate = 0.001;
    c.train.epochs = 6;
    c.train.batch_size = 32;
    c.threshold = ThresholdPolicy::manual(0.45);
  } else if (name == "initial-paper") {
    c.prepare.mode = Mode::ExAnte;
    c.train.learning_rate = 0.01;
    c.train.epochs = 5;
    c.train.batch_size = 64;
    c.threshold = ThresholdPolicy::manual(0.5);
  } else {
    throw Error("unknown preset '" + name + "' (expected exante-paper, expost-paper or initial-paper)");
  }
  c.preset = name;
}

namespace detail {

// Reads the keys of one JSON object; anything left unread is an error.
class Section {
 public:
  Section(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j_.is_object(), "config: '" + label() + "' must be an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw Error("config: unknown key '" + qualified(k) + "'");
  }

  bool has(const std::string& k) {
    used_.insert(k);
    return j_.contains(k);
  }

  const nlohmann::json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  std::string qualified(const std::string& k) const { return where_.empty() ? k : where_ + "." + k; }

  template <typename T>
  void get(const std::string& k, T& out) {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    const auto bad = [&](const char* what) { throw Error("config: '" + qualified(k) + "' must be " + what); };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad("a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad("a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad("a number");
      out = v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) bad("a non-negative integer");
      out = v.get<T>();
    } else {
      if (!v.is_number_integer()) bad("an integer");
      out = v.get<T>();
    }
  }

  YearRange years(const std::string& k, YearRange def) {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
      throw Error("config: '" + qualified(k) + "' must be [first_year, last_year]");
    return {v[0].get<int>(), v[1].get<int>()};
  }

  std::string label() const { return where_.empty() ? "<root>" : where_; }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> used_;
};

template <typename E, typename F>
void get_enum(Section& s, const std::string& k, E& out, F parse) {
  std::string v;
  s.get(k, v);
  if (s.has(k) && !v.empty()) {
    try {
      out = parse(v);
    } catch (const Error& e) {
      throw Error("config: '" + s.qualified(k) + "': " + e.what());
    }
  }
}

inline SmoteOrder parse_smote_order(const std::string& s) {
  if (s == "after_split") return SmoteOrder::AfterSplit;
  if (s == "before_split") return SmoteOrder::BeforeSplit;
  throw Error("expected after_split or before_split, got '" + s + "'");
}

inline GrayStage parse_gray_stage(const std::string& s) {
  if (s == "raw") return GrayStage::Raw;
  if (s == "standardized") return GrayStage::Standardized;
  throw Error("expected raw or standardized, got '" + s + "'");
}

inline ScalerFit parse_scaler_fit(const std::string& s) {
  if (s == "all") return ScalerFit::All;
  if (s == "train") return ScalerFit::Train;
  throw Error("expected all or train, got '" + s + "'");
}

inline BaselineProtocol parse_protocol(const std::string& s) {
  if (s == "temporal") return BaselineProtocol::Temporal;
  if (s == "image") return BaselineProtocol::Image;
  throw Error("expected temporal or image, got '" + s + "'");
}

inline Mode parse_mode_checked(const std::string& s) {
  try {
    return parse_mode(s);
  } catch (const std::exception&) {
    throw Error("expected ExAnte or ExPost, got '" + s + "'");
  }
}

}  // namespace detail

inline std::string_view to_string(SmoteOrder o) { return o == SmoteOrder::AfterSplit ? "after_split" : "before_split"; }
inline std::string_view to_string(GrayStage g) { return g == GrayStage::Raw ? "raw" : "standardized"; }
inline std::string_view to_string(ScalerFit f) { return f == ScalerFit::All ? "all" : "train"; }
inline std::string_view to_string(BaselineProtocol p) { return p == BaselineProtocol::Temporal ? "temporal" : "image"; }
inline std::string_view to_string(Palette p) { return p == Palette::Gray ? "gray" : "hot"; }

// Strict parse: unknown keys and type mismatches are errors. The preset is
// applied first (the `preset` key, else `preset_override`, else exante-paper)
// and explicit keys then override it.
inline RunConfig parse_config_json(const nlohmann::json& j, const std::string& preset_override = {}) {
  RunConfig c;
  detail::Section root(j, "");
  std::string preset = "exante-paper";
  root.get("preset", preset);
  if (!preset_override.empty()) preset = preset_override;
  apply_preset(c, preset);
  root.get("seed", c.seed);
  c.synth.seed = c.prepare.split.seed = c.train.seed = c.seed;

  if (root.has("paths")) {
    detail::Section s(root.raw("paths"), "paths");
    s.get("data", c.paths.data);
    s.get("schema", c.paths.schema);
    s.get("violations", c.paths.violations);
    s.get("output", c.paths.output);
  }
  if (root.has("synth")) {
    detail::Section s(root.raw("synth"), "synth");
    auto& y = c.synth;
    s.get("n_companies", y.n_companies);
    s.get("n_years", y.n_years);
    s.get("start_year", y.start_year);
    s.get("f_fin", y.f_fin);
    s.get("f_esg", y.f_esg);
    s.get("f_ic", y.f_ic);
    s.get("ic_levels", y.ic_levels);
    s.get("fraud_rate", y.fraud_rate);
    s.get("band_strength", y.band_strength);
    s.get("cluster_strength", y.cluster_strength);
    s.get("missing_rate", y.missing_rate);
    s.get("gray_rate", y.gray_rate);
    s.get("gray_strength", y.gray_strength);
    s.get("bands_per_company", y.bands_per_company);
    s.get("band_width_min", y.band_width_min);
    s.get("band_width_max", y.band_width_max);
    s.get("block_years_min", y.block_years_min);
    s.get("block_years_max", y.block_years_max);
    s.get("block_width_min", y.block_width_min);
    s.get("block_width_max", y.block_width_max);
    s.get("recent_years", y.recent_years);
    detail::get_enum(s, "pattern", y.pattern, [](const std::string& v) { return parse_pattern(v); });
    s.get("seed", y.seed);
  }
  if (root.has("prepare")) {
    detail::Section s(root.raw("prepare"), "prepare");
    auto& p = c.prepare;
    detail::get_enum(s, "mode", p.mode, detail::parse_mode_checked);
    s.get("target_year", p.target_year);
    s.get("min_years", p.min_years);
    s.get("sparse_threshold", p.sparse_threshold);
    s.get("impute_k", p.impute_k);
    s.get("gray_filter", p.gray_filter);
    s.get("gray_quantile", p.gray_quantile);
    detail::get_enum(s, "gray_stage", p.gray_stage, detail::parse_gray_stage);
    s.get("iforest_trees", p.iforest_trees);
    s.get("iforest_psi", p.iforest_psi);
    detail::get_enum(s, "scaler_fit", p.scaler_fit, detail::parse_scaler_fit);
    s.get("smote", p.smote);
    s.get("smote_k", p.smote_k);
    detail::get_enum(s, "smote_order", p.smote_order, detail::parse_smote_order);
    if (s.has("split")) {
      detail::Section t(s.raw("split"), "prepare.split");
      t.get("train", p.split.train);
      t.get("valid", p.split.valid);
      t.get("test", p.split.test);
      t.get("stratified", p.split.stratified);
      t.get("seed", p.split.seed);
    }
  }
  if (root.has("model")) {
    detail::Section s(root.raw("model"), "model");
    s.get("block1_channels", c.model.block1_channels);
    s.get("block2_channels", c.model.block2_channels);
    s.get("dense_hidden", c.model.dense_hidden);
    s.get("conv_dropout", c.model.conv_dropout);
    s.get("dense_dropout", c.model.dense_dropout);
  }
  if (root.has("train")) {
    detail::Section s(root.raw("train"), "train");
    s.get("learning_rate", c.train.learning_rate);
    s.get("epochs", c.train.epochs);
    s.get("batch_size", c.train.batch_size);
    s.get("seed", c.train.seed);
  }
  if (root.has("threshold")) {
    detail::Section s(root.raw("threshold"), "threshold");
    std::string policy = c.threshold.kind == ThresholdPolicy::Kind::MaxF2 ? "max_f2" : "manual";
    s.get("policy", policy);
    if (policy == "max_f2")
      c.threshold.kind = ThresholdPolicy::Kind::MaxF2;
    else if (policy == "manual")
      c.threshold.kind = ThresholdPolicy::Kind::Manual;
    else
      throw Error("config: 'threshold.policy' must be max_f2 or manual, got '" + policy + "'");
    s.get("value", c.threshold.value);
  }
  if (root.has("explain")) {
    detail::Section s(root.raw("explain"), "explain");
    s.get("company", c.explain.company);
    s.get("scale", c.explain.scale);
    detail::get_enum(s, "palette", c.explain.palette, [](const std::string& v) { return parse_palette(v); });
    s.get("separators", c.explain.separators);
    if (s.has("layers")) {
      const auto& v = s.raw("layers");
      require(v.is_array(), "config: 'explain.layers' must be an array of integers");
      c.explain.layers.clear();
      for (const auto& e : v) {
        require(e.is_number_unsigned(), "config: 'explain.layers' must be an array of integers");
        c.explain.layers.push_back(e.get<std::size_t>());
      }
    }
  }
  if (root.has("baseline")) {
    detail::Section s(root.raw("baseline"), "baseline");
    auto& b = c.baseline;
    detail::get_enum(s, "protocol", b.protocol, detail::parse_protocol);
    s.get("C", b.C);
    s.get("iters", b.iters);
    s.get("threshold", b.threshold);
    b.train_years = s.years("train_years", b.train_years);
    b.valid_years = s.years("valid_years", b.valid_years);
    b.test_years = s.years("test_years", b.test_years);
  }
  if (root.has("compare")) {
    detail::Section s(root.raw("compare"), "compare");
    if (s.has("external")) {
      const auto& arr = s.raw("external");
      require(arr.is_array(), "config: 'compare.external' must be an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        detail::Section e(arr[i], "compare.external[" + std::to_string(i) + "]");
        ExternalPredictions x;
        e.get("name", x.name);
        e.get("path", x.path);
        e.get("threshold", x.threshold);
        require(!x.name.empty() && !x.path.empty(), "config: '" + e.label() + "' needs name and path");
        c.compare.external.push_back(x);
      }
    }
  }
  return c;
}

// Command-line --seed: one value for every stochastic stage.
inline void apply_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = c.synth.seed = c.prepare.split.seed = c.train.seed = seed;
}

inline RunConfig parse_config(const std::string& path, const std::string& preset_override = {}) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const auto text = ss.str();
  nlohmann::json j;
  try {
    j = text.find_first_not_of(" \t\r\n") == std::string::npos ? nlohmann::json::object() : nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config: malformed JSON in '" + path + "': " + e.what());
  }
  return parse_config_json(j, preset_override);
}

// Fully resolved configuration, the form echoed next to run artifacts.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  j["paths"] = {{"data", c.data_path()},
                {"schema", c.schema_path()},
                {"violations", c.violations_path()},
                {"output", c.paths.output}};
  j["synth"] = to_json(c.synth);
  const auto& p = c.prepare;
  j["prepare"] = {{"mode", to_string(p.mode)},
                  {"target_year", p.target_year},
                  {"min_years", p.min_years},
                  {"sparse_threshold", p.sparse_threshold},
                  {"impute_k", p.impute_k},
                  {"gray_filter", p.gray_filter},
                  {"gray_quantile", p.gray_quantile},
                  {"gray_stage", to_string(p.gray_stage)},
                  {"iforest_trees", p.iforest_trees},
                  {"iforest_psi", p.iforest_psi},
                  {"scaler_fit", to_string(p.scaler_fit)},
                  {"smote", p.smote},
                  {"smote_k", p.smote_k},
                  {"smote_order", to_string(p.smote_order)},
                  {"split",
                   {{"train", p.split.train},
                    {"valid", p.split.valid},
                    {"test", p.split.test},
                    {"stratified", p.split.stratified},
                    {"seed", p.split.seed}}}};
  j["model"] = {{"block1_channels", c.model.block1_channels},
                {"block2_channels", c.model.block2_channels},
                {"dense_hidden", c.model.dense_hidden},
                {"conv_dropout", c.model.conv_dropout},
                {"dense_dropout", c.model.dense_dropout}};
  j["train"] = c.train.to_json();
  j["threshold"] = {{"policy", c.threshold.kind == ThresholdPolicy::Kind::MaxF2 ? "max_f2" : "manual"},
                    {"value", c.threshold.value}};
  j["explain"] = {{"company", c.explain.company},
                  {"scale", c.explain.scale},
                  {"palette", to_string(c.explain.palette)},
                  {"separators", c.explain.separators},
                  {"layers", c.explain.layers}};
  const auto& b = c.baseline;
  j["baseline"] = {{"protocol", to_string(b.protocol)},
                   {"C", b.C},
                   {"iters", b.iters},
                   {"threshold", b.threshold},
                   {"train_years", {b.train_years.first, b.train_years.last}},
                   {"valid_years", {b.valid_years.first, b.valid_years.last}},
                   {"test_years", {b.test_years.first, b.test_years.last}}};
  auto ext = nlohmann::ordered_json::array();
  for (const auto& e : c.compare.external) ext.push_back({{"name", e.name}, {"path", e.path}, {"threshold", e.threshold}});
  j["compare"] = {{"external", ext}};
  return j;
}

}  // namespace fraudcnn
