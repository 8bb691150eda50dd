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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraudcnn/anomaly.hpp"
#include "fraudcnn/baselines.hpp"
#include "fraudcnn/checkpoint.hpp"
#include "fraudcnn/config.hpp"
#include "fraudcnn/data_model.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/explain.hpp"
#include "fraudcnn/features.hpp"
#include "fraudcnn/metrics.hpp"
#include "fraudcnn/model.hpp"
#include "fraudcnn/netpbm.hpp"
#include "fraudcnn/synth.hpp"
#include "fraudcnn/train.hpp"

namespace fraudcnn {

enum class Command { Synth, Prepare, Train, Tune, Eval, Explain, Baseline, Compare };

inline const std::vector<std::pair<std::string, Command>>& command_names() {
  static const std::vector<std::pair<std::string, Command>> names{
      {"synth", Command::Synth}, {"prepare", Command::Prepare},   {"train", Command::Train},
      {"tune", Command::Tune},   {"eval", Command::Eval},         {"explain", Command::Explain},
      {"baseline", Command::Baseline}, {"compare", Command::Compare}};
  return names;
}

inline Command parse_command(const std::string& s) {
  for (const auto& [name, c] : command_names())
    if (name == s) return c;
  throw Error("unknown command '" + s + "'");
}

inline std::string to_string(Command c) {
  for (const auto& [name, v] : command_names())
    if (v == c) return name;
  return "?";
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

inline std::string file_digest(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  return hex64(h);
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

// Records inputs and outputs of one command; written as <dir>/manifest.json.
class Manifest {
 public:
  Manifest(const RunConfig& cfg, Command cmd) : cfg_(cfg), cmd_(cmd) {}

  void input(const std::filesystem::path& p) { inputs_.push_back(p); }
  void output(const std::filesystem::path& p) { outputs_.push_back(p); }

  void write(const std::filesystem::path& dir) const {
    nlohmann::ordered_json j;
    j["command"] = to_string(cmd_);
    j["config_hash"] = config_hash(cfg_);
    const auto list = [&](const std::vector<std::filesystem::path>& ps) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& p : ps) {
        nlohmann::ordered_json e{{"path", display(p)}};
        if (std::filesystem::is_regular_file(p)) {
          e["bytes"] = std::filesystem::file_size(p);
          e["fnv1a64"] = file_digest(p);
        } else if (std::filesystem::is_directory(p)) {
          std::uint64_t h = 0xcbf29ce484222325ULL;
          std::vector<std::filesystem::path> files;
          for (const auto& f : std::filesystem::recursive_directory_iterator(p))
            if (f.is_regular_file()) files.push_back(f.path());
          std::sort(files.begin(), files.end());
          for (const auto& f : files) h = fnv1a(std::filesystem::relative(f, p).generic_string() + file_digest(f), h);
          e["files"] = files.size();
          e["fnv1a64"] = hex64(h);
        }
        arr.push_back(e);
      }
      return arr;
    };
    j["inputs"] = list(inputs_);
    j["outputs"] = list(outputs_);
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "manifest.json") << j.dump(2) << '\n';
  }

 private:
  std::string display(const std::filesystem::path& p) const {
    const auto rel = p.lexically_relative(cfg_.out());
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
  }

  const RunConfig& cfg_;
  Command cmd_;
  std::vector<std::filesystem::path> inputs_, outputs_;
};

inline void write_json(const std::filesystem::path& p, const nlohmann::ordered_json& j) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& p, const std::string& hint) {
  std::ifstream in(p);
  if (!in) throw Error("missing '" + p.string() + "'; " + hint);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed '" + p.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Panel preprocessing and image preparation

struct LoadedPanel {
  PanelDataset panel;  // labels attached
  std::size_t ignored_violations = 0;
  std::size_t unmatched_labels = 0;
};

inline LoadedPanel load_labeled_panel(const RunConfig& cfg) {
  for (const auto& p : {cfg.data_path(), cfg.schema_path(), cfg.violations_path()})
    require(std::filesystem::exists(p), "input file '" + p + "' does not exist (run synth or set paths)");
  LoadedPanel out;
  out.panel = load_panel_csv(cfg.data_path(), cfg.schema_path());
  const auto violations = load_violations_csv(cfg.violations_path());
  auto derived = derive_labels(violations);
  out.ignored_violations = derived.ignored_records;
  std::map<RowKey, FraudLabel> fraud_only;
  for (auto& [k, v] : derived.labels)
    if (v.is_fraud) fraud_only.emplace(k, v);
  out.unmatched_labels = out.panel.attach_labels(fraud_only);
  return out;
}

struct PreparedData {
  PanelDataset panel;  // imputed, gray-filtered, standardized, canonical columns
  ImputeReport impute;
  std::vector<RemovedRow> gray_removed;
  ZScaler scaler;
  std::size_t features_in = 0, features_kept = 0;
  ImageSet images;  // all qualifying companies
  Split split;      // after SMOTE where configured
  SmoteReport smote;
  int target_year = 0;
};

inline PanelDataset gray_filter_step(const PanelDataset& ds, const PrepareConfig& p, std::uint64_t seed,
                                     std::vector<RemovedRow>& removed) {
  const auto forest = fit_iforest_non_fraud(ds, p.iforest_trees, p.iforest_psi, derive_seed(seed, 0x1f));
  auto res = filter_gray(ds, forest, p.gray_quantile);
  removed = std::move(res.removed);
  return std::move(res.dataset);
}

// Panel-level steps shared by prepare and the temporal baseline: drop sparse
// features, impute, gray filter, standardize, canonical column order.
inline PreparedData preprocess_panel(const PanelDataset& raw, const RunConfig& cfg, std::ostream& log) {
  const auto& p = cfg.prepare;
  PreparedData d;
  d.features_in = raw.features();
  auto ds = drop_sparse_features(raw, p.sparse_threshold);
  d.features_kept = ds.features();
  require(p.impute_k >= 1, "prepare: impute_k must be >= 1");
  ds = impute_missing(ds, p.impute_k, &d.impute);
  ds = to_canonical_order(ds);
  const auto years = ds.years();
  require(!years.empty(), "prepare: empty panel");
  d.target_year = p.target_year != 0 ? p.target_year : years.back();
  log << "prepare: " << ds.rows() << " rows, " << d.features_kept << "/" << d.features_in << " features kept, "
      << d.impute.cells_filled << " cells imputed, " << d.impute.companies_deleted << " companies deleted\n";

  if (p.gray_filter && p.gray_stage == GrayStage::Raw) ds = gray_filter_step(ds, p, cfg.seed, d.gray_removed);

  std::vector<std::size_t> fit_rows;
  if (p.scaler_fit == ScalerFit::Train) {
    // statistics from the companies that the split assigns to training
    const auto provisional = to_images(ds, p.mode, d.target_year, p.min_years);
    const auto split = stratified_split(provisional, p.split);
    std::set<std::string> train_ids(split.train.ids.begin(), split.train.ids.end());
    for (std::size_t r = 0; r < ds.rows(); ++r)
      if (train_ids.count(ds.keys[r].company)) fit_rows.push_back(r);
  }
  d.scaler = ZScaler::fit(ds, fit_rows);
  ds = d.scaler.apply(ds);

  if (p.gray_filter && p.gray_stage == GrayStage::Standardized)
    ds = gray_filter_step(ds, p, cfg.seed, d.gray_removed);
  if (p.gray_filter) log << "prepare: gray filter removed " << d.gray_removed.size() << " rows\n";
  d.panel = std::move(ds);
  return d;
}

inline PreparedData prepare_images(const PanelDataset& raw, const RunConfig& cfg, std::ostream& log) {
  auto d = preprocess_panel(raw, cfg, log);
  const auto& p = cfg.prepare;
  d.images = to_images(d.panel, p.mode, d.target_year, p.min_years);
  log << "prepare: " << d.images.size() << " images of " << d.images.height << "x" << d.images.width << " ("
      << d.images.count(1) << " fraud)\n";
  const auto smote_seed = derive_seed(cfg.seed, 0x5307e);
  if (p.smote && p.smote_order == SmoteOrder::BeforeSplit) {
    const auto balanced = smote_balance(d.images, p.smote_k, smote_seed, &d.smote);
    d.split = stratified_split(balanced, p.split);
  } else {
    d.split = stratified_split(d.images, p.split);
    if (p.smote) d.split.train = smote_balance(d.split.train, p.smote_k, smote_seed, &d.smote);
  }
  log << "prepare: split train " << d.split.train.count(1) << "/" << d.split.train.count(0) << ", valid "
      << d.split.valid.count(1) << "/" << d.split.valid.count(0) << ", test " << d.split.test.count(1) << "/"
      << d.split.test.count(0) << " (fraud/normal)\n";
  return d;
}

inline ModelConfig model_config_for(const RunConfig& cfg, const ImageSet& s) {
  ModelConfig m;
  m.mode = s.mode;
  m.input_h = s.height;
  m.input_w = s.width;
  m.block1_channels = cfg.model.block1_channels;
  m.block2_channels = cfg.model.block2_channels;
  m.dense_hidden = cfg.model.dense_hidden;
  m.conv_dropout = cfg.model.conv_dropout;
  m.dense_dropout = cfg.model.dense_dropout;
  m.seed = derive_seed(cfg.seed, 0x1417);
  return m;
}

inline TrainReport train_model(Model<float>& model, const RunConfig& cfg, const Split& split, std::ostream& log) {
  auto hyper = cfg.train;
  return train_loop(model, split.train, split.valid, hyper, [&](const EpochLog& e) {
    log << "train: epoch " << e.epoch << "/" << hyper.epochs << " loss " << e.train_loss << " auc " << e.train_auc
        << " valid_loss " << e.valid_loss << " valid_auc " << e.valid_auc << '\n';
  });
}

struct ThresholdChoice {
  double threshold = 0.5;
  std::optional<ThresholdCurve> curve;  // validation curve when swept
};

inline ThresholdChoice choose_threshold(const std::vector<float>& valid_probs, const std::vector<int>& valid_labels,
                                        const ThresholdPolicy& policy) {
  ThresholdChoice c;
  const bool both = std::count(valid_labels.begin(), valid_labels.end(), 1) > 0 &&
                    std::count(valid_labels.begin(), valid_labels.end(), 0) > 0;
  if (both) c.curve = threshold_sweep(valid_probs, valid_labels);
  if (policy.kind == ThresholdPolicy::Kind::MaxF2) {
    require(both, "tune: MaxF2 needs both classes in the validation split");
    c.threshold = select_threshold(*c.curve, policy);
  } else {
    c.threshold = policy.value;
  }
  return c;
}

inline std::vector<KeyedPrediction> keyed(const ImageSet& s, const std::vector<float>& probs) {
  std::vector<KeyedPrediction> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back({{s.ids[i], s.target_year}, static_cast<double>(probs[i])});
  return out;
}

// Flattened images as a design matrix (row = company, columns = T*F pixels).
inline Design design_from_images(const ImageSet& s) {
  Design d;
  d.rows = s.size();
  d.cols = s.pixel_count();
  d.X.reserve(d.rows * d.cols);
  for (std::size_t i = 0; i < s.size(); ++i) {
    d.X.insert(d.X.end(), s.pixels[i].begin(), s.pixels[i].end());
    d.y.push_back(s.labels[i]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Commands

namespace cmd {

namespace fs = std::filesystem;

inline fs::path dir(const RunConfig& c, const char* name) { return c.out() / name; }

inline void require_stage(const fs::path& p, const std::string& cmd, const std::string& stage) {
  if (!fs::exists(p)) throw Error(cmd + ": " + p.string() + " not found; run " + stage + " first");
}

inline void synth(const RunConfig& cfg, std::ostream& log) {
  const auto out = dir(cfg, "synth");
  const auto data = generate_synthetic(cfg.synth);
  write_synthetic(data, out);
  log << "synth: " << cfg.synth.n_companies << " companies, " << data.truth.fraud_blocks.size() << " fraud, "
      << data.truth.gray_blocks.size() << " gray, " << data.panel.rows() << " rows -> " << out.string() << '\n';
  Manifest m(cfg, Command::Synth);
  for (const char* f : {"panel.csv", "schema.csv", "violations.csv", "ground_truth.json"}) m.output(out / f);
  m.write(out);
}

inline void prepare(const RunConfig& cfg, std::ostream& log) {
  const auto out = dir(cfg, "prepared");
  const auto loaded = load_labeled_panel(cfg);
  log << "prepare: " << loaded.panel.rows() << " panel rows, " << loaded.panel.labels.size() << " fraud rows, "
      << loaded.ignored_violations << " non-fraud violation records ignored\n";
  const auto d = prepare_images(loaded.panel, cfg, log);
  fs::remove_all(out);
  save_image_set(d.split.train, out / "train");
  save_image_set(d.split.valid, out / "valid");
  save_image_set(d.split.test, out / "test");
  write_removed_csv(d.gray_removed, (out / "gray_removed.csv").string());
  {
    csv::Writer w((out / "split.csv").string());
    w.row({"company_id", "label", "split"});
    for (const auto* s : {&d.split.train, &d.split.valid, &d.split.test}) {
      const char* name = s == &d.split.train ? "train" : s == &d.split.valid ? "valid" : "test";
      for (std::size_t i = 0; i < s->size(); ++i) w.row({s->ids[i], std::to_string(s->labels[i]), name});
    }
  }
  nlohmann::ordered_json report{{"target_year", d.target_year},
                                {"mode", to_string(cfg.prepare.mode)},
                                {"features_in", d.features_in},
                                {"features_kept", d.features_kept},
                                {"impute",
                                 {{"cells_filled", d.impute.cells_filled},
                                  {"empty_rows_deleted", d.impute.empty_rows_deleted},
                                  {"companies_deleted", d.impute.companies_deleted}}},
                                {"gray_removed", d.gray_removed.size()},
                                {"images", d.images.size()},
                                {"fraud_images", d.images.count(1)},
                                {"smote_synthesized", d.smote.synthesized},
                                {"smote_order", to_string(cfg.prepare.smote_order)},
                                {"train", {{"fraud", d.split.train.count(1)}, {"normal", d.split.train.count(0)}}},
                                {"valid", {{"fraud", d.split.valid.count(1)}, {"normal", d.split.valid.count(0)}}},
                                {"test", {{"fraud", d.split.test.count(1)}, {"normal", d.split.test.count(0)}}}};
  write_json(out / "prepare_report.json", report);
  Manifest m(cfg, Command::Prepare);
  m.input(cfg.data_path());
  m.input(cfg.schema_path());
  m.input(cfg.violations_path());
  for (const char* f : {"train", "valid", "test", "gray_removed.csv", "split.csv", "prepare_report.json"})
    m.output(out / f);
  m.write(out);
}

inline Split load_split(const RunConfig& cfg, const std::string& who) {
  const auto in = dir(cfg, "prepared");
  require_stage(in / "train" / "meta.json", who, "prepare");
  Split s;
  s.train = load_image_set(in / "train");
  s.valid = load_image_set(in / "valid");
  s.test = load_image_set(in / "test");
  return s;
}

inline void train(const RunConfig& cfg, std::ostream& log) {
  const auto split = load_split(cfg, "train");
  const auto out = dir(cfg, "train");
  fs::create_directories(out);
  Model<float> model(model_config_for(cfg, split.train));
  const auto report = train_model(model, cfg, split, log);
  nlohmann::json extra{{"hyper", report.hyper.to_json()}, {"schema_features", split.train.width}};
  save_checkpoint(model, out / "model.ckpt", extra);
  write_report_csv(report, (out / "train_report.csv").string());
  Manifest m(cfg, Command::Train);
  m.input(dir(cfg, "prepared") / "train");
  m.input(dir(cfg, "prepared") / "valid");
  m.output(out / "model.ckpt");
  m.output(out / "train_report.csv");
  m.write(out);
}

inline LoadedCheckpoint load_trained(const RunConfig& cfg, const std::string& who) {
  const auto p = dir(cfg, "train") / "model.ckpt";
  require_stage(p, who, "train");
  return load_checkpoint(p);
}

inline void tune(const RunConfig& cfg, std::ostream& log) {
  const auto ck = load_trained(cfg, "tune");
  require_stage(dir(cfg, "prepared") / "valid" / "meta.json", "tune", "prepare");
  const auto valid = load_image_set(dir(cfg, "prepared") / "valid");
  const auto probs = ck.model.predict(valid.pixels);
  const auto choice = choose_threshold(probs, valid.labels, cfg.threshold);
  const auto out = dir(cfg, "tune");
  fs::create_directories(out);
  Manifest m(cfg, Command::Tune);
  m.input(dir(cfg, "train") / "model.ckpt");
  m.input(dir(cfg, "prepared") / "valid");
  if (choice.curve) {
    write_curve_csv(*choice.curve, (out / "threshold_curve_valid.csv").string());
    m.output(out / "threshold_curve_valid.csv");
  }
  nlohmann::ordered_json j{
      {"policy", cfg.threshold.kind == ThresholdPolicy::Kind::MaxF2 ? "max_f2" : "manual"},
      {"threshold", choice.threshold}};
  if (choice.curve) j["valid_auc"] = choice.curve->rows.front().auc;
  write_json(out / "threshold.json", j);
  m.output(out / "threshold.json");
  m.write(out);
  log << "tune: threshold " << choice.threshold << '\n';
}

inline double resolved_threshold(const RunConfig& cfg) {
  if (cfg.threshold.kind == ThresholdPolicy::Kind::Manual) return cfg.threshold.value;
  const auto j = read_json(dir(cfg, "tune") / "threshold.json", "run tune first");
  return j.at("threshold").get<double>();
}

inline void eval(const RunConfig& cfg, std::ostream& log) {
  const auto ck = load_trained(cfg, "eval");
  require_stage(dir(cfg, "prepared") / "test" / "meta.json", "eval", "prepare");
  const auto test = load_image_set(dir(cfg, "prepared") / "test");
  const double threshold = resolved_threshold(cfg);
  const auto e = evaluate(ck.model, test, threshold);
  const auto out = dir(cfg, "eval");
  fs::create_directories(out);
  auto j = e.metrics.to_json();
  j["n"] = test.size();
  j["n_fraud"] = test.count(1);
  write_json(out / "metrics.json", j);
  const auto preds = keyed(test, e.probs);
  write_predictions_csv(preds, (out / "test_predictions.csv").string());
  write_histogram_csv(std::span<const float>(e.probs), std::span<const int>(test.labels),
                      (out / "histogram.csv").string());
  Manifest m(cfg, Command::Eval);
  m.input(dir(cfg, "train") / "model.ckpt");
  m.input(dir(cfg, "prepared") / "test");
  if (test.count(0) > 0 && test.count(1) > 0) {
    write_curve_csv(threshold_sweep(e.probs, test.labels), (out / "threshold_curve_test.csv").string());
    m.output(out / "threshold_curve_test.csv");
  }
  for (const char* f : {"metrics.json", "test_predictions.csv", "histogram.csv"}) m.output(out / f);
  m.write(out);
  log << "eval: auc " << e.metrics.auc << " recall " << e.metrics.recall << " precision " << e.metrics.precision
      << " f2 " << e.metrics.fbeta << " at threshold " << threshold << '\n';
}

inline void explain(const RunConfig& cfg, std::ostream& log) {
  const auto ck = load_trained(cfg, "explain");
  const auto split = load_split(cfg, "explain");
  const ImageSet* set = nullptr;
  std::size_t idx = 0;
  if (cfg.explain.company.empty()) {
    set = &split.test;
    require(split.test.size() > 0, "explain: empty test split");
    const auto it = std::find(split.test.labels.begin(), split.test.labels.end(), 1);
    idx = it == split.test.labels.end() ? 0 : static_cast<std::size_t>(it - split.test.labels.begin());
  } else {
    for (const auto* s : {&split.test, &split.valid, &split.train})
      if (auto i = s->find(cfg.explain.company)) {
        set = s;
        idx = *i;
        break;
      }
    require(set != nullptr, "explain: company '" + cfg.explain.company + "' is not in the prepared data");
  }
  const auto& company = set->ids[idx];
  const auto& img = set->pixels[idx];
  GradCamParts<float> parts;
  const auto heat = gradcam(ck.model, std::span<const float>(img), &parts);
  const auto ov = upsample_overlay(heat, img, set->height, set->schema, cfg.explain.scale, cfg.explain.palette,
                                   cfg.explain.separators);
  std::string safe = company;
  std::replace(safe.begin(), safe.end(), ':', '_');
  const auto out = dir(cfg, "explain") / safe;
  fs::create_directories(out);
  Manifest m(cfg, Command::Explain);
  m.input(dir(cfg, "train") / "model.ckpt");
  write_ppm(ov.image, (out / "overlay.ppm").string());
  write_pgm({heat.height, heat.width, heat.values}, (out / "heatmap.pgm").string());
  auto side = overlay_sidecar(ov);
  const auto prob = ck.model.predict(std::vector<std::vector<float>>{img}).front();
  side["company_id"] = company;
  side["label"] = set->labels[idx];
  side["prob"] = prob;
  side["logit"] = parts.logit;
  side["heatmap"] = {{"height", heat.height}, {"width", heat.width}, {"source_layer", heat.source_layer}};
  write_json(out / "overlay.json", side);
  for (const char* f : {"overlay.ppm", "heatmap.pgm", "overlay.json"}) m.output(out / f);
  for (auto layer : cfg.explain.layers) {
    const auto g = layer_activations(ck.model, std::span<const float>(img), layer);
    const auto name = "layer" + std::to_string(layer) + ".pgm";
    write_pgm(g.grid, (out / name).string());
    m.output(out / name);
  }
  m.write(out);
  log << "explain: " << company << " (label " << set->labels[idx] << ", prob " << prob << ") -> " << out.string()
      << '\n';
}

inline void baseline(const RunConfig& cfg, std::ostream& log) {
  const auto& b = cfg.baseline;
  const auto out = dir(cfg, "baseline");
  fs::create_directories(out);
  Manifest m(cfg, Command::Baseline);
  Design train_d, test_d;
  std::vector<RowKey> test_keys;
  if (b.protocol == BaselineProtocol::Temporal) {
    const auto loaded = load_labeled_panel(cfg);
    m.input(cfg.data_path());
    m.input(cfg.schema_path());
    m.input(cfg.violations_path());
    const auto d = preprocess_panel(loaded.panel, cfg, log);
    const auto ts = temporal_split(d.panel, b.train_years, b.valid_years, b.test_years);
    require(!ts.train.empty() && !ts.test.empty(), "baseline: no panel rows in the train or test year range");
    train_d = design_from_rows(d.panel, ts.train);
    test_d = design_from_rows(d.panel, ts.test);
    for (auto r : ts.test) test_keys.push_back(d.panel.keys[r]);
  } else {
    const auto split = load_split(cfg, "baseline");
    m.input(dir(cfg, "prepared") / "train");
    m.input(dir(cfg, "prepared") / "test");
    train_d = design_from_images(split.train);
    test_d = design_from_images(split.test);
    for (const auto& id : split.test.ids) test_keys.push_back({id, split.test.target_year});
  }
  L1FitReport fit;
  const auto model = fit_l1_logreg(train_d, b.C, b.iters, cfg.seed, &fit);
  const auto pred = predict_binary(model, test_d, b.threshold);
  std::vector<KeyedPrediction> preds;
  for (std::size_t i = 0; i < test_keys.size(); ++i) preds.push_back({test_keys[i], pred.probs[i]});
  write_predictions_csv(preds, (out / "predictions.csv").string());
  auto metrics = classification_metrics(pred.probs, test_d.y, b.threshold).to_json();
  metrics["n"] = test_d.rows;
  metrics["nonzero_weights"] = model.nonzero();
  metrics["iterations"] = fit.iterations;
  metrics["converged"] = fit.converged;
  metrics["protocol"] = to_string(b.protocol);
  write_json(out / "metrics.json", metrics);
  m.output(out / "predictions.csv");
  m.output(out / "metrics.json");
  m.write(out);
  log << "baseline: " << to_string(b.protocol) << " L1-logistic, " << model.nonzero() << " nonzero weights, auc "
      << metrics["auc"].dump() << '\n';
}

inline void compare(const RunConfig& cfg, std::ostream& log) {
  const auto out = dir(cfg, "compare");
  const auto cnn_preds = dir(cfg, "eval") / "test_predictions.csv";
  require_stage(cnn_preds, "compare", "eval");
  const auto base_preds = dir(cfg, "baseline") / "predictions.csv";
  require_stage(base_preds, "compare", "baseline");
  const auto loaded = load_labeled_panel(cfg);
  Manifest m(cfg, Command::Compare);
  std::vector<ComparisonRow> rows;
  const auto add = [&](const std::string& name, const fs::path& p, double threshold) {
    std::size_t unmatched = 0;
    const auto preds = load_predictions_csv(p.string());
    rows.push_back(score_keyed(name, preds, loaded.panel, threshold, &unmatched));
    if (unmatched) log << "compare: " << name << ": " << unmatched << " predictions without a panel row skipped\n";
    m.input(p);
  };
  const auto cnn_metrics = read_json(dir(cfg, "eval") / "metrics.json", "run eval first");
  add("cnn", cnn_preds, cnn_metrics.at("threshold").get<double>());
  add("l1_logistic", base_preds, cfg.baseline.threshold);
  for (const auto& e : cfg.compare.external) {
    require(fs::exists(e.path), "compare: external predictions '" + e.path + "' do not exist");
    add(e.name, e.path, e.threshold);
  }
  fs::create_directories(out);
  write_comparison_csv(rows, (out / "comparison.csv").string());
  m.output(out / "comparison.csv");
  m.write(out);
  for (const auto& r : rows)
    log << "compare: " << r.model << " n " << r.n << " auc " << r.metrics.auc << " recall " << r.metrics.recall
        << '\n';
}

}  // namespace cmd

// Echoes the resolved configuration and dispatches one command.
inline void run(Command c, const RunConfig& cfg, std::ostream& log) {
  std::filesystem::create_directories(cfg.out());
  write_json(cfg.out() / "config.resolved.json", to_json(cfg));
  switch (c) {
    case Command::Synth: cmd::synth(cfg, log); break;
    case Command::Prepare: cmd::prepare(cfg, log); break;
    case Command::Train: cmd::train(cfg, log); break;
    case Command::Tune: cmd::tune(cfg, log); break;
    case Command::Eval: cmd::eval(cfg, log); break;
    case Command::Explain: cmd::explain(cfg, log); break;
    case Command::Baseline: cmd::baseline(cfg, log); break;
    case Command::Compare: cmd::compare(cfg, log); break;
  }
}

}  // namespace fraudcnn
