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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraudcnn/data_model.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/rng.hpp"

namespace fraudcnn {

enum class SynthPattern { Additive, Interaction };

inline std::string_view to_string(SynthPattern p) { return p == SynthPattern::Additive ? "additive" : "interaction"; }

inline SynthPattern parse_pattern(std::string_view s) {
  if (s == "additive") return SynthPattern::Additive;
  if (s == "interaction") return SynthPattern::Interaction;
  throw Error("unknown synth pattern '" + std::string(s) + "' (expected additive or interaction)");
}

struct SynthConfig {
  std::size_t n_companies = 1436;
  std::size_t n_years = 13;  // the last year is the target year
  int start_year = 2010;
  std::size_t f_fin = 200;
  std::size_t f_esg = 33;
  std::size_t f_ic = 50;
  std::size_t ic_levels = 3;
  double fraud_rate = 0.048;
  double band_strength = 1.0;
  double cluster_strength = 3.0;
  double missing_rate = 0.02;
  double gray_rate = 0.02;
  double gray_strength = 0.5;  // multiplier on cluster_strength
  std::size_t bands_per_company = 3;
  std::size_t band_width_min = 2, band_width_max = 6;
  std::size_t block_years_min = 2, block_years_max = 3;
  std::size_t block_width_min = 24, block_width_max = 48;
  std::size_t recent_years = 3;  // blocks live in the last `recent_years` pre-target years
  SynthPattern pattern = SynthPattern::Additive;
  std::uint64_t seed = 42;

  int target_year() const { return start_year + static_cast<int>(n_years) - 1; }
  std::size_t n_continuous() const { return f_fin + f_esg; }
  std::size_t n_features() const { return f_fin + f_esg + f_ic; }
  std::size_t n_fraud() const { return static_cast<std::size_t>(std::llround(fraud_rate * n_companies)); }

  void validate() const {
    const auto unit = [](double v, const char* name) {
      require(v >= 0.0 && v < 1.0, std::string("synth: ") + name + " must be in [0, 1)");
    };
    unit(fraud_rate, "fraud_rate");
    unit(missing_rate, "missing_rate");
    unit(gray_rate, "gray_rate");
    require(n_companies >= 1 && n_years >= 1 && f_fin >= 1 && f_esg >= 1 && f_ic >= 1 && ic_levels >= 1,
            "synth: all counts must be >= 1");
    require(std::isfinite(band_strength) && std::isfinite(cluster_strength) && std::isfinite(gray_strength),
            "synth: strengths must be finite");
    require(block_years_min >= 1 && block_years_min <= block_years_max && block_width_min >= 1 &&
                block_width_min <= block_width_max && band_width_min >= 1 && band_width_min <= band_width_max,
            "synth: window size ranges must be non-empty");
    require(recent_years + 1 <= n_years, "synth: recent-year window larger than the panel");
    require(block_years_max <= recent_years, "synth: block height exceeds the recent-year window");
    require(block_width_max <= n_continuous(), "synth: block width exceeds the continuous features");
    require(band_width_max <= n_continuous(), "synth: band width exceeds the continuous features");
    require(n_fraud() + static_cast<std::size_t>(std::llround(gray_rate * n_companies)) <= n_companies,
            "synth: fraud and gray companies exceed the panel");
  }
};

inline nlohmann::ordered_json to_json(const SynthConfig& c) {
  return {{"n_companies", c.n_companies},
          {"n_years", c.n_years},
          {"start_year", c.start_year},
          {"f_fin", c.f_fin},
          {"f_esg", c.f_esg},
          {"f_ic", c.f_ic},
          {"ic_levels", c.ic_levels},
          {"fraud_rate", c.fraud_rate},
          {"band_strength", c.band_strength},
          {"cluster_strength", c.cluster_strength},
          {"missing_rate", c.missing_rate},
          {"gray_rate", c.gray_rate},
          {"gray_strength", c.gray_strength},
          {"bands_per_company", c.bands_per_company},
          {"band_width_min", c.band_width_min},
          {"band_width_max", c.band_width_max},
          {"block_years_min", c.block_years_min},
          {"block_years_max", c.block_years_max},
          {"block_width_min", c.block_width_min},
          {"block_width_max", c.block_width_max},
          {"recent_years", c.recent_years},
          {"pattern", to_string(c.pattern)},
          {"seed", c.seed}};
}

// Feature window [first, last] x [year_first, year_last], inclusive.
struct PlantedBlock {
  std::string company;
  int year_first = 0, year_last = 0;
  std::size_t feature_first = 0, feature_last = 0;  // column indices in the generated schema
  std::string first_id, last_id;
  int parity = 0;  // interaction pattern: sign of the first column is + when parity is 0
  double strength = 0.0;

  bool contains(int year, std::size_t feature) const {
    return year >= year_first && year <= year_last && feature >= feature_first && feature <= feature_last;
  }
};

struct PlantedBand {
  std::size_t feature_first = 0, feature_last = 0;
  double strength = 0.0;
};

struct GroundTruth {
  int target_year = 0;
  SynthPattern pattern = SynthPattern::Additive;
  std::map<std::string, PlantedBlock> fraud_blocks;
  std::map<std::string, PlantedBlock> gray_blocks;
  std::map<std::string, std::vector<PlantedBand>> bands;

  // Fraud-patterned rows carrying a normal label.
  std::vector<RowKey> gray_rows() const {
    std::vector<RowKey> out;
    for (const auto& [c, b] : gray_blocks)
      for (int y = b.year_first; y <= b.year_last; ++y) out.push_back({c, y});
    return out;
  }
};

inline nlohmann::ordered_json block_json(const PlantedBlock& b) {
  return {{"company_id", b.company},
          {"years", {b.year_first, b.year_last}},
          {"columns", {b.feature_first, b.feature_last}},
          {"features", {b.first_id, b.last_id}},
          {"parity", b.parity},
          {"strength", b.strength}};
}

inline nlohmann::ordered_json to_json(const GroundTruth& gt) {
  nlohmann::ordered_json j;
  j["target_year"] = gt.target_year;
  j["pattern"] = to_string(gt.pattern);
  auto fraud = nlohmann::ordered_json::array();
  for (const auto& [c, b] : gt.fraud_blocks) fraud.push_back(block_json(b));
  j["fraud_blocks"] = fraud;
  auto gray = nlohmann::ordered_json::array();
  for (const auto& [c, b] : gt.gray_blocks) gray.push_back(block_json(b));
  j["gray_blocks"] = gray;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& k : gt.gray_rows()) rows.push_back({{"company_id", k.company}, {"year", k.year}});
  j["gray_rows"] = rows;
  auto bands = nlohmann::ordered_json::object();
  for (const auto& [c, list] : gt.bands) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& b : list) arr.push_back({{"columns", {b.feature_first, b.feature_last}}, {"strength", b.strength}});
    bands[c] = arr;
  }
  j["bands"] = bands;
  return j;
}

inline PlantedBlock block_from_json(const nlohmann::json& j) {
  PlantedBlock b;
  b.company = j.at("company_id").get<std::string>();
  b.year_first = j.at("years").at(0).get<int>();
  b.year_last = j.at("years").at(1).get<int>();
  b.feature_first = j.at("columns").at(0).get<std::size_t>();
  b.feature_last = j.at("columns").at(1).get<std::size_t>();
  b.first_id = j.at("features").at(0).get<std::string>();
  b.last_id = j.at("features").at(1).get<std::string>();
  b.parity = j.at("parity").get<int>();
  b.strength = j.at("strength").get<double>();
  return b;
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth gt;
  gt.target_year = j.at("target_year").get<int>();
  gt.pattern = parse_pattern(j.at("pattern").get<std::string>());
  for (const auto& b : j.at("fraud_blocks")) {
    auto blk = block_from_json(b);
    gt.fraud_blocks.emplace(blk.company, blk);
  }
  for (const auto& b : j.at("gray_blocks")) {
    auto blk = block_from_json(b);
    gt.gray_blocks.emplace(blk.company, blk);
  }
  for (const auto& [c, arr] : j.at("bands").items())
    for (const auto& b : arr)
      gt.bands[c].push_back(
          {b.at("columns").at(0).get<std::size_t>(), b.at("columns").at(1).get<std::size_t>(), b.at("strength").get<double>()});
  return gt;
}

inline const std::array<const char*, 9> kFinancialGroups{"Solvency",  "DisclosedFinancials", "RatioStructure",
                                                         "Profitability", "CashFlow",      "RiskLevel",
                                                         "Growth",    "PerShare",            "RelativeValue"};
inline const std::array<const char*, 3> kEsgGroups{"Dividend", "EnvironmentalDisclosure", "SocialResponsibility"};
inline const std::array<const char*, 6> kInternalControlGroups{"GovernanceStructure", "ControlEnvironment",
                                                               "RiskManagement",      "ControlActivities",
                                                               "InformationCommunication", "Monitoring"};

namespace detail {

template <std::size_t N>
void append_groups(std::vector<IndicatorEntry>& out, Level1 l1, FeatureKind kind, std::size_t count,
                   const std::array<const char*, N>& names, std::string_view prefix) {
  const std::size_t groups = std::min(N, count);
  std::size_t k = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t size = count / groups + (g < count % groups ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i, ++k) {
      char id[32];
      std::snprintf(id, sizeof id, "%.*s%03zu", static_cast<int>(prefix.size()), prefix.data(), k + 1);
      out.push_back({id, l1, names[g], kind, 0});
    }
  }
}

inline std::string company_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "C%04zu", i + 1);
  return buf;
}

}  // namespace detail

inline IndicatorSchema synthetic_schema(const SynthConfig& cfg) {
  std::vector<IndicatorEntry> e;
  detail::append_groups(e, Level1::Financial, FeatureKind::Continuous, cfg.f_fin, kFinancialGroups, "FIN");
  detail::append_groups(e, Level1::ESG, FeatureKind::Continuous, cfg.f_esg, kEsgGroups, "ESG");
  detail::append_groups(e, Level1::InternalControl, FeatureKind::Categorical, cfg.f_ic, kInternalControlGroups, "IC");
  return IndicatorSchema(std::move(e));
}

struct SynthData {
  PanelDataset panel;
  std::vector<Violation> violations;
  GroundTruth truth;
};

// Baseline cells are N(0,1) (continuous) or uniform codes (categorical).
// Every company carries persistent column bands; fraud companies add a block
// in their last pre-target years, labeled fraud at the target year and on the
// block years. Gray companies carry a weaker block under a normal label.
inline SynthData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  SynthData out;
  const auto schema = synthetic_schema(cfg);
  const std::size_t N = cfg.n_companies, Y = cfg.n_years, F = schema.size(), FC = cfg.n_continuous();
  const int target = cfg.target_year();

  Rng assign(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(N);
  for (std::size_t i = 0; i < N; ++i) order[i] = i;
  assign.shuffle(order.begin(), order.end());
  const std::size_t n_fraud = cfg.n_fraud();
  const auto n_gray = static_cast<std::size_t>(std::llround(cfg.gray_rate * static_cast<double>(N)));
  std::vector<int> role(N, 0);  // 0 normal, 1 fraud, 2 gray
  for (std::size_t k = 0; k < n_fraud; ++k) role[order[k]] = 1;
  for (std::size_t k = n_fraud; k < n_fraud + n_gray; ++k) role[order[k]] = 2;

  auto& ds = out.panel;
  ds.schema = schema;
  ds.keys.reserve(N * Y);
  ds.values.assign(N * Y * F, 0.0);
  ds.missing.assign(N * Y * F, 0);

  Rng base(derive_seed(cfg.seed, 2));
  Rng pattern(derive_seed(cfg.seed, 3));
  Rng holes(derive_seed(cfg.seed, 4));
  Rng codes(derive_seed(cfg.seed, 5));

  out.truth.target_year = target;
  out.truth.pattern = cfg.pattern;
  for (std::size_t i = 0; i < N; ++i) {
    const auto company = detail::company_id(i);
    const std::size_t row0 = i * Y;
    for (std::size_t t = 0; t < Y; ++t) {
      ds.keys.push_back({company, cfg.start_year + static_cast<int>(t)});
      double* v = &ds.values[(row0 + t) * F];
      for (std::size_t j = 0; j < F; ++j)
        v[j] = j < FC ? base.normal() : static_cast<double>(base.below(cfg.ic_levels));
    }

    auto& bands = out.truth.bands[company];
    for (std::size_t b = 0; b < cfg.bands_per_company; ++b) {
      const auto w = cfg.band_width_min + pattern.below(cfg.band_width_max - cfg.band_width_min + 1);
      const auto first = pattern.below(FC - w + 1);
      bands.push_back({first, first + w - 1, cfg.band_strength});
      for (std::size_t t = 0; t < Y; ++t)
        for (std::size_t j = first; j < first + w; ++j) ds.values[(row0 + t) * F + j] += cfg.band_strength;
    }

    if (role[i] != 0) {
      PlantedBlock blk;
      blk.company = company;
      const auto h = cfg.block_years_min + pattern.below(cfg.block_years_max - cfg.block_years_min + 1);
      const auto w = cfg.block_width_min + pattern.below(cfg.block_width_max - cfg.block_width_min + 1);
      const int window_first = target - static_cast<int>(cfg.recent_years);
      blk.year_first = window_first + static_cast<int>(pattern.below(cfg.recent_years - h + 1));
      blk.year_last = blk.year_first + static_cast<int>(h) - 1;
      blk.feature_first = pattern.below(FC - w + 1);
      blk.feature_last = blk.feature_first + w - 1;
      blk.first_id = schema[blk.feature_first].feature_id;
      blk.last_id = schema[blk.feature_last].feature_id;
      blk.parity = static_cast<int>(pattern.below(2));
      blk.strength = cfg.cluster_strength * (role[i] == 2 ? cfg.gray_strength : 1.0);
      for (int y = blk.year_first; y <= blk.year_last; ++y) {
        const auto t = static_cast<std::size_t>(y - cfg.start_year);
        for (std::size_t j = blk.feature_first; j <= blk.feature_last; ++j) {
          double s = blk.strength;
          if (cfg.pattern == SynthPattern::Interaction && (j - blk.feature_first + blk.parity) % 2 == 1) s = -s;
          ds.values[(row0 + t) * F + j] += s;
        }
      }
      if (role[i] == 1) {
        out.violations.push_back({company, target, std::string(kFraudCodes[codes.below(kFraudCodes.size())])});
        for (int y = blk.year_first; y <= blk.year_last; ++y)
          out.violations.push_back({company, y, std::string(kFraudCodes[codes.below(kFraudCodes.size())])});
        out.truth.fraud_blocks.emplace(company, blk);
      } else {
        out.truth.gray_blocks.emplace(company, blk);
      }
    } else if (codes.bernoulli(0.02)) {
      // non-fraud violation on a normal company; must not create a label
      out.violations.push_back({company, cfg.start_year + static_cast<int>(codes.below(Y)), "P2505"});
    }
  }

  if (cfg.missing_rate > 0.0)
    for (std::size_t c = 0; c < ds.values.size(); ++c)
      if (holes.bernoulli(cfg.missing_rate)) {
        ds.missing[c] = 1;
        ds.values[c] = 0.0;
      }

  std::sort(out.violations.begin(), out.violations.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.company, a.year, a.code) < std::tie(b.company, b.year, b.code);
  });
  ds.attach_labels(derive_labels(out.violations).labels);
  ds.check_invariants();
  return out;
}

inline void write_synthetic(const SynthData& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_schema_csv(d.panel.schema, (dir / "schema.csv").string());
  write_panel_csv(d.panel, (dir / "panel.csv").string());
  write_violations_csv(d.violations, (dir / "violations.csv").string());
  std::ofstream f(dir / "ground_truth.json", std::ios::binary);
  require(f.good(), "synth: cannot write " + (dir / "ground_truth.json").string());
  f << to_json(d.truth).dump(1) << '\n';
}

}  // namespace fraudcnn
