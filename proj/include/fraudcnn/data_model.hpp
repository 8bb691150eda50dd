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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fraudcnn/csv.hpp"
#include "fraudcnn/error.hpp"

namespace fraudcnn {

enum class Level1 { Financial = 0, ESG = 1, InternalControl = 2 };
enum class FeatureKind { Continuous, Categorical };

inline std::string_view to_string(Level1 l) {
  switch (l) {
    case Level1::Financial: return "Financial";
    case Level1::ESG: return "ESG";
    case Level1::InternalControl: return "InternalControl";
  }
  return "?";
}

inline std::string_view to_string(FeatureKind k) {
  return k == FeatureKind::Continuous ? "Continuous" : "Categorical";
}

inline Level1 parse_level1(std::string_view s) {
  if (s == "Financial") return Level1::Financial;
  if (s == "ESG") return Level1::ESG;
  if (s == "InternalControl") return Level1::InternalControl;
  throw Error("schema: unknown level1 '" + std::string(s) + "'");
}

inline FeatureKind parse_kind(std::string_view s) {
  if (s == "Continuous") return FeatureKind::Continuous;
  if (s == "Categorical") return FeatureKind::Categorical;
  throw Error("schema: unknown kind '" + std::string(s) + "'");
}

struct IndicatorEntry {
  std::string feature_id;
  Level1 level1 = Level1::Financial;
  std::string level2;
  FeatureKind kind = FeatureKind::Continuous;
  std::size_t order = 0;  // canonical left-to-right position
};

// Returns perm with perm[k] = index of the entry placed at canonical position
// k: Financial, then ESG, then InternalControl, stable within each level1.
// Throws when a level2 group would not be contiguous in that order.
inline std::vector<std::size_t> ordered_columns(std::span<const IndicatorEntry> entries) {
  std::vector<std::size_t> perm(entries.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return static_cast<int>(entries[a].level1) < static_cast<int>(entries[b].level1);
  });
  std::set<std::pair<int, std::string>> closed;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const auto& e = entries[perm[k]];
    const std::pair<int, std::string> group{static_cast<int>(e.level1), e.level2};
    if (k > 0) {
      const auto& prev = entries[perm[k - 1]];
      if (prev.level1 != e.level1 || prev.level2 != e.level2)
        closed.insert({static_cast<int>(prev.level1), prev.level2});
    }
    if (closed.contains(group))
      throw Error("schema: level2 group '" + e.level2 + "' is not contiguous");
  }
  return perm;
}

class IndicatorSchema {
 public:
  IndicatorSchema() = default;

  // Assigns each entry's canonical `order`; validates ids and groups.
  explicit IndicatorSchema(std::vector<IndicatorEntry> entries) : entries_(std::move(entries)) {
    require(!entries_.empty(), "schema: no features");
    std::set<std::string> seen;
    for (const auto& e : entries_) {
      require(!e.feature_id.empty(), "schema: empty feature_id");
      require(seen.insert(e.feature_id).second, "schema: duplicate feature '" + e.feature_id + "'");
    }
    const auto perm = fraudcnn::ordered_columns(entries_);
    for (std::size_t k = 0; k < perm.size(); ++k) entries_[perm[k]].order = k;
    for (std::size_t i = 0; i < entries_.size(); ++i) index_[entries_[i].feature_id] = i;
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<IndicatorEntry>& entries() const { return entries_; }
  const IndicatorEntry& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool is_ordered() const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].order != i) return false;
    return true;
  }

  std::vector<std::size_t> ordered_columns() const { return fraudcnn::ordered_columns(entries_); }

  IndicatorSchema select(std::span<const std::size_t> columns) const {
    std::vector<IndicatorEntry> kept;
    kept.reserve(columns.size());
    for (auto c : columns) kept.push_back(entries_.at(c));
    return IndicatorSchema(std::move(kept));
  }

  // Column indices j > 0 at which a new level1 (resp. level2) group starts.
  // A level1 boundary is not repeated in the level2 list.
  std::vector<std::size_t> level1_boundaries() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 1; j < entries_.size(); ++j)
      if (entries_[j].level1 != entries_[j - 1].level1) out.push_back(j);
    return out;
  }

  std::vector<std::size_t> level2_boundaries() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 1; j < entries_.size(); ++j)
      if (entries_[j].level1 == entries_[j - 1].level1 && entries_[j].level2 != entries_[j - 1].level2)
        out.push_back(j);
    return out;
  }

  friend bool operator==(const IndicatorSchema& a, const IndicatorSchema& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& x = a.entries_[i];
      const auto& y = b.entries_[i];
      if (x.feature_id != y.feature_id || x.level1 != y.level1 || x.level2 != y.level2 || x.kind != y.kind)
        return false;
    }
    return true;
  }

 private:
  std::vector<IndicatorEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline IndicatorSchema load_schema_csv(const std::string& path) {
  const auto rows = csv::read(path);
  require(!rows.empty(), "schema: empty file '" + path + "'");
  const csv::Row expected{"feature_id", "level1", "level2", "kind"};
  require(rows[0] == expected, "schema: header must be feature_id,level1,level2,kind");
  std::vector<IndicatorEntry> entries;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require(rows[r].size() == 4, "schema: line " + std::to_string(r + 1) + " needs 4 fields");
    entries.push_back({rows[r][0], parse_level1(rows[r][1]), rows[r][2], parse_kind(rows[r][3]), 0});
  }
  return IndicatorSchema(std::move(entries));
}

inline void write_schema_csv(const IndicatorSchema& schema, const std::string& path) {
  csv::Writer w(path);
  w.row({"feature_id", "level1", "level2", "kind"});
  for (const auto& e : schema.entries())
    w.row({e.feature_id, std::string(to_string(e.level1)), e.level2, std::string(to_string(e.kind))});
}

struct RowKey {
  std::string company;
  int year = 0;
  auto operator<=>(const RowKey&) const = default;
};

inline const std::array<std::string_view, 4> kFraudCodes{"P2501", "P2502", "P2503", "P2506"};

struct FraudLabel {
  bool is_fraud = false;
  std::set<std::string> codes;
  friend bool operator==(const FraudLabel&, const FraudLabel&) = default;
};

struct Violation {
  std::string company;
  int year = 0;
  std::string code;
};

struct LabelDerivation {
  std::map<RowKey, FraudLabel> labels;
  std::size_t ignored_records = 0;  // records whose code is not a fraud code
};

inline LabelDerivation derive_labels(std::span<const Violation> violations) {
  LabelDerivation out;
  for (const auto& v : violations) {
    auto& label = out.labels[{v.company, v.year}];
    if (std::find(kFraudCodes.begin(), kFraudCodes.end(), v.code) == kFraudCodes.end()) {
      ++out.ignored_records;
      continue;
    }
    label.codes.insert(v.code);
    label.is_fraud = true;
  }
  return out;
}

inline std::vector<Violation> load_violations_csv(const std::string& path) {
  const auto rows = csv::read(path);
  require(!rows.empty(), "violations: empty file '" + path + "'");
  require(rows[0] == csv::Row{"company_id", "year", "code"}, "violations: header must be company_id,year,code");
  std::vector<Violation> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require(rows[r].size() == 3, "violations: line " + std::to_string(r + 1) + " needs 3 fields");
    long long year = 0;
    require(csv::parse_int(rows[r][1], year), "violations: bad year on line " + std::to_string(r + 1));
    out.push_back({rows[r][0], static_cast<int>(year), rows[r][2]});
  }
  return out;
}

inline void write_violations_csv(std::span<const Violation> violations, const std::string& path) {
  csv::Writer w(path);
  w.row({"company_id", "year", "code"});
  for (const auto& v : violations) w.row({v.company, std::to_string(v.year), v.code});
}

// (company, year)-keyed panel. Rows are kept sorted by key; values and the
// missing mask are row-major with one column per schema entry.
class PanelDataset {
 public:
  IndicatorSchema schema;
  std::vector<RowKey> keys;
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
  std::map<RowKey, FraudLabel> labels;  // rows absent here are non-fraud

  std::size_t rows() const { return keys.size(); }
  std::size_t features() const { return schema.size(); }

  std::span<double> row(std::size_t i) { return {values.data() + i * features(), features()}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * features(), features()}; }
  std::span<std::uint8_t> mask(std::size_t i) { return {missing.data() + i * features(), features()}; }
  std::span<const std::uint8_t> mask(std::size_t i) const {
    return {missing.data() + i * features(), features()};
  }

  double& at(std::size_t r, std::size_t c) { return values[r * features() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * features() + c]; }
  bool is_missing(std::size_t r, std::size_t c) const { return missing[r * features() + c] != 0; }

  std::optional<std::size_t> find(const RowKey& key) const {
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) return std::nullopt;
    return static_cast<std::size_t>(it - keys.begin());
  }

  bool is_fraud(std::size_t r) const {
    auto it = labels.find(keys[r]);
    return it != labels.end() && it->second.is_fraud;
  }

  std::vector<std::string> companies() const {
    std::vector<std::string> out;
    for (const auto& k : keys)
      if (out.empty() || out.back() != k.company) out.push_back(k.company);
    return out;
  }

  std::vector<int> years() const {
    std::set<int> ys;
    for (const auto& k : keys) ys.insert(k.year);
    return {ys.begin(), ys.end()};
  }

  // [begin, end) row ranges per company, in key order.
  std::vector<std::pair<std::size_t, std::size_t>> company_ranges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= keys.size(); ++i) {
      if (i == keys.size() || keys[i].company != keys[begin].company) {
        if (i > begin) out.push_back({begin, i});
        begin = i;
      }
    }
    return out;
  }

  std::size_t missing_count() const {
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
  }

  // Rows in the given order (indices must be increasing to keep keys sorted).
  PanelDataset select_rows(std::span<const std::size_t> idx) const {
    PanelDataset out;
    out.schema = schema;
    const auto f = features();
    out.keys.reserve(idx.size());
    out.values.reserve(idx.size() * f);
    out.missing.reserve(idx.size() * f);
    for (auto i : idx) {
      out.keys.push_back(keys.at(i));
      out.values.insert(out.values.end(), row(i).begin(), row(i).end());
      out.missing.insert(out.missing.end(), mask(i).begin(), mask(i).end());
      if (auto it = labels.find(keys[i]); it != labels.end()) out.labels.insert(*it);
    }
    return out;
  }

  PanelDataset select_features(std::span<const std::size_t> columns) const {
    PanelDataset out;
    out.schema = schema.select(columns);
    out.keys = keys;
    out.labels = labels;
    out.values.reserve(rows() * columns.size());
    out.missing.reserve(rows() * columns.size());
    for (std::size_t r = 0; r < rows(); ++r)
      for (auto c : columns) {
        out.values.push_back(at(r, c));
        out.missing.push_back(missing[r * features() + c]);
      }
    return out;
  }

  // Attaches labels for keys present in the panel; returns how many label
  // entries were dropped because their row does not exist.
  std::size_t attach_labels(const std::map<RowKey, FraudLabel>& all) {
    labels.clear();
    std::size_t dropped = 0;
    for (const auto& [key, label] : all) {
      if (find(key))
        labels.emplace(key, label);
      else
        ++dropped;
    }
    return dropped;
  }

  void check_invariants() const {
    const auto f = features();
    require(values.size() == keys.size() * f && missing.size() == values.size(),
            "panel: values/mask shape mismatch");
    for (std::size_t i = 1; i < keys.size(); ++i)
      require(keys[i - 1] < keys[i], "panel: keys not strictly sorted");
    for (const auto& [key, label] : labels) {
      require(find(key).has_value(), "panel: label without row");
      require(label.is_fraud == !label.codes.empty(), "panel: label codes inconsistent");
    }
  }
};

// Reorders feature columns into the schema's canonical order.
inline PanelDataset to_canonical_order(const PanelDataset& ds) {
  if (ds.schema.is_ordered()) return ds;
  const auto perm = ds.schema.ordered_columns();
  return ds.select_features(perm);
}

inline PanelDataset load_panel_csv(const std::string& path, const IndicatorSchema& schema) {
  const auto rows = csv::read(path);
  require(!rows.empty(), "panel: empty file '" + path + "'");
  const auto& header = rows[0];
  require(header.size() >= 2 && header[0] == "company_id" && header[1] == "year",
          "panel: header must start with company_id,year");
  const std::size_t f = schema.size();
  std::vector<std::size_t> col_to_feature(header.size(), 0);
  std::vector<bool> seen(f, false);
  for (std::size_t c = 2; c < header.size(); ++c) {
    auto idx = schema.index_of(header[c]);
    require(idx.has_value(), "panel: unknown feature column '" + header[c] + "'");
    require(!seen[*idx], "panel: duplicate feature column '" + header[c] + "'");
    seen[*idx] = true;
    col_to_feature[c] = *idx;
  }
  for (std::size_t j = 0; j < f; ++j)
    require(seen[j], "panel: missing feature column '" + schema[j].feature_id + "'");

  struct Parsed {
    RowKey key;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;
  };
  std::vector<Parsed> parsed;
  parsed.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& line = rows[r];
    const auto where = "panel line " + std::to_string(r + 1);
    require(line.size() == header.size(), where + ": expected " + std::to_string(header.size()) + " fields");
    long long year = 0;
    require(csv::parse_int(line[1], year), where + ": bad year '" + line[1] + "'");
    Parsed p{{line[0], static_cast<int>(year)}, std::vector<double>(f, 0.0), std::vector<std::uint8_t>(f, 0)};
    for (std::size_t c = 2; c < line.size(); ++c) {
      const auto j = col_to_feature[c];
      if (line[c].empty()) {
        p.missing[j] = 1;
        continue;
      }
      double v = 0.0;
      require(csv::parse_double(line[c], v),
              where + ": non-numeric value '" + line[c] + "' in column '" + header[c] + "'");
      if (schema[j].kind == FeatureKind::Categorical)
        require(v >= 0.0 && v == std::floor(v),
                where + ": categorical column '" + header[c] + "' needs a non-negative integer code");
      p.values[j] = v;
    }
    parsed.push_back(std::move(p));
  }
  std::sort(parsed.begin(), parsed.end(), [](const Parsed& a, const Parsed& b) { return a.key < b.key; });
  PanelDataset ds;
  ds.schema = schema;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (i > 0 && parsed[i].key == parsed[i - 1].key)
      throw Error("panel: duplicate key (" + parsed[i].key.company + ", " + std::to_string(parsed[i].key.year) + ")");
    ds.keys.push_back(parsed[i].key);
    ds.values.insert(ds.values.end(), parsed[i].values.begin(), parsed[i].values.end());
    ds.missing.insert(ds.missing.end(), parsed[i].missing.begin(), parsed[i].missing.end());
  }
  return ds;
}

inline PanelDataset load_panel_csv(const std::string& path, const std::string& schema_path) {
  return load_panel_csv(path, load_schema_csv(schema_path));
}

inline void write_panel_csv(const PanelDataset& ds, const std::string& path) {
  csv::Writer w(path);
  std::vector<std::string> header{"company_id", "year"};
  for (const auto& e : ds.schema.entries()) header.push_back(e.feature_id);
  w.row(header);
  std::vector<std::string> line;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    line.assign({ds.keys[r].company, std::to_string(ds.keys[r].year)});
    for (std::size_t j = 0; j < ds.features(); ++j)
      line.push_back(ds.is_missing(r, j) ? std::string() : csv::format_double(ds.at(r, j)));
    w.row(line);
  }
}

}  // namespace fraudcnn
