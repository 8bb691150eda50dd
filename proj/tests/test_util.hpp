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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include <fraudcnn/fraudcnn.hpp>

namespace testutil {

using fraudcnn::FeatureKind;
using fraudcnn::Level1;

inline fraudcnn::IndicatorEntry entry(std::string id, Level1 l1, std::string l2,
                                      FeatureKind k = FeatureKind::Continuous) {
  return {std::move(id), l1, std::move(l2), k, 0};
}

// NaN marks a missing cell.
struct Row {
  std::string company;
  int year;
  std::vector<double> values;
};

inline fraudcnn::PanelDataset make_panel(const fraudcnn::IndicatorSchema& schema, std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.company, a.year) < std::tie(b.company, b.year);
  });
  fraudcnn::PanelDataset ds;
  ds.schema = schema;
  for (const auto& r : rows) {
    ds.keys.push_back({r.company, r.year});
    for (double v : r.values) {
      ds.values.push_back(std::isnan(v) ? 0.0 : v);
      ds.missing.push_back(std::isnan(v) ? 1 : 0);
    }
  }
  ds.check_invariants();
  return ds;
}

inline fraudcnn::IndicatorSchema continuous_schema(std::size_t n) {
  std::vector<fraudcnn::IndicatorEntry> e;
  for (std::size_t j = 0; j < n; ++j) e.push_back(entry("f" + std::to_string(j), Level1::Financial, "G"));
  return fraudcnn::IndicatorSchema(std::move(e));
}

inline void mark_fraud(fraudcnn::PanelDataset& ds, const std::string& company, int year) {
  ds.labels[{company, year}] = {true, {"P2501"}};
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("fraudcnn_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
