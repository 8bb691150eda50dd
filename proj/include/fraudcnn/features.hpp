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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraudcnn/bytes.hpp"
#include "fraudcnn/data_model.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/rng.hpp"

namespace fraudcnn {

// Removes every feature whose missing fraction exceeds `threshold`.
inline PanelDataset drop_sparse_features(const PanelDataset& ds, double threshold = 0.30) {
  std::vector<std::size_t> keep;
  const double n = static_cast<double>(std::max<std::size_t>(ds.rows(), 1));
  for (std::size_t j = 0; j < ds.features(); ++j) {
    std::size_t miss = 0;
    for (std::size_t r = 0; r < ds.rows(); ++r) miss += ds.is_missing(r, j) ? 1 : 0;
    if (static_cast<double>(miss) / n <= threshold) keep.push_back(j);
  }
  require(!keep.empty(), "drop_sparse_features: every feature exceeds the missing threshold");
  return ds.select_features(keep);
}

struct ImputeReport {
  std::size_t empty_rows_deleted = 0;
  std::size_t companies_deleted = 0;  // some continuous feature never observed
  std::size_t cells_filled = 0;
};

namespace detail {

// Linear interpolation along years with nearest-observed edge values.
inline void interpolate_series(std::span<const int> years, std::span<double> v, std::span<const std::uint8_t> miss,
                               std::size_t stride) {
  const std::size_t n = years.size();
  std::vector<std::size_t> obs;
  for (std::size_t t = 0; t < n; ++t)
    if (!miss[t * stride]) obs.push_back(t);
  if (obs.empty()) return;
  for (std::size_t t = 0; t < n; ++t) {
    if (!miss[t * stride]) continue;
    auto hi = std::lower_bound(obs.begin(), obs.end(), t);
    if (hi == obs.begin()) {
      v[t * stride] = v[obs.front() * stride];
    } else if (hi == obs.end()) {
      v[t * stride] = v[obs.back() * stride];
    } else {
      const auto b = *hi;
      const auto a = *(hi - 1);
      const double w = static_cast<double>(years[t] - years[a]) / static_cast<double>(years[b] - years[a]);
      v[t * stride] = v[a * stride] + w * (v[b * stride] - v[a * stride]);
    }
  }
}

}  // namespace detail

// Per company: continuous features by interpolation along years, categorical
// features by majority vote among the k nearest rows that observe the
// feature (same-company rows first, then by distance over mutually observed
// continuous features). Rows with every feature missing are deleted, as are
// companies for which some continuous feature is never observed.
inline PanelDataset impute_missing(const PanelDataset& ds, std::size_t k, ImputeReport* report = nullptr) {
  require(k >= 1, "impute_missing: k must be >= 1");
  ImputeReport rep;
  const std::size_t F = ds.features();

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto m = ds.mask(r);
    if (std::all_of(m.begin(), m.end(), [](std::uint8_t x) { return x != 0; }))
      ++rep.empty_rows_deleted;
    else
      keep.push_back(r);
  }
  PanelDataset work = ds.select_rows(keep);

  std::vector<std::size_t> continuous;
  for (std::size_t j = 0; j < F; ++j)
    if (ds.schema[j].kind == FeatureKind::Continuous) continuous.push_back(j);

  keep.clear();
  for (auto [b, e] : work.company_ranges()) {
    bool ok = true;
    for (auto j : continuous) {
      bool seen = false;
      for (auto r = b; r < e && !seen; ++r) seen = !work.is_missing(r, j);
      if (!seen) ok = false;
    }
    if (!ok) {
      ++rep.companies_deleted;
      continue;
    }
    for (auto r = b; r < e; ++r) keep.push_back(r);
  }
  if (rep.companies_deleted > 0) work = work.select_rows(keep);

  PanelDataset out = work;
  for (auto [b, e] : work.company_ranges()) {
    std::vector<int> years;
    for (auto r = b; r < e; ++r) years.push_back(work.keys[r].year);
    for (auto j : continuous)
      detail::interpolate_series(years, std::span<double>(out.values).subspan(b * F + j),
                                 std::span<const std::uint8_t>(work.missing).subspan(b * F + j), F);
  }

  auto distance = [&](std::size_t a, std::size_t b) {
    double sum = 0.0;
    std::size_t n = 0;
    for (auto j : continuous) {
      if (work.is_missing(a, j) || work.is_missing(b, j)) continue;
      const double d = work.at(a, j) - work.at(b, j);
      sum += d * d;
      ++n;
    }
    if (n == 0) return std::numeric_limits<double>::infinity();
    return std::sqrt(sum * static_cast<double>(continuous.size()) / static_cast<double>(n));
  };

  const auto ranges = work.company_ranges();
  std::vector<std::size_t> company_of(work.rows());
  for (std::size_t c = 0; c < ranges.size(); ++c)
    for (auto r = ranges[c].first; r < ranges[c].second; ++r) company_of[r] = c;

  for (std::size_t r = 0; r < work.rows(); ++r) {
    for (std::size_t j = 0; j < F; ++j) {
      if (!work.is_missing(r, j) || ds.schema[j].kind != FeatureKind::Categorical) continue;
      struct Cand {
        bool other_company;
        double dist;
        std::size_t row;
      };
      std::vector<Cand> cands;
      const auto [b, e] = ranges[company_of[r]];
      for (auto q = b; q < e; ++q)
        if (q != r && !work.is_missing(q, j)) cands.push_back({false, distance(r, q), q});
      if (cands.size() < k) {
        for (std::size_t q = 0; q < work.rows(); ++q)
          if ((q < b || q >= e) && !work.is_missing(q, j)) cands.push_back({true, distance(r, q), q});
      }
      require(!cands.empty(), "impute_missing: categorical feature '" + ds.schema[j].feature_id +
                                  "' is never observed");
      const auto take = std::min(k, cands.size());
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take), cands.end(),
                        [](const Cand& x, const Cand& y) {
                          if (x.other_company != y.other_company) return !x.other_company;
                          if (x.dist != y.dist) return x.dist < y.dist;
                          return x.row < y.row;
                        });
      std::map<double, std::size_t> votes;
      for (std::size_t i = 0; i < take; ++i) ++votes[work.at(cands[i].row, j)];
      double best = votes.begin()->first;
      std::size_t best_n = 0;
      for (auto [code, n] : votes)
        if (n > best_n) {  // ties resolve to the smallest code
          best = code;
          best_n = n;
        }
      out.at(r, j) = best;
    }
  }
  rep.cells_filled = work.missing_count();
  std::fill(out.missing.begin(), out.missing.end(), std::uint8_t{0});
  if (report) *report = rep;
  return out;
}

struct ZScaler {
  std::vector<double> mu;
  std::vector<double> sigma;

  // Population statistics over the given rows (all rows when empty).
  static ZScaler fit(const PanelDataset& ds, std::span<const std::size_t> rows = {}) {
    std::vector<std::size_t> all;
    if (rows.empty()) {
      all.resize(ds.rows());
      std::iota(all.begin(), all.end(), 0);
      rows = all;
    }
    require(!rows.empty(), "zscore: no rows");
    const std::size_t F = ds.features();
    ZScaler s{std::vector<double>(F, 0.0), std::vector<double>(F, 0.0)};
    const double n = static_cast<double>(rows.size());
    for (auto r : rows)
      for (std::size_t j = 0; j < F; ++j) s.mu[j] += ds.at(r, j);
    for (auto& m : s.mu) m /= n;
    for (auto r : rows)
      for (std::size_t j = 0; j < F; ++j) {
        const double d = ds.at(r, j) - s.mu[j];
        s.sigma[j] += d * d;
      }
    for (auto& v : s.sigma) v = std::sqrt(v / n);
    return s;
  }

  double transform(double x, std::size_t j) const { return sigma[j] > 0.0 ? (x - mu[j]) / sigma[j] : 0.0; }

  PanelDataset apply(const PanelDataset& ds) const {
    require(mu.size() == ds.features(), "zscore: feature count mismatch");
    PanelDataset out = ds;
    for (std::size_t r = 0; r < ds.rows(); ++r)
      for (std::size_t j = 0; j < ds.features(); ++j) out.at(r, j) = transform(ds.at(r, j), j);
    return out;
  }
};

inline std::pair<PanelDataset, ZScaler> zscore_fit_apply(const PanelDataset& ds) {
  require(ds.missing_count() == 0, "zscore: impute missing values first");
  auto scaler = ZScaler::fit(ds);
  return {scaler.apply(ds), std::move(scaler)};
}

enum class Mode { ExPost, ExAnte };

inline std::string_view to_string(Mode m) { return m == Mode::ExPost ? "ExPost" : "ExAnte"; }

inline Mode parse_mode(std::string_view s) {
  if (s == "ExPost" || s == "expost") return Mode::ExPost;
  if (s == "ExAnte" || s == "exante") return Mode::ExAnte;
  throw Error("unknown mode '" + std::string(s) + "' (expected ExPost or ExAnte)");
}

// Per-company years x features grayscale images with binary labels.
struct ImageSet {
  Mode mode = Mode::ExAnte;
  int target_year = 0;
  int start_year = 0;
  std::size_t height = 0;  // T (years)
  std::size_t width = 0;   // F (features)
  IndicatorSchema schema;
  std::vector<std::string> ids;  // company id, or "smote:<n>" for synthetic samples
  std::vector<std::vector<float>> pixels;  // each T*F, row-major (year, feature)
  std::vector<int> labels;

  std::size_t size() const { return pixels.size(); }
  std::size_t pixel_count() const { return height * width; }

  std::size_t count(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
  }

  ImageSet subset(std::span<const std::size_t> idx) const {
    ImageSet out = empty_like();
    for (auto i : idx) out.push(ids.at(i), pixels.at(i), labels.at(i));
    return out;
  }

  ImageSet empty_like() const {
    ImageSet out;
    out.mode = mode;
    out.target_year = target_year;
    out.start_year = start_year;
    out.height = height;
    out.width = width;
    out.schema = schema;
    return out;
  }

  void push(std::string id, std::vector<float> px, int label) {
    ids.push_back(std::move(id));
    pixels.push_back(std::move(px));
    labels.push_back(label);
  }

  std::optional<std::size_t> find(std::string_view id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return i;
    return std::nullopt;
  }

  void check_invariants() const {
    require(labels.size() == pixels.size() && ids.size() == pixels.size(), "imageset: length mismatch");
    for (const auto& p : pixels) {
      require(p.size() == pixel_count(), "imageset: image shape mismatch");
      for (float v : p) require(std::isfinite(v), "imageset: non-finite pixel");
    }
    for (int l : labels) require(l == 0 || l == 1, "imageset: labels must be 0/1");
  }
};

// Splits the panel by company. A company qualifies when it has a row at
// target_year and at least `min_years` observed rows inside the image window
// [first panel year, target_year - 1] (ExAnte) or [.., target_year] (ExPost).
// Years without a row become zero rows (the standardized mean).
inline ImageSet to_images(const PanelDataset& ds, Mode mode, int target_year, std::size_t min_years = 6) {
  require(ds.schema.is_ordered(), "to_images: schema columns must be in canonical order");
  require(ds.missing_count() == 0, "to_images: impute missing values first");
  const auto years = ds.years();
  require(!years.empty(), "to_images: empty panel");
  ImageSet s;
  s.mode = mode;
  s.target_year = target_year;
  s.start_year = years.front();
  const int last = mode == Mode::ExAnte ? target_year - 1 : target_year;
  require(last >= s.start_year, "to_images: target year precedes the panel");
  s.height = static_cast<std::size_t>(last - s.start_year + 1);
  s.width = ds.features();
  s.schema = ds.schema;
  for (auto [b, e] : ds.company_ranges()) {
    const auto& company = ds.keys[b].company;
    auto target = ds.find({company, target_year});
    if (!target) continue;
    std::size_t observed = 0;
    for (auto r = b; r < e; ++r)
      if (ds.keys[r].year >= s.start_year && ds.keys[r].year <= last) ++observed;
    if (observed < min_years) continue;
    std::vector<float> px(s.pixel_count(), 0.0f);
    for (auto r = b; r < e; ++r) {
      const int y = ds.keys[r].year;
      if (y < s.start_year || y > last) continue;
      const auto t = static_cast<std::size_t>(y - s.start_year);
      for (std::size_t j = 0; j < s.width; ++j) px[t * s.width + j] = static_cast<float>(ds.at(r, j));
    }
    s.push(company, std::move(px), ds.is_fraud(*target) ? 1 : 0);
  }
  require(s.size() > 0, "to_images: no qualifying companies");
  return s;
}

struct SmoteReport {
  std::size_t synthesized = 0;
  int minority_label = 1;
  std::vector<std::pair<std::size_t, std::size_t>> parents;  // (x, x_nn) input indices per synthetic sample
};

// Oversamples the minority class to the majority count. Each synthetic
// vector is x + u * (x_nn - x) with one u ~ U[0,1) per vector, x a random
// minority sample and x_nn one of its k nearest minority neighbours
// (Euclidean on the flattened image). Originals are kept in place.
inline ImageSet smote_balance(const ImageSet& s, std::size_t k, std::uint64_t seed, SmoteReport* report = nullptr) {
  const std::size_t n1 = s.count(1);
  const std::size_t n0 = s.count(0);
  require(n0 > 0 && n1 > 0, "smote: both classes must be present");
  const int minority = n1 <= n0 ? 1 : 0;
  std::vector<std::size_t> mi;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.labels[i] == minority) mi.push_back(i);
  require(mi.size() > k, "smote: minority count (" + std::to_string(mi.size()) + ") must exceed k (" +
                             std::to_string(k) + ")");
  const std::size_t needed = std::max(n0, n1) - mi.size();

  const std::size_t d = s.pixel_count();
  std::vector<std::vector<std::size_t>> neighbours(mi.size());
  for (std::size_t a = 0; a < mi.size(); ++a) {
    std::vector<std::pair<double, std::size_t>> dist;
    const auto& xa = s.pixels[mi[a]];
    for (std::size_t b = 0; b < mi.size(); ++b) {
      if (a == b) continue;
      const auto& xb = s.pixels[mi[b]];
      double sum = 0.0;
      for (std::size_t p = 0; p < d; ++p) {
        const double diff = static_cast<double>(xa[p]) - static_cast<double>(xb[p]);
        sum += diff * diff;
      }
      dist.push_back({sum, b});
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t q = 0; q < k; ++q) neighbours[a].push_back(dist[q].second);
  }

  ImageSet out = s;
  Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> parents;
  for (std::size_t n = 0; n < needed; ++n) {
    const auto a = rng.below(mi.size());
    const auto b = neighbours[a][rng.below(k)];
    const double u = rng.uniform();
    const auto& x = s.pixels[mi[a]];
    const auto& y = s.pixels[mi[b]];
    std::vector<float> px(d);
    for (std::size_t p = 0; p < d; ++p)
      px[p] = static_cast<float>(static_cast<double>(x[p]) + u * (static_cast<double>(y[p]) - static_cast<double>(x[p])));
    out.push("smote:" + std::to_string(n), std::move(px), minority);
    parents.emplace_back(mi[a], mi[b]);
  }
  if (report) *report = {needed, minority, std::move(parents)};
  return out;
}

// Directory layout: meta.json, schema.csv and images/NNNNNN.f32 (raw
// little-endian float32, row-major T x F).
inline void save_image_set(const ImageSet& s, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  nlohmann::ordered_json meta;
  meta["format"] = "fraudcnn-imageset";
  meta["version"] = 1;
  meta["mode"] = to_string(s.mode);
  meta["target_year"] = s.target_year;
  meta["start_year"] = s.start_year;
  meta["T"] = s.height;
  meta["F"] = s.width;
  meta["labels"] = s.labels;
  meta["ids"] = s.ids;
  std::vector<std::string> files;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "images/%06zu.f32", i);
    files.emplace_back(name);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write '" + (dir / name).string() + "'");
    for (float v : s.pixels[i]) bytes::put_f32(out, v);
  }
  meta["files"] = files;
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
  write_schema_csv(s.schema, (dir / "schema.csv").string());
}

inline ImageSet load_image_set(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw Error("no image set at '" + dir.string() + "'");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("imageset meta.json: " + std::string(e.what()));
  }
  ImageSet s;
  s.mode = parse_mode(meta.at("mode").get<std::string>());
  s.target_year = meta.at("target_year").get<int>();
  s.start_year = meta.value("start_year", 0);
  s.height = meta.at("T").get<std::size_t>();
  s.width = meta.at("F").get<std::size_t>();
  s.labels = meta.at("labels").get<std::vector<int>>();
  s.ids = meta.at("ids").get<std::vector<std::string>>();
  const auto files = meta.at("files").get<std::vector<std::string>>();
  require(files.size() == s.labels.size() && s.ids.size() == s.labels.size(), "imageset: meta.json lengths differ");
  s.schema = load_schema_csv((dir / "schema.csv").string());
  for (const auto& f : files) {
    std::ifstream img(dir / f, std::ios::binary);
    if (!img) throw Error("imageset: missing '" + f + "'");
    std::vector<float> px(s.pixel_count());
    try {
      for (auto& v : px) v = bytes::get_f32(img);
    } catch (const Error&) {
      throw Error("imageset: truncated '" + f + "'");
    }
    s.pixels.push_back(std::move(px));
  }
  s.check_invariants();
  return s;
}

}  // namespace fraudcnn
