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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fraudcnn/csv.hpp"
#include "fraudcnn/data_model.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/rng.hpp"

namespace fraudcnn {

inline constexpr double kEulerGamma = 0.5772156649;

// Average unsuccessful-search path length of a BST built on psi points; the
// normalizer of isolation-forest path lengths.
inline double c_factor(std::size_t psi) {
  if (psi > 2) {
    const double n = static_cast<double>(psi);
    const double harmonic = std::log(n - 1.0) + kEulerGamma;
    return 2.0 * harmonic - 2.0 * (n - 1.0) / n;
  }
  return psi == 2 ? 1.0 : 0.0;
}

struct IsoNode {
  static constexpr std::int32_t kLeaf = -1;
  std::int32_t feature = kLeaf;  // kLeaf for external nodes
  double split = 0.0;            // go left iff x[feature] <= split
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::size_t size = 0;  // samples reaching the node
  bool is_leaf() const { return feature == kLeaf; }
};

struct IsoTree {
  std::vector<IsoNode> nodes;  // nodes[0] is the root

  // Edges traversed plus c(size) at the external node reached.
  double path_length(std::span<const double> x) const {
    std::size_t at = 0;
    double depth = 0.0;
    while (!nodes[at].is_leaf()) {
      const auto& n = nodes[at];
      at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.split ? n.left : n.right);
      depth += 1.0;
    }
    return depth + c_factor(nodes[at].size);
  }

  std::size_t max_depth() const {
    std::vector<std::size_t> depth(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, depth[i]);
      if (!nodes[i].is_leaf()) {
        depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
        depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
      }
    }
    return best;
  }
};

// Row-major N x F view.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

struct IsoForest {
  std::vector<IsoTree> trees;
  std::size_t psi = 0;
  std::size_t n_trees = 0;
  std::uint64_t seed = 0;

  double mean_path_length(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.path_length(x);
    return sum / static_cast<double>(trees.size());
  }

  // s = 2^(-E[h(x)] / c(psi)), in (0, 1].
  double score(std::span<const double> x) const {
    return std::exp2(-mean_path_length(x) / c_factor(psi));
  }
};

inline double anomaly_score(const IsoForest& forest, std::span<const double> x) { return forest.score(x); }

namespace detail {

inline void grow(IsoTree& tree, std::int32_t node_id, const MatrixView& X, std::vector<std::size_t>& idx,
                 std::size_t begin, std::size_t end, std::size_t depth, std::size_t depth_limit, Rng& rng,
                 std::vector<std::size_t>& candidates) {
  const std::size_t n = end - begin;
  tree.nodes[static_cast<std::size_t>(node_id)].size = n;
  if (depth >= depth_limit || n <= 1) return;

  // Features that still vary inside this node.
  candidates.clear();
  for (std::size_t f = 0; f < X.cols; ++f) {
    const double first = X.data[idx[begin] * X.cols + f];
    for (std::size_t k = begin + 1; k < end; ++k)
      if (X.data[idx[k] * X.cols + f] != first) {
        candidates.push_back(f);
        break;
      }
  }
  if (candidates.empty()) return;

  const std::size_t f = candidates[rng.below(candidates.size())];
  double lo = X.data[idx[begin] * X.cols + f];
  double hi = lo;
  for (std::size_t k = begin; k < end; ++k) {
    const double v = X.data[idx[k] * X.cols + f];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double split = rng.uniform(lo, hi);
  if (split >= hi) split = lo;  // keeps both sides nonempty

  auto mid_it = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                      idx.begin() + static_cast<std::ptrdiff_t>(end),
                                      [&](std::size_t i) { return X.data[i * X.cols + f] <= split; });
  const auto mid = static_cast<std::size_t>(mid_it - idx.begin());

  const auto left = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.push_back({});
  const auto right = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.push_back({});
  auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
  node.feature = static_cast<std::int32_t>(f);
  node.split = split;
  node.left = left;
  node.right = right;
  grow(tree, left, X, idx, begin, mid, depth + 1, depth_limit, rng, candidates);
  grow(tree, right, X, idx, mid, end, depth + 1, depth_limit, rng, candidates);
}

}  // namespace detail

// Each tree draws psi distinct rows (sorted) with its own seed derived from
// `seed`, so trees are independent of fitting order.
inline IsoForest fit_iforest(const MatrixView& X, std::size_t n_trees, std::size_t psi, std::uint64_t seed) {
  require(psi >= 2, "iforest: psi must be >= 2");
  require(X.rows >= psi, "iforest: need N >= psi (N=" + std::to_string(X.rows) + ", psi=" + std::to_string(psi) + ")");
  require(n_trees >= 1, "iforest: n_trees must be >= 1");
  for (double v : X.data) require(std::isfinite(v), "iforest: input must be fully imputed");

  IsoForest forest;
  forest.psi = psi;
  forest.n_trees = n_trees;
  forest.seed = seed;
  forest.trees.resize(n_trees);
  const auto depth_limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi))));
  std::vector<std::size_t> all(X.rows);
  std::vector<std::size_t> candidates;
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> idx;
    if (psi == X.rows) {
      idx.resize(X.rows);
      std::iota(idx.begin(), idx.end(), 0);
    } else {
      std::iota(all.begin(), all.end(), 0);
      for (std::size_t k = 0; k < psi; ++k) std::swap(all[k], all[k + rng.below(X.rows - k)]);
      idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi));
      std::sort(idx.begin(), idx.end());
    }
    auto& tree = forest.trees[t];
    tree.nodes.push_back({});
    detail::grow(tree, 0, X, idx, 0, psi, 0, depth_limit, rng, candidates);
  }
  return forest;
}

struct RemovedRow {
  RowKey key;
  double score = 0.0;
};

struct GrayFilterResult {
  PanelDataset dataset;
  std::vector<RemovedRow> removed;  // highest score first
};

// Dense copy of the non-fraud rows, for fitting the forest.
inline std::vector<double> non_fraud_matrix(const PanelDataset& ds, std::vector<std::size_t>* row_ids = nullptr) {
  std::vector<double> out;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    if (ds.is_fraud(r)) continue;
    out.insert(out.end(), ds.row(r).begin(), ds.row(r).end());
    if (row_ids) row_ids->push_back(r);
  }
  return out;
}

inline IsoForest fit_iforest_non_fraud(const PanelDataset& ds, std::size_t n_trees, std::size_t psi_cap,
                                       std::uint64_t seed) {
  require(ds.missing_count() == 0, "iforest: impute missing values first");
  const auto X = non_fraud_matrix(ds);
  const std::size_t n = X.size() / ds.features();
  return fit_iforest({X, n, ds.features()}, n_trees, std::min(psi_cap, n), seed);
}

// Drops the floor(quantile * #non-fraud) highest-scoring non-fraud rows.
// Ties are broken by key order. Fraud rows are never removed.
inline GrayFilterResult filter_gray(const PanelDataset& ds, const IsoForest& forest, double quantile) {
  require(quantile > 0.0 && quantile < 1.0, "filter_gray: quantile must be in (0, 1)");
  std::vector<std::size_t> candidates;
  std::vector<double> scores;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    if (ds.is_fraud(r)) continue;
    candidates.push_back(r);
    scores.push_back(forest.score(ds.row(r)));
  }
  const auto n_remove = static_cast<std::size_t>(std::floor(quantile * static_cast<double>(candidates.size())));
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  GrayFilterResult out;
  std::vector<bool> drop(ds.rows(), false);
  for (std::size_t k = 0; k < n_remove; ++k) {
    const auto r = candidates[order[k]];
    drop[r] = true;
    out.removed.push_back({ds.keys[r], scores[order[k]]});
  }
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < ds.rows(); ++r)
    if (!drop[r]) keep.push_back(r);
  out.dataset = ds.select_rows(keep);
  return out;
}

inline void write_removed_csv(std::span<const RemovedRow> removed, const std::string& path) {
  csv::Writer w(path);
  w.row({"company_id", "year", "score"});
  for (const auto& r : removed) w.row({r.key.company, std::to_string(r.key.year), csv::format_double(r.score)});
}

}  // namespace fraudcnn
