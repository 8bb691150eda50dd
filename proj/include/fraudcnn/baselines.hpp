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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fraudcnn/csv.hpp"
#include "fraudcnn/data_model.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/metrics.hpp"

namespace fraudcnn {

struct YearRange {
  int first = 0;
  int last = 0;  // inclusive
  bool empty() const { return last < first; }
  bool contains(int y) const { return y >= first && y <= last; }
};

struct TemporalSplit {
  std::vector<std::size_t> train, valid, test;  // panel row indices
};

// Assigns each (company, year) row by its year; rows outside every range are
// left out.
inline TemporalSplit temporal_split(const PanelDataset& ds, YearRange train, YearRange valid, YearRange test) {
  require(!train.empty(), "temporal_split: empty train range");
  require(!valid.empty(), "temporal_split: empty valid range");
  require(!test.empty(), "temporal_split: empty test range");
  const auto overlap = [](YearRange a, YearRange b) { return a.first <= b.last && b.first <= a.last; };
  require(!overlap(train, valid) && !overlap(train, test) && !overlap(valid, test),
          "temporal_split: year ranges overlap");
  TemporalSplit s;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const int y = ds.keys[r].year;
    if (train.contains(y)) s.train.push_back(r);
    else if (valid.contains(y)) s.valid.push_back(r);
    else if (test.contains(y)) s.test.push_back(r);
  }
  return s;
}

// Dense row-major design matrix and labels for the given panel rows.
struct Design {
  std::vector<double> X;
  std::vector<int> y;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> row(std::size_t i) const { return {X.data() + i * cols, cols}; }
};

inline Design design_from_rows(const PanelDataset& ds, std::span<const std::size_t> idx) {
  Design d;
  d.rows = idx.size();
  d.cols = ds.features();
  d.X.reserve(d.rows * d.cols);
  for (auto r : idx) {
    d.X.insert(d.X.end(), ds.row(r).begin(), ds.row(r).end());
    d.y.push_back(ds.is_fraud(r) ? 1 : 0);
  }
  return d;
}

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double C = 1.0;
  double threshold = 0.35;

  std::size_t nonzero() const {
    return static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w != 0.0; }));
  }
};

struct L1FitReport {
  std::vector<double> objective;  // per accepted iteration, starting at the initial point
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct LogisticLoss {
  const Design& d;
  double C;

  // C * summed BCE of sigmoid(Xw + b) (liblinear scaling of C).
  double value(const std::vector<double>& w, double b) const {
    if (C == 0.0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < d.rows; ++i) {
      const auto x = d.row(i);
      double z = b;
      for (std::size_t j = 0; j < d.cols; ++j) z += w[j] * x[j];
      sum += softplus(z) - (d.y[i] ? z : 0.0);
    }
    return C * sum;
  }

  void gradient(const std::vector<double>& w, double b, std::vector<double>& gw, double& gb) const {
    gw.assign(d.cols, 0.0);
    gb = 0.0;
    if (C == 0.0) return;
    for (std::size_t i = 0; i < d.rows; ++i) {
      const auto x = d.row(i);
      double z = b;
      for (std::size_t j = 0; j < d.cols; ++j) z += w[j] * x[j];
      const double r = 1.0 / (1.0 + std::exp(-z)) - d.y[i];
      for (std::size_t j = 0; j < d.cols; ++j) gw[j] += r * x[j];
      gb += r;
    }
    for (auto& g : gw) g *= C;
    gb *= C;
  }
};

}  // namespace detail

inline double l1_objective(const Design& d, const LinearModel& m) {
  double l1 = 0.0;
  for (double w : m.weights) l1 += std::abs(w);
  return detail::LogisticLoss{d, m.C}.value(m.weights, m.bias) + l1;
}

// Minimizes C * summed BCE + sum |w_j| (bias unpenalized) by proximal gradient
// with backtracking line search, starting from zero. Stops when no parameter
// moves by 1e-7 or more, or after `iters` iterations. The seed is recorded
// for provenance; the solver itself is deterministic.
inline LinearModel fit_l1_logreg(const Design& d, double C, std::size_t iters, std::uint64_t seed = 0,
                                 L1FitReport* report = nullptr, double tol = 1e-7) {
  (void)seed;
  require(d.rows >= 1, "l1 logreg: need at least one row");
  require(C >= 0.0 && std::isfinite(C), "l1 logreg: C must be finite and >= 0");
  const detail::LogisticLoss loss{d, C};
  LinearModel m;
  m.C = C;
  m.weights.assign(d.cols, 0.0);
  L1FitReport rep;
  double f = loss.value(m.weights, m.bias);
  auto objective = [&](const std::vector<double>& w, double fval) {
    double l1 = 0.0;
    for (double v : w) l1 += std::abs(v);
    return fval + l1;
  };
  rep.objective.push_back(objective(m.weights, f));
  double step = 1.0;
  std::vector<double> gw, w_new(d.cols);
  double gb = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    loss.gradient(m.weights, m.bias, gw, gb);
    step *= 2.0;
    double b_new = 0.0, f_new = 0.0;
    for (int tries = 0;; ++tries) {
      for (std::size_t j = 0; j < d.cols; ++j) w_new[j] = detail::soft_threshold(m.weights[j] - step * gw[j], step);
      b_new = m.bias - step * gb;
      f_new = loss.value(w_new, b_new);
      double lin = gb * (b_new - m.bias), sq = (b_new - m.bias) * (b_new - m.bias);
      for (std::size_t j = 0; j < d.cols; ++j) {
        const double dj = w_new[j] - m.weights[j];
        lin += gw[j] * dj;
        sq += dj * dj;
      }
      if (f_new <= f + lin + sq / (2.0 * step) + 1e-15 * std::abs(f) || tries > 60) break;
      step *= 0.5;
    }
    if (!std::isfinite(f_new)) throw DivergenceError("l1 logreg: non-finite objective");
    double change = std::abs(b_new - m.bias);
    for (std::size_t j = 0; j < d.cols; ++j) change = std::max(change, std::abs(w_new[j] - m.weights[j]));
    m.weights.swap(w_new);
    m.bias = b_new;
    f = f_new;
    rep.objective.push_back(objective(m.weights, f));
    rep.iterations = it + 1;
    if (change < tol) {
      rep.converged = true;
      break;
    }
  }
  if (report) *report = std::move(rep);
  return m;
}

struct BinaryPrediction {
  std::vector<double> probs;
  std::vector<int> labels;
};

inline BinaryPrediction predict_binary(const LinearModel& m, const Design& d, double threshold = 0.35) {
  require(d.cols == m.weights.size(), "predict: feature count mismatch");
  BinaryPrediction p;
  for (std::size_t i = 0; i < d.rows; ++i) {
    const auto x = d.row(i);
    double z = m.bias;
    for (std::size_t j = 0; j < d.cols; ++j) z += m.weights[j] * x[j];
    const double prob = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    p.probs.push_back(prob);
    p.labels.push_back(prob >= threshold ? 1 : 0);
  }
  return p;
}

struct KeyedPrediction {
  RowKey key;
  double prob = 0.0;
};

inline std::vector<KeyedPrediction> load_predictions_csv(const std::string& path) {
  const auto rows = csv::read(path);
  require(!rows.empty() && rows[0] == csv::Row{"company_id", "year", "prob"},
          "predictions: header must be company_id,year,prob");
  std::vector<KeyedPrediction> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto where = "predictions line " + std::to_string(r + 1);
    require(rows[r].size() == 3, where + ": needs 3 fields");
    long long year = 0;
    double prob = 0.0;
    require(csv::parse_int(rows[r][1], year), where + ": bad year");
    require(csv::parse_double(rows[r][2], prob) && prob >= 0.0 && prob <= 1.0, where + ": prob must be in [0, 1]");
    out.push_back({{rows[r][0], static_cast<int>(year)}, prob});
  }
  return out;
}

inline void write_predictions_csv(std::span<const KeyedPrediction> preds, const std::string& path) {
  csv::Writer w(path);
  w.row({"company_id", "year", "prob"});
  for (const auto& p : preds) w.row({p.key.company, std::to_string(p.key.year), csv::format_double(p.prob)});
}

struct ComparisonRow {
  std::string model;
  std::size_t n = 0;
  Metrics metrics;
};

// Scores keyed predictions against panel labels; keys without a panel row are
// counted in `unmatched` and skipped.
inline ComparisonRow score_keyed(const std::string& name, std::span<const KeyedPrediction> preds,
                                 const PanelDataset& ds, double threshold, std::size_t* unmatched = nullptr) {
  std::vector<double> p;
  std::vector<int> y;
  std::size_t missing = 0;
  for (const auto& kp : preds) {
    auto r = ds.find(kp.key);
    if (!r) {
      ++missing;
      continue;
    }
    p.push_back(kp.prob);
    y.push_back(ds.is_fraud(*r) ? 1 : 0);
  }
  if (unmatched) *unmatched = missing;
  require(!p.empty(), "compare: no predictions for '" + name + "' match the panel");
  return {name, p.size(), classification_metrics(p, y, threshold)};
}

inline void write_comparison_csv(std::span<const ComparisonRow> rows, const std::string& path) {
  csv::Writer w(path);
  w.row({"model", "n", "auc", "recall", "precision", "f2", "fraud_accuracy", "normal_accuracy", "threshold"});
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    w.row({r.model, std::to_string(r.n), std::isnan(m.auc) ? std::string() : csv::format_double(m.auc),
           csv::format_double(m.recall), csv::format_double(m.precision), csv::format_double(m.fbeta),
           csv::format_double(m.fraud_accuracy), csv::format_double(m.normal_accuracy),
           csv::format_double(m.threshold)});
  }
}

}  // namespace fraudcnn
