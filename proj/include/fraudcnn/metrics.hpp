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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraudcnn/csv.hpp"
#include "fraudcnn/error.hpp"

namespace fraudcnn {

// Mann-Whitney AUC with midranks: P(s+ > s-) + 0.5 P(s+ == s-).
template <typename S>
double auc(std::span<const S> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  require(n_pos > 0 && n_neg > 0, "auc: both classes must be present");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

template <typename S>
double auc(const std::vector<S>& scores, const std::vector<int>& labels) {
  return auc(std::span<const S>(scores), std::span<const int>(labels));
}

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct Metrics {
  double auc = 0.0;  // NaN when a class is missing
  double recall = 0.0;  // fraud accuracy, TP / (TP + FN)
  double precision = 0.0;
  double fbeta = 0.0;
  double beta = 2.0;
  double fraud_accuracy = 0.0;
  double normal_accuracy = 0.0;  // TN / (TN + FP)
  double threshold = 0.5;
  Confusion confusion;
  // Set when a denominator was zero and the metric was reported as 0.
  bool recall_degenerate = false;
  bool precision_degenerate = false;
  bool fbeta_degenerate = false;
  bool normal_degenerate = false;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["auc"] = std::isnan(auc) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(auc);
    j["recall"] = recall;
    j["precision"] = precision;
    j["fbeta"] = fbeta;
    j["beta"] = beta;
    j["fraud_accuracy"] = fraud_accuracy;
    j["normal_accuracy"] = normal_accuracy;
    j["threshold"] = threshold;
    j["confusion"] = {{"tp", confusion.tp}, {"fp", confusion.fp}, {"tn", confusion.tn}, {"fn", confusion.fn}};
    j["degenerate"] = {{"recall", recall_degenerate},
                       {"precision", precision_degenerate},
                       {"fbeta", fbeta_degenerate},
                       {"normal_accuracy", normal_degenerate}};
    return j;
  }
};

inline double fbeta_score(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double den = b2 * precision + recall;
  return den > 0.0 ? (1.0 + b2) * precision * recall / den : 0.0;
}

// Metrics from a confusion table (auc left as NaN).
inline Metrics metrics_from_confusion(const Confusion& c, double threshold, double beta = 2.0) {
  Metrics m;
  m.auc = std::nan("");
  m.beta = beta;
  m.threshold = threshold;
  m.confusion = c;
  const auto ratio = [](std::size_t num, std::size_t den, bool& degenerate) {
    degenerate = den == 0;
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.recall = ratio(c.tp, c.tp + c.fn, m.recall_degenerate);
  m.precision = ratio(c.tp, c.tp + c.fp, m.precision_degenerate);
  m.normal_accuracy = ratio(c.tn, c.tn + c.fp, m.normal_degenerate);
  m.fraud_accuracy = m.recall;
  m.fbeta = fbeta_score(m.precision, m.recall, beta);
  m.fbeta_degenerate = m.recall_degenerate || m.precision_degenerate || (m.precision + m.recall == 0.0);
  return m;
}

// Predicts fraud iff score >= threshold.
template <typename S>
Metrics classification_metrics(std::span<const S> scores, std::span<const int> labels, double threshold,
                               double beta = 2.0) {
  require(!scores.empty() && scores.size() == labels.size(), "metrics: scores and labels must be nonempty and equal length");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = static_cast<double>(scores[i]) >= threshold;
    if (labels[i]) {
      pred ? ++c.tp : ++c.fn;
    } else {
      pred ? ++c.fp : ++c.tn;
    }
  }
  Metrics m = metrics_from_confusion(c, threshold, beta);
  const bool both = c.tp + c.fn > 0 && c.tn + c.fp > 0;
  m.auc = both ? auc(scores, labels) : std::nan("");
  return m;
}

template <typename S>
Metrics classification_metrics(const std::vector<S>& scores, const std::vector<int>& labels, double threshold,
                               double beta = 2.0) {
  return classification_metrics(std::span<const S>(scores), std::span<const int>(labels), threshold, beta);
}

struct ThresholdCurve {
  std::vector<Metrics> rows;  // one per grid threshold, ascending
};

// Grid thresholds k / steps for k = 0..steps (0.01 spacing by default).
template <typename S>
ThresholdCurve threshold_sweep(std::span<const S> scores, std::span<const int> labels, std::size_t steps = 100,
                               double beta = 2.0) {
  ThresholdCurve curve;
  const double auc_value = auc(scores, labels);
  for (std::size_t k = 0; k <= steps; ++k) {
    auto m = classification_metrics(scores, labels, static_cast<double>(k) / static_cast<double>(steps), beta);
    m.auc = auc_value;
    curve.rows.push_back(m);
  }
  return curve;
}

template <typename S>
ThresholdCurve threshold_sweep(const std::vector<S>& scores, const std::vector<int>& labels, std::size_t steps = 100) {
  return threshold_sweep(std::span<const S>(scores), std::span<const int>(labels), steps);
}

struct ThresholdPolicy {
  enum class Kind { MaxF2, Manual } kind = Kind::MaxF2;
  double value = 0.5;  // used by Manual

  static ThresholdPolicy max_f2() { return {}; }
  static ThresholdPolicy manual(double v) { return {Kind::Manual, v}; }
};

// MaxF2 picks the grid threshold with the largest F-score (smallest on ties).
inline double select_threshold(const ThresholdCurve& curve, const ThresholdPolicy& policy) {
  if (policy.kind == ThresholdPolicy::Kind::Manual) return policy.value;
  require(!curve.rows.empty(), "select_threshold: empty curve");
  const Metrics* best = &curve.rows.front();
  for (const auto& r : curve.rows)
    if (r.fbeta > best->fbeta) best = &r;
  return best->threshold;
}

inline void write_curve_csv(const ThresholdCurve& curve, const std::string& path) {
  csv::Writer w(path);
  w.row({"threshold", "fraud_accuracy", "normal_accuracy", "precision", "f2", "tp", "fp", "tn", "fn"});
  for (const auto& m : curve.rows)
    w.row({csv::format_double(m.threshold), csv::format_double(m.fraud_accuracy),
           csv::format_double(m.normal_accuracy), csv::format_double(m.precision), csv::format_double(m.fbeta),
           std::to_string(m.confusion.tp), std::to_string(m.confusion.fp), std::to_string(m.confusion.tn),
           std::to_string(m.confusion.fn)});
}

// Probability histogram over [0, 1] with `bins` equal-width bins, per class.
template <typename S>
void write_histogram_csv(std::span<const S> scores, std::span<const int> labels, const std::string& path,
                         std::size_t bins = 50) {
  std::vector<std::size_t> pos(bins, 0), neg(bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(static_cast<double>(scores[i]), 0.0, 1.0);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(s * static_cast<double>(bins)));
    (labels[i] ? pos : neg)[b]++;
  }
  csv::Writer w(path);
  w.row({"bin_lo", "bin_hi", "fraud", "normal"});
  for (std::size_t b = 0; b < bins; ++b)
    w.row({csv::format_double(static_cast<double>(b) / static_cast<double>(bins)),
           csv::format_double(static_cast<double>(b + 1) / static_cast<double>(bins)), std::to_string(pos[b]),
           std::to_string(neg[b])});
}

}  // namespace fraudcnn
