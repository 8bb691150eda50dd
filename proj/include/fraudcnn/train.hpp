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
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraudcnn/csv.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/features.hpp"
#include "fraudcnn/metrics.hpp"
#include "fraudcnn/model.hpp"
#include "fraudcnn/rng.hpp"

namespace fraudcnn {

struct SplitSpec {
  double train = 0.70;
  double valid = 0.15;
  double test = 0.15;
  bool stratified = true;
  std::uint64_t seed = 42;

  void validate() const {
    require(train > 0.0 && valid > 0.0 && test > 0.0, "split: every ratio must be > 0");
    require(std::abs(train + valid + test - 1.0) <= 1e-9, "split: ratios must sum to 1");
  }
};

struct Split {
  ImageSet train, valid, test;
};

namespace detail {

// Distributes `total` over groups proportionally to `sizes` by largest
// remainder; equal remainders go to the lower group index.
inline std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<std::size_t>& sizes) {
  const double sum = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
  std::vector<std::size_t> out(sizes.size(), 0);
  std::vector<double> frac(sizes.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double quota = sum > 0.0 ? static_cast<double>(total) * static_cast<double>(sizes[g]) / sum : 0.0;
    out[g] = std::min(sizes[g], static_cast<std::size_t>(std::floor(quota + 1e-9)));
    frac[g] = quota - static_cast<double>(out[g]);
    assigned += out[g];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total && k < order.size(); ++k) {
    if (out[order[k]] < sizes[order[k]]) {
      ++out[order[k]];
      ++assigned;
    }
  }
  return out;
}

inline std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

}  // namespace detail

// Split totals: test = ceil(test * N), valid = ceil(valid / (train + valid) *
// remaining), train = the rest. Under stratification each split's total is
// distributed over the classes by largest remainder, test first, then valid
// from what is left. Members are drawn from a seeded shuffle of each class.
inline Split stratified_split(const ImageSet& s, const SplitSpec& spec) {
  spec.validate();
  const std::size_t N = s.size();
  require(N >= 3, "split: need at least 3 samples");
  const std::size_t n_test = detail::ceil_count(spec.test * static_cast<double>(N));
  const std::size_t n_valid =
      detail::ceil_count(spec.valid / (spec.train + spec.valid) * static_cast<double>(N - n_test));
  require(n_test + n_valid < N, "split: no samples left for training");

  std::vector<std::vector<std::size_t>> groups;
  if (spec.stratified) {
    groups.resize(2);
    for (std::size_t i = 0; i < N; ++i) groups[static_cast<std::size_t>(s.labels[i])].push_back(i);
  } else {
    groups.emplace_back(N);
    std::iota(groups[0].begin(), groups[0].end(), 0);
  }
  Rng rng(spec.seed);
  for (auto& g : groups) rng.shuffle(g.begin(), g.end());

  std::vector<std::size_t> sizes;
  for (const auto& g : groups) sizes.push_back(g.size());
  const auto test_alloc = detail::largest_remainder(n_test, sizes);
  std::vector<std::size_t> rest(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) rest[g] = sizes[g] - test_alloc[g];
  const auto valid_alloc = detail::largest_remainder(n_valid, rest);

  std::vector<std::size_t> tr, va, te;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& idx = groups[g];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k < test_alloc[g])
        te.push_back(idx[k]);
      else if (k < test_alloc[g] + valid_alloc[g])
        va.push_back(idx[k]);
      else
        tr.push_back(idx[k]);
    }
  }
  for (auto* v : {&tr, &va, &te}) std::sort(v->begin(), v->end());
  return {s.subset(tr), s.subset(va), s.subset(te)};
}

struct TrainHyper {
  double learning_rate = 0.0005;
  std::size_t batch_size = 64;
  std::size_t epochs = 8;
  std::uint64_t seed = 42;

  nlohmann::ordered_json to_json() const {
    return {{"learning_rate", learning_rate}, {"batch_size", batch_size}, {"epochs", epochs}, {"seed", seed}};
  }
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_auc = 0.0;  // over the epoch's training-mode predictions
  double valid_auc = 0.0;  // NaN without a two-class validation set
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  TrainHyper hyper;
};

inline void write_report_csv(const TrainReport& r, const std::string& path) {
  csv::Writer w(path);
  w.row({"epoch", "train_auc", "valid_auc", "train_loss", "valid_loss"});
  for (const auto& e : r.epochs)
    w.row({std::to_string(e.epoch), csv::format_double(e.train_auc), csv::format_double(e.valid_auc),
           csv::format_double(e.train_loss), csv::format_double(e.valid_loss)});
}

namespace detail {

inline double safe_auc(const std::vector<float>& p, const std::vector<int>& y) {
  const bool both = std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
  return both ? auc(p, y) : std::nan("");
}

}  // namespace detail

// Seeded shuffle per epoch, mini-batches of batch_size (last partial batch
// kept), one Adam update per batch. Throws DivergenceError on a non-finite
// loss.
inline TrainReport train_loop(Model<float>& model, const ImageSet& train, const ImageSet& valid, const TrainHyper& hyper,
                              const std::function<void(const EpochLog&)>& on_epoch = {}) {
  require(train.size() > 0, "train: empty training set");
  require(hyper.batch_size >= 1, "train: batch_size must be >= 1");
  require(train.height == model.config.input_h && train.width == model.config.input_w,
          "train: image shape does not match the model input");
  TrainReport report;
  report.hyper = hyper;
  const std::size_t px = train.pixel_count();
  std::vector<std::size_t> order(train.size());
  std::vector<float> batch;
  std::vector<int> y;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng(derive_seed(hyper.seed, epoch)).shuffle(order.begin(), order.end());
    std::vector<float> seen_probs;
    std::vector<int> seen_labels;
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size, ++batch_index) {
      const std::size_t n = std::min(hyper.batch_size, order.size() - start);
      batch.resize(n * px);
      y.resize(n);
      for (std::size_t s = 0; s < n; ++s) {
        const auto i = order[start + s];
        std::copy(train.pixels[i].begin(), train.pixels[i].end(), batch.begin() + static_cast<std::ptrdiff_t>(s * px));
        y[s] = train.labels[i];
      }
      const auto dropout_seed = derive_seed(derive_seed(hyper.seed, 0x5eed0000ULL + epoch), batch_index);
      auto cache = model.forward(batch, n, true, dropout_seed);
      const double loss = bce_loss<float>(y, cache.probs);
      if (!std::isfinite(loss))
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                              std::to_string(batch_index + 1) + "; try a smaller learning rate");
      loss_sum += loss * static_cast<double>(n);
      seen_probs.insert(seen_probs.end(), cache.probs.begin(), cache.probs.end());
      seen_labels.insert(seen_labels.end(), y.begin(), y.end());
      model.adam_step(model.backward(cache, y), hyper.learning_rate);
    }
    EpochLog log;
    log.epoch = epoch + 1;
    log.train_loss = loss_sum / static_cast<double>(order.size());
    log.train_auc = detail::safe_auc(seen_probs, seen_labels);
    if (valid.size() > 0) {
      const auto p = model.predict(valid.pixels);
      log.valid_loss = bce_loss<float>(valid.labels, p);
      log.valid_auc = detail::safe_auc(p, valid.labels);
    } else {
      log.valid_loss = log.valid_auc = std::nan("");
    }
    report.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return report;
}

struct Evaluation {
  Metrics metrics;
  std::vector<float> probs;
};

inline Evaluation evaluate(const Model<float>& model, const ImageSet& test, double threshold, double beta = 2.0) {
  require(test.size() > 0, "evaluate: empty test set");
  Evaluation e;
  e.probs = model.predict(test.pixels);
  e.metrics = classification_metrics(e.probs, test.labels, threshold, beta);
  return e;
}

}  // namespace fraudcnn
