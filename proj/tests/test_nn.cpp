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


#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_util.hpp"

using namespace fraudcnn;

namespace {

Tensor<double> mat(std::size_t h, std::size_t w, std::vector<double> v) { return Tensor<double>({h, w}, std::move(v)); }

// ---- tensor ops ----

TEST(Xcorr, TopLeftElement) {
  const auto in = mat(3, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  const auto k = mat(2, 2, {0, 1, 2, 3});
  const auto out = xcorr2d(in, k, 0, 1);
  ASSERT_EQ(out.shape(), (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(out.at(0, 0), 19.0);
  EXPECT_EQ(out.at(0, 1), 25.0);
  EXPECT_EQ(out.at(1, 0), 37.0);
  EXPECT_EQ(out.at(1, 1), 43.0);
}

TEST(Xcorr, Padded) {
  const auto in = mat(3, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  const auto k = mat(2, 2, {0, 1, 2, 3});
  const auto out = xcorr2d(in, k, 1, 1);
  ASSERT_EQ(out.shape(), (std::vector<std::size_t>{4, 4}));
  EXPECT_EQ(out.at(0, 0), 0.0);
  EXPECT_EQ(out.at(0, 1), 3.0);
  EXPECT_EQ(out.at(1, 0), 9.0);
}

TEST(Xcorr, IdentityKernel) {
  const auto in = mat(2, 3, {1, -2, 3, 4, 5, -6});
  EXPECT_EQ(xcorr2d(in, mat(1, 1, {1})).data(), in.data());
}

TEST(Xcorr, StrideSkips) {
  const auto in = mat(3, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  const auto out = xcorr2d(in, mat(1, 1, {2}), 0, 2);
  EXPECT_EQ(out.data(), (std::vector<double>{0, 4, 12, 16}));
}

TEST(Xcorr, KernelLargerThanInputIsRejected) {
  EXPECT_THROW(xcorr2d(mat(1, 1, {1}), mat(2, 2, {1, 1, 1, 1})), Error);
}

TEST(MaxPool, Examples) {
  EXPECT_EQ(maxpool2d(Tensor<double>({1, 2, 2}, {1, 2, 3, 4})).data(), (std::vector<double>{4}));
  const auto c = maxpool2d(Tensor<double>({2, 4, 6}, 1.5));
  EXPECT_EQ(c.shape(), (std::vector<std::size_t>{2, 2, 3}));
  for (double v : c.data()) EXPECT_EQ(v, 1.5);
  const auto big = maxpool2d(Tensor<double>({1, 13, 283}));
  EXPECT_EQ(big.shape(), (std::vector<std::size_t>{1, 6, 141}));
}

TEST(Activation, Ranges) {
  const Tensor<double> x({5}, {-100.0, -1.0, 0.0, 1.0, 100.0});
  const auto r = activation(x, Activation::ReLU);
  EXPECT_EQ(r.data(), (std::vector<double>{0, 0, 0, 1, 100}));
  const auto s = activation(x, Activation::Sigmoid);
  EXPECT_EQ(s[2], 0.5);
  EXPECT_NEAR(s[3] + s[1], 1.0, 1e-15);
  for (double v : s.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
}

TEST(Dropout, InferenceIsIdentity) {
  const Tensor<double> x({4}, {1, 2, 3, 4});
  EXPECT_EQ(dropout(x, 0.5, false, 1).output.data(), x.data());
}

TEST(Dropout, ZeroRateKeepsAll) {
  const Tensor<double> x({4}, {1, 2, 3, 4});
  const auto r = dropout(x, 0.0, true, 1);
  EXPECT_EQ(r.output.data(), x.data());
  for (double m : r.mask.data()) EXPECT_EQ(m, 1.0);
}

TEST(Dropout, SurvivorFraction) {
  const Tensor<double> x({100000}, 1.0);
  const auto r = dropout(x, 0.5, true, 77);
  std::size_t kept = 0;
  for (double m : r.mask.data()) {
    ASSERT_TRUE(m == 0.0 || m == 2.0);
    kept += m > 0.0;
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1e5, 0.5, 0.01);
}

TEST(Bce, Examples) {
  const std::vector<int> one{1};
  const std::vector<double> p1{1.0}, half{0.5};
  EXPECT_LE(bce_loss<double>(one, p1), 1.2e-7);
  EXPECT_NEAR(bce_loss<double>(one, half), std::log(2.0), 1e-12);
  const std::vector<int> y{1, 0};
  const std::vector<double> p{0.5, 0.5};
  EXPECT_NEAR(bce_loss<double>(y, p), std::log(2.0), 1e-12);
  const std::vector<double> p0{0.0};
  EXPECT_TRUE(std::isfinite(bce_loss<double>(one, p0)));
}

// ---- model ----

ModelConfig tiny_config(std::uint64_t seed = 1) {
  ModelConfig c;
  c.input_h = 6;
  c.input_w = 8;
  c.block1_channels = 4;
  c.block2_channels = 8;
  c.dense_hidden = 16;
  c.seed = seed;
  return c;
}

std::vector<double> random_batch(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

TEST(BuildModel, FlattenSizes) {
  const auto a = reference_architecture(Mode::ExAnte, 283);
  EXPECT_EQ(a.input_h, 12u);
  EXPECT_EQ(a.flat_size(), 13440u);
  const auto p = reference_architecture(Mode::ExPost, 283);
  EXPECT_EQ(p.input_h, 13u);
  EXPECT_EQ(p.flat_size(), 13440u);
  const auto m = build_model(Mode::ExAnte, 283);
  EXPECT_EQ(m.params[kConv1W].shape(), (std::vector<std::size_t>{32, 1, 3, 3}));
  EXPECT_EQ(m.params[kConv4W].shape(), (std::vector<std::size_t>{64, 64, 3, 3}));
  EXPECT_EQ(m.params[kDense1W].shape(), (std::vector<std::size_t>{128, 13440}));
}

TEST(Forward, ProbabilitiesInUnitInterval) {
  const Model<double> m(tiny_config());
  const auto x = random_batch(32 * 48, 2);
  const auto k = m.forward(x, 32, false);
  ASSERT_EQ(k.probs.size(), 32u);
  for (double p : k.probs) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(Forward, ZeroWeightsGiveSigmoidOfBias) {
  Model<double> m(tiny_config());
  for (auto& p : m.params) std::fill(p.data().begin(), p.data().end(), 0.0);
  m.params[kDense2B][0] = 0.7;
  const auto k = m.forward(random_batch(3 * 48, 3), 3, false);
  for (double p : k.probs) EXPECT_DOUBLE_EQ(p, sigmoid(0.7));
}

TEST(Forward, InferenceIsDeterministic) {
  const Model<float> m(tiny_config());
  std::vector<float> x(5 * 48);
  const auto d = random_batch(x.size(), 4);
  std::copy(d.begin(), d.end(), x.begin());
  EXPECT_EQ(m.forward(x, 5, false, 1).probs, m.forward(x, 5, false, 2).probs);
}

TEST(Forward, BatchMatchesSingles) {
  const Model<double> m(tiny_config());
  const auto x = random_batch(4 * 48, 5);
  const auto all = m.forward(x, 4, false).probs;
  for (std::size_t s = 0; s < 4; ++s)
    EXPECT_NEAR(m.forward(std::span<const double>(x).subspan(s * 48, 48), 1, false).probs[0], all[s], 1e-14);
}

TEST(Backward, ZeroInputGivesZeroFirstConvGradient) {
  const Model<double> m(tiny_config());
  const std::vector<double> x(2 * 48, 0.0);
  const auto k = m.forward(x, 2, true, 9);
  const std::vector<int> y{1, 0};
  const auto g = m.backward(k, y);
  for (double v : g[kConv1W].data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, FiniteDifferenceSpotCheck) {
  Model<double> m(tiny_config(3));
  const auto x = random_batch(3 * 48, 6);
  const std::vector<int> y{1, 0, 1};
  const auto g = m.backward(m.forward(x, 3, true, 5), y);
  Rng pick(1);
  for (std::size_t p = 0; p < kParamCount; ++p)
    for (int t = 0; t < 3; ++t) {
      const auto i = pick.below(m.params[p].size());
      const double h = 1e-5, w0 = m.params[p][i];
      m.params[p][i] = w0 + h;
      const double up = bce_loss<double>(y, m.forward(x, 3, true, 5).probs);
      m.params[p][i] = w0 - h;
      const double dn = bce_loss<double>(y, m.forward(x, 3, true, 5).probs);
      m.params[p][i] = w0;
      const double fd = (up - dn) / (2 * h);
      EXPECT_NEAR(g[p][i], fd, 1e-6 + 1e-4 * std::abs(fd)) << kParamNames[p] << "[" << i << "]";
    }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Model<double> m(tiny_config());
  const auto before = m.params;
  ParamSet<double> g;
  for (std::size_t p = 0; p < kParamCount; ++p) {
    g[p] = Tensor<double>(m.params[p].shape());
    for (std::size_t i = 0; i < g[p].size(); ++i) g[p][i] = (i % 2 ? 1.0 : -1.0) * (0.01 + static_cast<double>(i % 7));
  }
  m.adam_step(g, 0.001);
  for (std::size_t p = 0; p < kParamCount; ++p)
    for (std::size_t i = 0; i < g[p].size(); ++i) {
      const double d = m.params[p][i] - before[p][i];
      ASSERT_NEAR(d, -0.001 * (g[p][i] > 0 ? 1.0 : -1.0), 1e-8);
    }
}

TEST(Adam, ZeroGradientKeepsParametersAndDecaysMoments) {
  Model<double> m(tiny_config());
  ParamSet<double> g, zero;
  for (std::size_t p = 0; p < kParamCount; ++p) {
    g[p] = Tensor<double>(m.params[p].shape(), 0.5);
    zero[p] = Tensor<double>(m.params[p].shape(), 0.0);
  }
  m.adam_step(g, 0.01);
  const auto params = m.params;
  const auto m1 = m.adam.m[kConv1W][0], v1 = m.adam.v[kConv1W][0];
  Model<double> copy = m;
  copy.adam.m = ParamSet<double>{};
  for (std::size_t p = 0; p < kParamCount; ++p) copy.adam.m[p] = Tensor<double>(m.params[p].shape());
  copy.adam.v = copy.adam.m;
  copy.adam_step(zero, 0.01);
  EXPECT_EQ(copy.params[kDense1W].data(), params[kDense1W].data());
  m.adam_step(zero, 0.01);
  EXPECT_NEAR(m.adam.m[kConv1W][0], 0.9 * m1, 1e-15);
  EXPECT_NEAR(m.adam.v[kConv1W][0], 0.999 * v1, 1e-15);
}

TEST(Adam, Deterministic) {
  Model<double> a(tiny_config()), b(tiny_config());
  const auto x = random_batch(2 * 48, 8);
  const std::vector<int> y{0, 1};
  for (int i = 0; i < 3; ++i) {
    a.adam_step(a.backward(a.forward(x, 2, true, i), y), 0.01);
    b.adam_step(b.backward(b.forward(x, 2, true, i), y), 0.01);
  }
  for (std::size_t p = 0; p < kParamCount; ++p) EXPECT_EQ(a.params[p].data(), b.params[p].data());
}

TEST(Checkpoint, RoundTripIsExact) {
  Model<float> m(tiny_config(4));
  std::vector<float> x(2 * 48, 0.5f);
  const std::vector<int> y{0, 1};
  m.adam_step(m.backward(m.forward(x, 2, true, 1), y), 0.01);
  testutil::TempDir dir("ckpt");
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(m, path);
  const auto back = load_checkpoint(path);
  for (std::size_t p = 0; p < kParamCount; ++p) {
    EXPECT_EQ(back.model.params[p].data(), m.params[p].data());
    EXPECT_EQ(back.model.adam.v[p].data(), m.adam.v[p].data());
  }
  EXPECT_EQ(back.model.adam.step, 1u);
}

// ---- split / metrics ----

ImageSet labelled(std::size_t n1, std::size_t n0) {
  ImageSet s;
  s.height = s.width = 1;
  for (std::size_t i = 0; i < n1 + n0; ++i) s.push("c" + std::to_string(i), {static_cast<float>(i)}, i < n1 ? 1 : 0);
  return s;
}

TEST(Split, PaperCounts) {
  const auto sp = stratified_split(labelled(1367, 1367), SplitSpec{});
  EXPECT_EQ(sp.train.count(1), 957u);
  EXPECT_EQ(sp.train.count(0), 956u);
  EXPECT_EQ(sp.valid.count(1), 205u);
  EXPECT_EQ(sp.valid.count(0), 205u);
  EXPECT_EQ(sp.test.count(1), 205u);
  EXPECT_EQ(sp.test.count(0), 206u);
}

TEST(Split, ThirdsOfThree) {
  SplitSpec spec;
  spec.train = spec.valid = spec.test = 1.0 / 3.0;
  spec.test = 1.0 - 2.0 / 3.0;
  const auto sp = stratified_split(labelled(3, 0), spec);
  EXPECT_EQ(sp.train.size(), 1u);
  EXPECT_EQ(sp.valid.size(), 1u);
  EXPECT_EQ(sp.test.size(), 1u);
}

TEST(Split, DeterministicAndDisjoint) {
  const auto s = labelled(40, 300);
  const auto a = stratified_split(s, SplitSpec{});
  const auto b = stratified_split(s, SplitSpec{});
  EXPECT_EQ(a.train.ids, b.train.ids);
  EXPECT_EQ(a.test.ids, b.test.ids);
  std::set<std::string> all;
  for (const auto* part : {&a.train, &a.valid, &a.test}) all.insert(part->ids.begin(), part->ids.end());
  EXPECT_EQ(all.size(), s.size());
}

TEST(Split, BadRatiosAreRejected) {
  SplitSpec spec;
  spec.train = 0.8;
  EXPECT_THROW(stratified_split(labelled(5, 5), spec), Error);
}

TEST(Auc, Examples) {
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, y), 0.5);
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y), 0.75);
}

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        den += 1.0;
        num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return num / den;
}

TEST(Auc, MatchesPairCountAndIsTransformInvariant) {
  Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.normal() * 4.0) / 4.0;  // ties on purpose
      y[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
    }
    const double a = auc(s, y);
    ASSERT_NEAR(a, brute_auc(s, y), 1e-12);
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = std::exp(3.0 * s[i]) + 1.0;
    ASSERT_NEAR(auc(m, y), a, 1e-12);
    std::vector<int> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - y[i];
    ASSERT_NEAR(auc(s, flipped), 1.0 - a, 1e-12);
  }
}

TEST(Metrics, FormulaExamples) {
  EXPECT_NEAR(fbeta_score(1.0, 0.5, 2.0), 5.0 / 9.0, 1e-12);
  for (double p : {0.1, 0.37, 0.9})
    for (double b : {0.5, 1.0, 2.0, 3.0}) EXPECT_NEAR(fbeta_score(p, p, b), p, 1e-12);
  Confusion c;
  c.tp = 2;
  EXPECT_EQ(metrics_from_confusion(c, 0.5).recall, 1.0);
}

TEST(Metrics, ConfusionAndRates) {
  const std::vector<double> s{0.9, 0.6, 0.4, 0.2, 0.7};
  const std::vector<int> y{1, 1, 1, 0, 0};
  const auto m = classification_metrics(s, y, 0.5);
  EXPECT_EQ(m.confusion, (Confusion{2, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.normal_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.fraud_accuracy, m.recall);
}

TEST(Metrics, DegenerateDenominatorsAreFlagged) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<int> y{0, 0};
  const auto m = classification_metrics(s, y, 0.5);
  EXPECT_TRUE(m.recall_degenerate);
  EXPECT_TRUE(m.precision_degenerate);
  EXPECT_TRUE(std::isnan(m.auc));
}

TEST(Sweep, Endpoints) {
  const std::vector<double> s{0.2, 0.4, 0.6, 0.8};
  const std::vector<int> y{0, 1, 0, 1};
  const auto c = threshold_sweep(s, y);
  ASSERT_EQ(c.rows.size(), 101u);
  EXPECT_EQ(c.rows.front().recall, 1.0);
  EXPECT_EQ(c.rows[85].recall, 0.0);
  for (std::size_t k = 1; k < c.rows.size(); ++k) {
    EXPECT_LE(c.rows[k].fraud_accuracy, c.rows[k - 1].fraud_accuracy);
    EXPECT_GE(c.rows[k].normal_accuracy, c.rows[k - 1].normal_accuracy);
  }
}

TEST(SelectThreshold, ManualPassesThrough) {
  const ThresholdCurve c;
  EXPECT_EQ(select_threshold(c, ThresholdPolicy::manual(0.45)), 0.45);
  EXPECT_EQ(select_threshold(c, ThresholdPolicy::manual(0.75)), 0.75);
}

TEST(SelectThreshold, MaxF2MatchesArgmaxOracle) {
  const std::vector<double> s{0.05, 0.12, 0.25, 0.28, 0.31, 0.33, 0.5, 0.7, 0.9, 0.95};
  const std::vector<int> y{0, 0, 0, 0, 1, 1, 0, 1, 0, 1};
  const auto c = threshold_sweep(s, y);
  double best = -1.0, at = -1.0;
  for (std::size_t k = 0; k <= 100; ++k) {
    const auto m = classification_metrics(s, y, k / 100.0);
    if (m.fbeta > best) {
      best = m.fbeta;
      at = k / 100.0;
    }
  }
  EXPECT_DOUBLE_EQ(select_threshold(c, ThresholdPolicy::max_f2()), at);
  EXPECT_NEAR(at, 0.29, 0.02);
}

// ---- training ----

ImageSet small_images(std::size_t n, std::uint64_t seed) {
  ImageSet s;
  s.height = 6;
  s.width = 8;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> p(48);
    const int label = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < 48; ++j) p[j] = static_cast<float>(rng.normal() + (label && j < 12 ? 1.5 : 0.0));
    s.push("c" + std::to_string(i), std::move(p), label);
  }
  return s;
}

TEST(TrainLoop, ZeroEpochsIsANoOp) {
  Model<float> m(tiny_config());
  const auto before = m.params;
  TrainHyper h;
  h.epochs = 0;
  const auto r = train_loop(m, small_images(8, 1), small_images(4, 2), h);
  EXPECT_TRUE(r.epochs.empty());
  for (std::size_t p = 0; p < kParamCount; ++p) EXPECT_EQ(m.params[p].data(), before[p].data());
}

TEST(TrainLoop, OverfitsOneBatch) {
  auto cfg = tiny_config(2);
  cfg.block1_channels = 32;
  cfg.block2_channels = 64;
  cfg.dense_hidden = 128;
  Model<float> m(cfg);
  TrainHyper h;
  h.epochs = 50;
  h.batch_size = 32;
  h.learning_rate = 0.002;
  const auto r = train_loop(m, small_images(32, 3), ImageSet{}, h);
  ASSERT_EQ(r.epochs.size(), 50u);
  EXPECT_LT(r.epochs.back().train_loss, 0.05);
}

TEST(TrainLoop, SameSeedSameLog) {
  TrainHyper h;
  h.epochs = 3;
  h.batch_size = 8;
  h.learning_rate = 0.005;
  const auto train = small_images(40, 4), valid = small_images(10, 5);
  Model<float> a(tiny_config(7)), b(tiny_config(7));
  const auto ra = train_loop(a, train, valid, h), rb = train_loop(b, train, valid, h);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(ra.epochs[e].train_loss, rb.epochs[e].train_loss);
    EXPECT_EQ(ra.epochs[e].valid_auc, rb.epochs[e].valid_auc);
  }
  for (std::size_t p = 0; p < kParamCount; ++p) EXPECT_EQ(a.params[p].data(), b.params[p].data());
}

TEST(Evaluate, SeparatedScoresGiveFullRecall) {
  Model<float> m(tiny_config());
  const auto test = small_images(20, 6);
  auto e = evaluate(m, test, 0.0);
  EXPECT_EQ(e.metrics.recall, 1.0);
  EXPECT_EQ(e.probs.size(), 20u);
}

}  // namespace
