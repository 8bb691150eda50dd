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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_util.hpp"

using namespace fraudcnn;
using testutil::entry;

namespace {

// ---- baselines ----

PanelDataset year_panel() {
  std::vector<testutil::Row> rows;
  for (int y = 2010; y <= 2021; ++y) rows.push_back({"C", y, {static_cast<double>(y)}});
  return testutil::make_panel(testutil::continuous_schema(1), rows);
}

TEST(TemporalSplit, PaperRanges) {
  const auto ds = year_panel();
  const auto s = temporal_split(ds, {2010, 2017}, {2018, 2019}, {2020, 2021});
  EXPECT_EQ(s.train.size(), 8u);
  ASSERT_EQ(s.valid.size(), 2u);
  EXPECT_EQ(ds.keys[s.valid[0]].year, 2018);
  EXPECT_EQ(ds.keys[s.valid[1]].year, 2019);
  const auto r2020 = *ds.find({"C", 2020});
  EXPECT_NE(std::find(s.test.begin(), s.test.end(), r2020), s.test.end());
}

TEST(TemporalSplit, EmptyOrOverlappingRangesAreRejected) {
  const auto ds = year_panel();
  EXPECT_THROW(temporal_split(ds, {2010, 2017}, {2018, 2019}, {2021, 2020}), Error);
  EXPECT_THROW(temporal_split(ds, {2010, 2018}, {2018, 2019}, {2020, 2021}), Error);
}

Design make_design(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  Design d;
  d.rows = x.size();
  d.cols = x.empty() ? 0 : x[0].size();
  for (const auto& r : x) d.X.insert(d.X.end(), r.begin(), r.end());
  d.y = y;
  return d;
}

TEST(L1Logreg, ZeroPenaltyBalanceGivesZeroWeights) {
  const auto d = make_design({{1.0}, {-1.0}, {2.0}}, {1, 0, 1});
  const auto m = fit_l1_logreg(d, 0.0, 200);
  EXPECT_EQ(m.nonzero(), 0u);
}

TEST(L1Logreg, SeparableDataGivesPositiveWeight) {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back({i % 2 ? 1.0 : -1.0});
    y.push_back(i % 2);
  }
  const auto m = fit_l1_logreg(make_design(x, y), 100.0, 1000);
  EXPECT_GT(m.weights[0], 0.0);
}

TEST(L1Logreg, NoiseFeatureIsExactlyZero) {
  Rng rng(5);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 400; ++i) {
    const int label = static_cast<int>(rng.below(2));
    x.push_back({(label ? 1.0 : -1.0) + 0.5 * rng.normal(), rng.normal()});
    y.push_back(label);
  }
  const auto d = make_design(x, y);
  const auto m = fit_l1_logreg(d, 0.02, 2000);
  EXPECT_NE(m.weights[0], 0.0);
  EXPECT_EQ(m.weights[1], 0.0);
}

TEST(L1Logreg, ObjectiveNeverIncreasesAndBeatsPerturbations) {
  Rng rng(6);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> r(5);
    for (auto& v : r) v = rng.normal();
    y.push_back(r[0] + 0.5 * r[1] + rng.normal() > 0 ? 1 : 0);
    x.push_back(r);
  }
  const auto d = make_design(x, y);
  L1FitReport rep;
  const auto m = fit_l1_logreg(d, 1.0, 5000, 0, &rep);
  for (std::size_t k = 1; k < rep.objective.size(); ++k) ASSERT_LE(rep.objective[k], rep.objective[k - 1] + 1e-12);
  const double best = l1_objective(d, m);
  for (std::size_t j = 0; j < 5; ++j)
    for (double h : {-1e-3, 1e-3}) {
      auto p = m;
      p.weights[j] += h;
      EXPECT_GE(l1_objective(d, p), best - 1e-9);
    }
}

Design correlated_design(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(p);
    for (auto& v : r) v = rng.normal();
    y.push_back(r[0] - 0.7 * r[1] + 0.3 * r[2] + rng.normal() > 0 ? 1 : 0);
    x.push_back(r);
  }
  return make_design(x, y);
}

TEST(L1Logreg, SubgradientOptimality) {
  const auto d = correlated_design(300, 8, 11);
  for (double C : {0.01, 0.1, 1.0}) {
    const auto m = fit_l1_logreg(d, C, 20000, 0, nullptr, 1e-10);
    std::vector<double> gw;
    double gb = 0.0;
    fraudcnn::detail::LogisticLoss{d, C}.gradient(m.weights, m.bias, gw, gb);
    EXPECT_NEAR(gb, 0.0, 1e-3) << "C=" << C;
    for (std::size_t j = 0; j < d.cols; ++j) {
      if (m.weights[j] == 0.0)
        EXPECT_LE(std::abs(gw[j]), 1.0 + 1e-3) << "C=" << C << " j=" << j;
      else
        EXPECT_NEAR(gw[j], m.weights[j] > 0 ? -1.0 : 1.0, 1e-3) << "C=" << C << " j=" << j;
    }
  }
}

TEST(L1Logreg, NonzeroCountMonotoneInC) {
  const auto d = correlated_design(300, 8, 12);
  std::size_t prev = 0;
  for (double C : {0.0, 0.002, 0.005, 0.01, 0.03, 0.1, 1.0}) {
    const auto nz = fit_l1_logreg(d, C, 20000, 0, nullptr, 1e-10).nonzero();
    EXPECT_GE(nz, prev) << "C=" << C;
    prev = nz;
  }
  EXPECT_GT(prev, 0u);
}

TEST(L1Logreg, RowOrderDoesNotChangeProbabilities) {
  Rng rng(13);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 120; ++i) {
    std::vector<double> r(4);
    for (auto& v : r) v = rng.normal();
    y.push_back(r[0] + r[3] + rng.normal() > 0 ? 1 : 0);
    x.push_back(r);
  }
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::vector<std::vector<double>> xr;
  std::vector<int> yr;
  for (auto i : perm) {
    xr.push_back(x[i]);
    yr.push_back(y[i]);
  }
  const auto d = make_design(x, y);
  const auto a = predict_binary(fit_l1_logreg(d, 0.1, 20000, 0, nullptr, 1e-11), d);
  const auto b = predict_binary(fit_l1_logreg(make_design(xr, yr), 0.1, 20000, 0, nullptr, 1e-11), d);
  for (std::size_t i = 0; i < a.probs.size(); ++i) EXPECT_NEAR(a.probs[i], b.probs[i], 1e-6);
}

TEST(L1Logreg, ZeroModelPredictsHalf) {
  LinearModel m;
  m.weights = {0.0, 0.0};
  const auto p = predict_binary(m, make_design({{1.0, 2.0}, {-3.0, 0.5}}, {0, 1}), 0.35);
  for (double v : p.probs) EXPECT_EQ(v, 0.5);
  for (int l : p.labels) EXPECT_EQ(l, 1);
}

// ---- netpbm ----

TEST(Netpbm, PgmHeaderAndBytes) {
  testutil::TempDir dir("pgm");
  write_pgm({2, 2, {1.0, 1.0, 1.0, 1.0}}, dir.file("a.pgm"));
  const auto bytes = testutil::read_text(dir.file("a.pgm"));
  EXPECT_EQ(bytes, std::string("P5\n2 2\n255\n") + std::string(4, '\xff'));
  const auto d = read_netpbm(dir.file("a.pgm"));
  EXPECT_EQ(d.magic, "P5");
  EXPECT_EQ(d.width, 2u);
  EXPECT_EQ(d.bytes, std::vector<std::uint8_t>(4, 255));
}

TEST(Netpbm, PgmRejectsOutOfRange) {
  testutil::TempDir dir("pgm_bad");
  EXPECT_THROW(write_pgm({1, 1, {1.5}}, dir.file("a.pgm")), Error);
}

// ---- explain ----

ModelConfig small_config() {
  ModelConfig c;
  c.input_h = 8;
  c.input_w = 12;
  c.block1_channels = 4;
  c.block2_channels = 6;
  c.dense_hidden = 8;
  c.seed = 3;
  return c;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

TEST(GradCam, ZeroDenseWeightsGiveZeroMap) {
  Model<double> m(small_config());
  std::fill(m.params[kDense2W].data().begin(), m.params[kDense2W].data().end(), 0.0);
  const auto h = gradcam(m, std::span<const double>(noise(96, 1)));
  for (double v : h.values) EXPECT_EQ(v, 0.0);
}

TEST(GradCam, PaperArchitectureShape) {
  const auto m = build_model(Mode::ExAnte, 283, 1, 16);
  std::vector<float> x(12 * 283);
  const auto n = noise(x.size(), 2);
  std::copy(n.begin(), n.end(), x.begin());
  const auto h = gradcam(m, std::span<const float>(x));
  EXPECT_EQ(h.height, 3u);
  EXPECT_EQ(h.width, 70u);
  EXPECT_EQ(h.source_layer, "block2.pool");
}

TEST(GradCam, GradientsMatchFiniteDifferences) {
  const Model<double> m(small_config());
  const auto x = noise(96, 3);
  GradCamParts<double> parts;
  const auto h = gradcam(m, std::span<const double>(x), &parts);
  EXPECT_NEAR(parts.logit, m.logit_from_block2(parts.activations), 1e-12);
  auto a = parts.activations;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double a0 = a[i], eps = 1e-6;
    a[i] = a0 + eps;
    const double up = m.logit_from_block2(a);
    a[i] = a0 - eps;
    const double dn = m.logit_from_block2(a);
    a[i] = a0;
    ASSERT_NEAR(parts.gradients[i], (up - dn) / (2 * eps), 1e-6) << i;
  }
  double mx = 0.0;
  for (double v : h.values) {
    EXPECT_GE(v, 0.0);
    mx = std::max(mx, v);
  }
  EXPECT_TRUE(mx == 0.0 || std::abs(mx - 1.0) < 1e-12);
}

TEST(GradCam, MapIsReluOfWeightedChannels) {
  const Model<double> m(small_config());
  GradCamParts<double> parts;
  const auto h = gradcam(m, std::span<const double>(noise(96, 4)), &parts);
  const std::size_t hw = h.height * h.width;
  std::vector<double> raw(hw, 0.0);
  for (std::size_t k = 0; k < parts.alpha.size(); ++k)
    for (std::size_t p = 0; p < hw; ++p) raw[p] += parts.alpha[k] * parts.activations[k * hw + p];
  double mx = 0.0;
  for (auto& v : raw) mx = std::max(mx, v = std::max(v, 0.0));
  for (std::size_t p = 0; p < hw; ++p) EXPECT_NEAR(h.values[p], mx > 0 ? raw[p] / mx : 0.0, 1e-12);
}

TEST(Bilinear, ConstantAndCorners) {
  const auto one = bilinear_resize({0.3}, 1, 1, 4, 5);
  for (double v : one) EXPECT_EQ(v, 0.3);
  const auto src = noise(3 * 70, 5);
  const auto up = bilinear_resize(src, 3, 70, 12, 283);
  EXPECT_DOUBLE_EQ(up[0], src[0]);
  EXPECT_DOUBLE_EQ(up[282], src[69]);
  EXPECT_DOUBLE_EQ(up[11 * 283], src[2 * 70]);
  EXPECT_DOUBLE_EQ(up[11 * 283 + 282], src[2 * 70 + 69]);
}

IndicatorSchema grouped_schema() {
  return IndicatorSchema({entry("a", Level1::Financial, "S"), entry("b", Level1::Financial, "S"),
                          entry("c", Level1::Financial, "T"), entry("d", Level1::ESG, "D"),
                          entry("e", Level1::InternalControl, "G")});
}

TEST(Overlay, ConstantHeatmapLuminance) {
  const auto schema = grouped_schema();
  Heatmap h{1, 1, {1.0}, "x"};
  const std::vector<float> base{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto ov = upsample_overlay(h, base, 2, schema, 1);
  for (std::size_t p = 0; p < base.size(); ++p) EXPECT_NEAR(ov.luminance[p], 0.5 * base[p] / 9.0 + 0.5, 1e-12);
}

TEST(Overlay, WidthGrowsBySeparators) {
  const auto schema = grouped_schema();
  Heatmap h{1, 1, {0.5}, "x"};
  const std::vector<float> base(10, 0.0f);
  for (std::size_t scale : {1u, 3u}) {
    const auto ov = upsample_overlay(h, base, 2, schema, scale);
    // Separators before c (level2), d and e (level1).
    ASSERT_EQ(ov.separators.size(), 3u);
    EXPECT_EQ(ov.image.width, (5 + 3) * scale);
    EXPECT_EQ(ov.image.height, 2 * scale);
    const auto plain = upsample_overlay(h, base, 2, schema, scale, Palette::Gray, false);
    EXPECT_EQ(plain.image.width, 5 * scale);
  }
}

TEST(Overlay, SeparatorColumnsAreColoured) {
  const auto schema = grouped_schema();
  Heatmap h{1, 1, {0.5}, "x"};
  const std::vector<float> base(10, 0.0f);
  const auto ov = upsample_overlay(h, base, 2, schema, 2);
  for (const auto& s : ov.separators)
    for (std::size_t y = 0; y < ov.image.height; ++y)
      for (std::size_t dx = 0; dx < 2; ++dx) {
        const auto* px = &ov.image.rgb[(y * ov.image.width + s.x + dx) * 3];
        EXPECT_EQ(px[0], 255);
        EXPECT_EQ(px[1], s.level1 ? 0 : 255);
        EXPECT_EQ(px[2], s.level1 ? 0 : 255);
      }
  testutil::TempDir dir("ppm");
  write_ppm(ov.image, dir.file("o.ppm"));
  const auto d = read_netpbm(dir.file("o.ppm"));
  EXPECT_EQ(d.magic, "P6");
  const auto red = std::find_if(ov.separators.begin(), ov.separators.end(), [](auto& s) { return s.level1; });
  ASSERT_NE(red, ov.separators.end());
  for (std::size_t y = 0; y < d.height; ++y) {
    const auto* px = &d.bytes[(y * d.width + red->x) * 3];
    EXPECT_EQ(px[0], 255);
    EXPECT_EQ(px[1], 0);
    EXPECT_EQ(px[2], 0);
  }
}

TEST(Overlay, SidecarMapsGroupsToPixels) {
  const auto schema = grouped_schema();
  Heatmap h{1, 1, {0.5}, "x"};
  const auto ov = upsample_overlay(h, std::vector<float>(10, 0.0f), 2, schema, 2);
  const auto j = overlay_sidecar(ov);
  ASSERT_EQ(j["groups"].size(), 4u);
  EXPECT_EQ(j["groups"][0]["level2"], "S");
  EXPECT_EQ(j["groups"][0]["pixels"][0], 0);
  EXPECT_EQ(j["groups"][0]["pixels"][1], 4);
  EXPECT_EQ(j["groups"][1]["pixels"][0], 6);  // after one 2-px white separator
  EXPECT_EQ(j["separators"][0]["color"], "white");
  EXPECT_EQ(j["separators"][1]["color"], "red");
}

TEST(Overlay, SchemaMismatchIsRejected) {
  Heatmap h{1, 1, {0.5}, "x"};
  EXPECT_THROW(upsample_overlay(h, std::vector<float>(12, 0.0f), 2, grouped_schema(), 1), Error);
}

TEST(LayerActivations, PaperShapes) {
  const auto m = build_model(Mode::ExAnte, 283, 1, 16);
  const std::vector<float> x(12 * 283, 0.25f);
  const auto l1 = layer_activations(m, std::span<const float>(x), 1);
  EXPECT_EQ(l1.channels, 32u);
  EXPECT_EQ(l1.height, 12u);
  EXPECT_EQ(l1.width, 283u);
  const auto l4 = layer_activations(m, std::span<const float>(x), 4);
  EXPECT_EQ(l4.channels, 64u);
  EXPECT_EQ(l4.height, 6u);
  EXPECT_EQ(l4.width, 141u);
  EXPECT_EQ(l4.grid.width, 8 * 141 + 7);
  EXPECT_THROW(layer_activations(m, std::span<const float>(x), 5), Error);
}

TEST(LayerActivations, ZeroInputIsDrivenByBiases) {
  Model<double> m(small_config());
  for (std::size_t k = 0; k < 4; ++k) m.params[kConv1B][k] = 0.1 * static_cast<double>(k);
  const std::vector<double> x(96, 0.0);
  const auto g = layer_activations(m, std::span<const double>(x), 1);
  for (std::size_t k = 0; k < 4; ++k)
    for (double v : g.maps[k]) EXPECT_EQ(v, k == 0 ? 0.0 : 1.0);
}

// ---- synth ----

SynthConfig small_synth() {
  SynthConfig c;
  c.n_companies = 200;
  c.f_fin = 30;
  c.f_esg = 9;
  c.f_ic = 12;
  c.block_width_min = 6;
  c.block_width_max = 10;
  c.fraud_rate = 0.1;
  return c;
}

TEST(Synth, FraudCountRoundsToNearest) {
  SynthConfig c;
  EXPECT_EQ(c.n_fraud(), 69u);
  const auto d = generate_synthetic(small_synth());
  EXPECT_EQ(d.truth.fraud_blocks.size(), 20u);
  const auto labels = derive_labels(d.violations).labels;
  std::size_t target = 0;
  for (const auto& [k, l] : labels) target += l.is_fraud && k.year == small_synth().target_year();
  EXPECT_EQ(target, 20u);
}

TEST(Synth, DeterministicBySeed) {
  const auto a = generate_synthetic(small_synth());
  const auto b = generate_synthetic(small_synth());
  EXPECT_EQ(a.panel.keys, b.panel.keys);
  EXPECT_EQ(a.panel.values, b.panel.values);
  EXPECT_EQ(a.panel.missing, b.panel.missing);
  auto c = small_synth();
  c.seed = 43;
  EXPECT_NE(generate_synthetic(c).panel.values, a.panel.values);
}

TEST(Synth, NoMissingWhenRateIsZero) {
  auto c = small_synth();
  c.missing_rate = 0.0;
  EXPECT_EQ(generate_synthetic(c).panel.missing_count(), 0u);
}

TEST(Synth, BlocksStayInsideTheirWindows) {
  const auto c = small_synth();
  const auto d = generate_synthetic(c);
  for (const auto* blocks : {&d.truth.fraud_blocks, &d.truth.gray_blocks})
    for (const auto& [company, b] : *blocks) {
      EXPECT_GE(b.year_first, c.target_year() - static_cast<int>(c.recent_years));
      EXPECT_LT(b.year_last, c.target_year());
      EXPECT_LT(b.feature_last, c.n_continuous());
      const auto w = b.feature_last - b.feature_first + 1;
      EXPECT_GE(w, c.block_width_min);
      EXPECT_LE(w, c.block_width_max);
    }
  const auto gray = d.truth.gray_rows();
  const auto labels = derive_labels(d.violations).labels;
  for (const auto& k : gray) {
    auto it = labels.find(k);
    EXPECT_TRUE(it == labels.end() || !it->second.is_fraud);
  }
}

TEST(Synth, GroundTruthJsonRoundTrip) {
  const auto d = generate_synthetic(small_synth());
  const auto back = ground_truth_from_json(nlohmann::json::parse(to_json(d.truth).dump()));
  ASSERT_EQ(back.fraud_blocks.size(), d.truth.fraud_blocks.size());
  for (const auto& [c, b] : d.truth.fraud_blocks) {
    EXPECT_EQ(back.fraud_blocks.at(c).feature_first, b.feature_first);
    EXPECT_EQ(back.fraud_blocks.at(c).year_last, b.year_last);
  }
}

TEST(Synth, InvalidConfigIsRejected) {
  auto c = small_synth();
  c.fraud_rate = 1.0;
  EXPECT_THROW(generate_synthetic(c), Error);
  c = small_synth();
  c.block_width_max = 500;
  EXPECT_THROW(generate_synthetic(c), Error);
}

}  // namespace
