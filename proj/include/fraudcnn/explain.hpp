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
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraudcnn/data_model.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/model.hpp"
#include "fraudcnn/netpbm.hpp"

namespace fraudcnn {

struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // >= 0, max-normalized (all zeros allowed)
  std::string source_layer;

  double at(std::size_t i, std::size_t j) const { return values[i * width + j]; }
};

// Channel weights, activations and raw map behind a Grad-CAM heatmap.
template <typename T>
struct GradCamParts {
  std::vector<T> activations;  // C x h x w, block-2 output (post-ReLU, pooled)
  std::vector<T> gradients;    // d logit / d activations
  std::vector<double> alpha;   // spatial mean of gradients per channel
  double logit = 0.0;
};

// Grad-CAM on the last convolutional block's output: gradients of the
// pre-sigmoid logit, averaged spatially per channel, weight the channel maps;
// the ReLU of the sum is max-normalized.
template <typename T>
Heatmap gradcam(const Model<T>& model, std::span<const T> image, GradCamParts<T>* parts = nullptr) {
  require(model.params[kDense2W].size() > 0, "gradcam: model has no parameters");
  const auto& c = model.config;
  auto cache = model.forward(image, 1, false);
  const T one = T(1);
  std::vector<T> grad;
  model.backward_from_logits(cache, std::span<const T>(&one, 1), &grad, false);

  const std::size_t C = c.block2_channels, h = c.pool2_h(), w = c.pool2_w(), hw = h * w;
  Heatmap map;
  map.height = h;
  map.width = w;
  map.source_layer = "block2.pool";
  map.values.assign(hw, 0.0);
  std::vector<double> alpha(C, 0.0);
  for (std::size_t k = 0; k < C; ++k) {
    double s = 0.0;
    for (std::size_t p = 0; p < hw; ++p) s += static_cast<double>(grad[k * hw + p]);
    alpha[k] = s / static_cast<double>(hw);
  }
  for (std::size_t k = 0; k < C; ++k)
    for (std::size_t p = 0; p < hw; ++p) map.values[p] += alpha[k] * static_cast<double>(cache.pool2[k * hw + p]);
  double mx = 0.0;
  for (auto& v : map.values) {
    v = std::max(v, 0.0);
    mx = std::max(mx, v);
  }
  if (mx > 0.0)
    for (auto& v : map.values) v /= mx;
  if (parts) {
    parts->activations = cache.pool2;
    parts->gradients = grad;
    parts->alpha = alpha;
    parts->logit = static_cast<double>(cache.logits[0]);
  }
  return map;
}

// Corner-aligned bilinear resize: output corners coincide with input corners.
inline std::vector<double> bilinear_resize(const std::vector<double>& src, std::size_t sh, std::size_t sw,
                                           std::size_t dh, std::size_t dw) {
  require(sh >= 1 && sw >= 1 && src.size() == sh * sw, "bilinear: bad source");
  std::vector<double> out(dh * dw);
  const auto coord = [](std::size_t i, std::size_t dst, std::size_t srcn) {
    return dst > 1 ? static_cast<double>(i) * static_cast<double>(srcn - 1) / static_cast<double>(dst - 1) : 0.0;
  };
  for (std::size_t i = 0; i < dh; ++i) {
    const double y = coord(i, dh, sh);
    const auto y0 = std::min(static_cast<std::size_t>(std::floor(y)), sh - 1);
    const auto y1 = std::min(y0 + 1, sh - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t j = 0; j < dw; ++j) {
      const double x = coord(j, dw, sw);
      const auto x0 = std::min(static_cast<std::size_t>(std::floor(x)), sw - 1);
      const auto x1 = std::min(x0 + 1, sw - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = src[y0 * sw + x0] * (1 - fx) + src[y0 * sw + x1] * fx;
      const double bot = src[y1 * sw + x0] * (1 - fx) + src[y1 * sw + x1] * fx;
      out[i * dw + j] = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

enum class Palette { Gray, Hot };

inline Palette parse_palette(const std::string& s) {
  if (s == "gray") return Palette::Gray;
  if (s == "hot") return Palette::Hot;
  throw Error("unknown palette '" + s + "' (expected gray or hot)");
}

struct Separator {
  std::size_t x = 0;       // first output column of the separator
  std::size_t feature = 0; // schema column the separator precedes
  bool level1 = false;     // red when true, white otherwise
};

struct GroupSpan {
  std::string level1;
  std::string level2;
  std::size_t first_feature = 0, last_feature = 0;  // inclusive
  std::size_t x_begin = 0, x_end = 0;               // output pixels [begin, end)
};

struct OverlayImage {
  RgbImage image;
  std::vector<double> luminance;  // T x F blend before scaling, in [0, 1]
  std::vector<Separator> separators;
  std::vector<GroupSpan> groups;
  std::size_t scale = 1;
};

// Heatmap upsampled to the input grid, blended 50/50 with the min-max
// normalized input, scaled by an integer factor, with `scale`-wide separator
// columns inserted at level1 (red) and level2 (white) group boundaries.
inline OverlayImage upsample_overlay(const Heatmap& heat, std::span<const float> base, std::size_t T,
                                     const IndicatorSchema& schema, std::size_t scale, Palette palette = Palette::Gray,
                                     bool separators = true) {
  require(scale >= 1, "overlay: scale must be >= 1");
  const std::size_t F = schema.size();
  require(base.size() == T * F, "overlay: schema has " + std::to_string(F) + " features but the image has " +
                                    std::to_string(T == 0 ? 0 : base.size() / T));
  const auto up = bilinear_resize(heat.values, heat.height, heat.width, T, F);
  const auto [lo_it, hi_it] = std::minmax_element(base.begin(), base.end());
  const double lo = *lo_it, hi = *hi_it;
  OverlayImage ov;
  ov.scale = scale;
  ov.luminance.resize(T * F);
  for (std::size_t p = 0; p < T * F; ++p) {
    const double b = hi > lo ? (static_cast<double>(base[p]) - lo) / (hi - lo) : 0.0;
    ov.luminance[p] = std::clamp(0.5 * b + 0.5 * up[p], 0.0, 1.0);
  }

  std::vector<bool> l1_start(F, false), l2_start(F, false);
  if (separators) {
    for (auto j : schema.level1_boundaries()) l1_start[j] = true;
    for (auto j : schema.level2_boundaries()) l2_start[j] = true;
  }
  std::vector<std::size_t> x_of(F);
  std::size_t x = 0;
  for (std::size_t j = 0; j < F; ++j) {
    if (l1_start[j] || l2_start[j]) {
      ov.separators.push_back({x, j, l1_start[j]});
      x += scale;
    }
    x_of[j] = x;
    x += scale;
  }
  const std::size_t W = x, H = T * scale;
  ov.image.height = H;
  ov.image.width = W;
  ov.image.rgb.assign(H * W * 3, 0);

  const auto color = [palette](double v, std::uint8_t* px) {
    if (palette == Palette::Gray) {
      px[0] = px[1] = px[2] = quantize_unit(v);
    } else {
      px[0] = quantize_unit(std::clamp(3.0 * v, 0.0, 1.0));
      px[1] = quantize_unit(std::clamp(3.0 * v - 1.0, 0.0, 1.0));
      px[2] = quantize_unit(std::clamp(3.0 * v - 2.0, 0.0, 1.0));
    }
  };
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < F; ++j) {
      std::uint8_t px[3];
      color(ov.luminance[t * F + j], px);
      for (std::size_t dy = 0; dy < scale; ++dy)
        for (std::size_t dx = 0; dx < scale; ++dx) {
          auto* dst = &ov.image.rgb[((t * scale + dy) * W + x_of[j] + dx) * 3];
          dst[0] = px[0];
          dst[1] = px[1];
          dst[2] = px[2];
        }
    }
  for (const auto& s : ov.separators) {
    const std::uint8_t r = 255, g = s.level1 ? 0 : 255, b = s.level1 ? 0 : 255;
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t dx = 0; dx < scale; ++dx) {
        auto* dst = &ov.image.rgb[(y * W + s.x + dx) * 3];
        dst[0] = r;
        dst[1] = g;
        dst[2] = b;
      }
  }
  for (std::size_t j = 0; j < F; ++j) {
    const auto& e = schema[j];
    if (j == 0 || e.level1 != schema[j - 1].level1 || e.level2 != schema[j - 1].level2)
      ov.groups.push_back({std::string(to_string(e.level1)), e.level2, j, j, x_of[j], x_of[j] + scale});
    ov.groups.back().last_feature = j;
    ov.groups.back().x_end = x_of[j] + scale;
  }
  return ov;
}

inline nlohmann::ordered_json overlay_sidecar(const OverlayImage& ov) {
  nlohmann::ordered_json j;
  j["width"] = ov.image.width;
  j["height"] = ov.image.height;
  j["scale"] = ov.scale;
  auto seps = nlohmann::ordered_json::array();
  for (const auto& s : ov.separators)
    seps.push_back({{"x", s.x}, {"width", ov.scale}, {"before_feature", s.feature},
                    {"kind", s.level1 ? "level1" : "level2"}, {"color", s.level1 ? "red" : "white"}});
  j["separators"] = seps;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : ov.groups)
    groups.push_back({{"level1", g.level1},
                      {"level2", g.level2},
                      {"features", {g.first_feature, g.last_feature}},
                      {"pixels", {g.x_begin, g.x_end}}});
  j["groups"] = groups;
  return j;
}

struct FeatureMapGrid {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<std::vector<double>> maps;  // each h x w, max-normalized
  GrayImage grid;                          // tiles with 1-pixel white gutters
};

// Post-ReLU activation maps of convolution layer `conv_index` (1-4: block 1
// holds convs 1-2, block 2 holds convs 3-4).
template <typename T>
FeatureMapGrid layer_activations(const Model<T>& model, std::span<const T> image, std::size_t conv_index) {
  require(conv_index >= 1 && conv_index <= 4,
          "layer_activations: layer " + std::to_string(conv_index) + " is not a convolution layer (1-4)");
  const auto& c = model.config;
  auto cache = model.forward(image, 1, false);
  FeatureMapGrid g;
  const std::vector<T>* src = nullptr;
  switch (conv_index) {
    case 1: src = &cache.conv1; break;
    case 2: src = &cache.conv2; break;
    case 3: src = &cache.conv3; break;
    default: src = &cache.conv4; break;
  }
  g.channels = conv_index <= 2 ? c.block1_channels : c.block2_channels;
  g.height = conv_index <= 2 ? c.input_h : c.pool1_h();
  g.width = conv_index <= 2 ? c.input_w : c.pool1_w();
  const std::size_t hw = g.height * g.width;
  for (std::size_t k = 0; k < g.channels; ++k) {
    std::vector<double> m(hw);
    double mx = 0.0;
    for (std::size_t p = 0; p < hw; ++p) {
      m[p] = static_cast<double>((*src)[k * hw + p]);
      mx = std::max(mx, m[p]);
    }
    if (mx > 0.0)
      for (auto& v : m) v /= mx;
    g.maps.push_back(std::move(m));
  }
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(g.channels))));
  const std::size_t rows = (g.channels + cols - 1) / cols;
  g.grid.width = cols * g.width + (cols - 1);
  g.grid.height = rows * g.height + (rows - 1);
  g.grid.values.assign(g.grid.width * g.grid.height, 1.0);
  for (std::size_t k = 0; k < g.channels; ++k) {
    const std::size_t oy = (k / cols) * (g.height + 1), ox = (k % cols) * (g.width + 1);
    for (std::size_t i = 0; i < g.height; ++i)
      for (std::size_t j = 0; j < g.width; ++j)
        g.grid.values[(oy + i) * g.grid.width + ox + j] = g.maps[k][i * g.width + j];
  }
  return g;
}

}  // namespace fraudcnn
