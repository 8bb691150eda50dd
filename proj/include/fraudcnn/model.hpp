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
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "fraudcnn/error.hpp"
#include "fraudcnn/features.hpp"
#include "fraudcnn/rng.hpp"
#include "fraudcnn/tensor.hpp"

namespace fraudcnn {

// Two blocks of [conv3x3, ReLU, conv3x3, ReLU, maxpool 2x2, dropout], then
// flatten, dense(hidden), ReLU, dropout, dense(1), sigmoid. Convolutions use
// zero padding 1 and stride 1 so they keep the spatial size.
struct ModelConfig {
  Mode mode = Mode::ExAnte;
  std::size_t input_h = 12;
  std::size_t input_w = 283;
  std::size_t block1_channels = 32;
  std::size_t block2_channels = 64;
  std::size_t dense_hidden = 128;
  double conv_dropout = 0.25;
  double dense_dropout = 0.5;
  std::uint64_t seed = 42;  // weight initialization

  std::size_t pool1_h() const { return input_h / 2; }
  std::size_t pool1_w() const { return input_w / 2; }
  std::size_t pool2_h() const { return pool1_h() / 2; }
  std::size_t pool2_w() const { return pool1_w() / 2; }
  std::size_t flat_size() const { return pool2_h() * pool2_w() * block2_channels; }

  void validate() const {
    require(input_h >= 4 && input_w >= 4, "model: input " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                                               " is too small for two 2x2 poolings");
    require(block1_channels >= 1 && block2_channels >= 1 && dense_hidden >= 1, "model: layer widths must be >= 1");
    require(conv_dropout >= 0.0 && conv_dropout < 1.0 && dense_dropout >= 0.0 && dense_dropout < 1.0,
            "model: dropout rates must be in [0, 1)");
  }

  nlohmann::ordered_json to_json() const {
    return {{"mode", to_string(mode)},
            {"input_h", input_h},
            {"input_w", input_w},
            {"block1_channels", block1_channels},
            {"block2_channels", block2_channels},
            {"dense_hidden", dense_hidden},
            {"conv_dropout", conv_dropout},
            {"dense_dropout", dense_dropout},
            {"seed", seed}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.input_h = j.at("input_h").get<std::size_t>();
    c.input_w = j.at("input_w").get<std::size_t>();
    c.block1_channels = j.at("block1_channels").get<std::size_t>();
    c.block2_channels = j.at("block2_channels").get<std::size_t>();
    c.dense_hidden = j.at("dense_hidden").get<std::size_t>();
    c.conv_dropout = j.at("conv_dropout").get<double>();
    c.dense_dropout = j.at("dense_dropout").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  }
};

enum ParamId : std::size_t {
  kConv1W, kConv1B, kConv2W, kConv2B, kConv3W, kConv3B, kConv4W, kConv4B,
  kDense1W, kDense1B, kDense2W, kDense2B, kParamCount
};

inline constexpr std::array<const char*, kParamCount> kParamNames{
    "conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "conv3.weight",  "conv3.bias",
    "conv4.weight", "conv4.bias", "dense1.weight", "dense1.bias", "dense2.weight", "dense2.bias"};

template <typename T>
using ParamSet = std::array<Tensor<T>, kParamCount>;

template <typename T>
struct AdamState {
  ParamSet<T> m;
  ParamSet<T> v;
  std::uint64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Activations kept by forward() for backward() and for explanations. All
// buffers are batch-major, channels-first.
template <typename T>
struct ForwardCache {
  std::size_t batch = 0;
  bool training = false;
  std::vector<T> input;               // B x 1 x H x W
  std::vector<T> conv1, conv2;        // post-ReLU, B x C1 x H x W
  std::vector<T> pool1;               // B x C1 x H1 x W1
  std::vector<std::int32_t> pool1_arg;
  std::vector<T> drop1_mask, drop1;   // training only; drop1 aliases pool1 at inference
  std::vector<T> conv3, conv4;        // post-ReLU, B x C2 x H1 x W1
  std::vector<T> pool2;               // B x C2 x H2 x W2
  std::vector<std::int32_t> pool2_arg;
  std::vector<T> drop2_mask, drop2;
  std::vector<T> hidden;              // post-ReLU, B x hidden
  std::vector<T> drop3_mask, drop3;
  std::vector<T> logits, probs;       // B

  const std::vector<T>& block1_out() const { return training ? drop1 : pool1; }
  const std::vector<T>& flat() const { return training ? drop2 : pool2; }
  const std::vector<T>& dense_in() const { return training ? drop3 : hidden; }
};

namespace nn {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

// cols has shape (C*9) x (H*W); zero padding 1, stride 1.
template <typename T>
void im2col3x3(const T* in, std::size_t C, std::size_t H, std::size_t W, T* cols) {
  const std::size_t hw = H * W;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) {
        T* dst = cols + ((c * 3 + a) * 3 + b) * hw;
        const T* plane = in + c * hw;
        // Output column j reads input column j + b - 1.
        const std::size_t j0 = b == 0 ? 1 : 0, j1 = b == 2 ? W - 1 : W;
        for (std::size_t i = 0; i < H; ++i) {
          T* row = dst + i * W;
          const long y = static_cast<long>(i + a) - 1;
          if (y < 0 || y >= static_cast<long>(H)) {
            std::fill(row, row + W, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(y) * W + (j0 + b - 1);
          if (j0 > 0) row[0] = T(0);
          if (j1 < W) row[W - 1] = T(0);
          std::copy(src, src + (j1 - j0), row + j0);
        }
      }
}

template <typename T>
void col2im3x3(const T* cols, std::size_t C, std::size_t H, std::size_t W, T* in) {
  const std::size_t hw = H * W;
  std::fill(in, in + C * hw, T(0));
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) {
        const T* src = cols + ((c * 3 + a) * 3 + b) * hw;
        T* plane = in + c * hw;
        const std::size_t j0 = b == 0 ? 1 : 0, j1 = b == 2 ? W - 1 : W;
        for (std::size_t i = 0; i < H; ++i) {
          const long y = static_cast<long>(i + a) - 1;
          if (y < 0 || y >= static_cast<long>(H)) continue;
          T* dst = plane + static_cast<std::size_t>(y) * W + (j0 + b - 1);
          const T* row = src + i * W + j0;
          for (std::size_t j = 0; j < j1 - j0; ++j) dst[j] += row[j];
        }
      }
}

// Same-padded 3x3 convolution followed by ReLU, for a batch.
template <typename T>
void conv_relu_forward(const std::vector<T>& in, std::size_t B, std::size_t Cin, std::size_t H, std::size_t W,
                       const Tensor<T>& weight, const Tensor<T>& bias, std::vector<T>& out) {
  const std::size_t Cout = weight.dim(0), K = Cin * 9, hw = H * W;
  out.resize(B * Cout * hw);
  std::vector<T> cols(K * hw);
  ConstMapMat<T> w(weight.data().data(), static_cast<Eigen::Index>(Cout), static_cast<Eigen::Index>(K));
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias.data().data(), static_cast<Eigen::Index>(Cout));
  for (std::size_t s = 0; s < B; ++s) {
    im2col3x3(in.data() + s * Cin * hw, Cin, H, W, cols.data());
    ConstMapMat<T> c(cols.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(hw));
    MapMat<T> o(out.data() + s * Cout * hw, static_cast<Eigen::Index>(Cout), static_cast<Eigen::Index>(hw));
    o.noalias() = w * c;
    o.colwise() += b;
    o = o.cwiseMax(T(0));
  }
}

// d_out holds dL/d(post-ReLU output) and is turned into dL/d(pre-activation)
// in place. Accumulates weight/bias gradients; writes d_in when non-null.
template <typename T>
void conv_relu_backward(const std::vector<T>& in, const std::vector<T>& out, std::vector<T>& d_out, std::size_t B,
                        std::size_t Cin, std::size_t H, std::size_t W, const Tensor<T>& weight, Tensor<T>& d_weight,
                        Tensor<T>& d_bias, std::vector<T>* d_in) {
  const std::size_t Cout = weight.dim(0), K = Cin * 9, hw = H * W;
  for (std::size_t i = 0; i < d_out.size(); ++i)
    if (!(out[i] > T(0))) d_out[i] = T(0);
  std::vector<T> cols(K * hw), dcols;
  if (d_in) {
    d_in->assign(B * Cin * hw, T(0));
    dcols.resize(K * hw);
  }
  ConstMapMat<T> w(weight.data().data(), static_cast<Eigen::Index>(Cout), static_cast<Eigen::Index>(K));
  MapMat<T> dw(d_weight.data().data(), static_cast<Eigen::Index>(Cout), static_cast<Eigen::Index>(K));
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(d_bias.data().data(), static_cast<Eigen::Index>(Cout));
  for (std::size_t s = 0; s < B; ++s) {
    im2col3x3(in.data() + s * Cin * hw, Cin, H, W, cols.data());
    ConstMapMat<T> c(cols.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(hw));
    ConstMapMat<T> g(d_out.data() + s * Cout * hw, static_cast<Eigen::Index>(Cout), static_cast<Eigen::Index>(hw));
    dw.noalias() += g * c.transpose();
    // fixed-order sum: Eigen's vectorized reduction depends on buffer alignment
    for (std::size_t o = 0; o < Cout; ++o) {
      const T* row = d_out.data() + (s * Cout + o) * hw;
      T acc = T(0);
      for (std::size_t i = 0; i < hw; ++i) acc += row[i];
      db[static_cast<Eigen::Index>(o)] += acc;
    }
    if (d_in) {
      MapMat<T> dc(dcols.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(hw));
      dc.noalias() = w.transpose() * g;
      col2im3x3(dcols.data(), Cin, H, W, d_in->data() + s * Cin * hw);
    }
  }
}

template <typename T>
void pool_forward(const std::vector<T>& in, std::size_t B, std::size_t C, std::size_t H, std::size_t W,
                  std::vector<T>& out, std::vector<std::int32_t>& arg) {
  const std::size_t per_in = C * H * W, per_out = C * (H / 2) * (W / 2);
  out.resize(B * per_out);
  arg.resize(B * per_out);
  for (std::size_t s = 0; s < B; ++s)
    maxpool2x2<T>(std::span<const T>(in).subspan(s * per_in, per_in), C, H, W,
                  std::span<T>(out).subspan(s * per_out, per_out),
                  std::span<std::int32_t>(arg).subspan(s * per_out, per_out));
}

template <typename T>
void pool_backward(const std::vector<T>& d_out, const std::vector<std::int32_t>& arg, std::size_t B,
                   std::size_t per_in, std::vector<T>& d_in) {
  d_in.assign(B * per_in, T(0));
  const std::size_t per_out = d_out.size() / B;
  for (std::size_t s = 0; s < B; ++s)
    for (std::size_t o = 0; o < per_out; ++o)
      d_in[s * per_in + static_cast<std::size_t>(arg[s * per_out + o])] += d_out[s * per_out + o];
}

template <typename T>
void apply_dropout(const std::vector<T>& in, double p, std::uint64_t seed, std::vector<T>& mask, std::vector<T>& out) {
  mask.resize(in.size());
  dropout_mask<T>(std::span<T>(mask), p, seed);
  out.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * mask[i];
}

}  // namespace nn

template <typename T>
class Model {
 public:
  ModelConfig config;
  ParamSet<T> params;
  AdamState<T> adam;

  Model() = default;

  // Weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)) from Rng(config.seed); biases 0.
  explicit Model(const ModelConfig& cfg) : config(cfg) {
    config.validate();
    const std::size_t c1 = cfg.block1_channels, c2 = cfg.block2_channels, hid = cfg.dense_hidden;
    const std::array<std::vector<std::size_t>, kParamCount> shapes{{{c1, 1, 3, 3},
                                                                    {c1},
                                                                    {c1, c1, 3, 3},
                                                                    {c1},
                                                                    {c2, c1, 3, 3},
                                                                    {c2},
                                                                    {c2, c2, 3, 3},
                                                                    {c2},
                                                                    {hid, cfg.flat_size()},
                                                                    {hid},
                                                                    {1, hid},
                                                                    {1}}};
    Rng rng(cfg.seed);
    for (std::size_t p = 0; p < kParamCount; ++p) {
      params[p] = Tensor<T>(shapes[p]);
      if (shapes[p].size() > 1) {
        const double fan_in = static_cast<double>(params[p].size() / shapes[p][0]);
        const double limit = std::sqrt(6.0 / fan_in);
        for (auto& w : params[p].data()) w = static_cast<T>(rng.uniform(-limit, limit));
      }
      adam.m[p] = Tensor<T>(shapes[p]);
      adam.v[p] = Tensor<T>(shapes[p]);
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.size();
    return n;
  }

  // batch: B images of input_h x input_w, contiguous. Dropout masks are drawn
  // from seeds derived from `seed` when training; inference ignores it.
  ForwardCache<T> forward(std::span<const T> batch, std::size_t B, bool training, std::uint64_t seed = 0) const {
    const auto& c = config;
    const std::size_t H = c.input_h, W = c.input_w, H1 = c.pool1_h(), W1 = c.pool1_w();
    require(B > 0 && batch.size() == B * H * W,
            "forward: batch shape mismatch (expected " + std::to_string(B) + " x " + std::to_string(H) + " x " +
                std::to_string(W) + ")");
    ForwardCache<T> k;
    k.batch = B;
    k.training = training;
    k.input.assign(batch.begin(), batch.end());

    nn::conv_relu_forward(k.input, B, 1, H, W, params[kConv1W], params[kConv1B], k.conv1);
    nn::conv_relu_forward(k.conv1, B, c.block1_channels, H, W, params[kConv2W], params[kConv2B], k.conv2);
    nn::pool_forward(k.conv2, B, c.block1_channels, H, W, k.pool1, k.pool1_arg);
    if (training) nn::apply_dropout(k.pool1, c.conv_dropout, derive_seed(seed, 1), k.drop1_mask, k.drop1);

    nn::conv_relu_forward(k.block1_out(), B, c.block1_channels, H1, W1, params[kConv3W], params[kConv3B], k.conv3);
    nn::conv_relu_forward(k.conv3, B, c.block2_channels, H1, W1, params[kConv4W], params[kConv4B], k.conv4);
    nn::pool_forward(k.conv4, B, c.block2_channels, H1, W1, k.pool2, k.pool2_arg);
    if (training) nn::apply_dropout(k.pool2, c.conv_dropout, derive_seed(seed, 2), k.drop2_mask, k.drop2);

    const auto D = static_cast<Eigen::Index>(c.flat_size()), Hd = static_cast<Eigen::Index>(c.dense_hidden);
    const auto Bi = static_cast<Eigen::Index>(B);
    k.hidden.resize(B * c.dense_hidden);
    {
      nn::ConstMapMat<T> x(k.flat().data(), Bi, D);
      nn::ConstMapMat<T> w(params[kDense1W].data().data(), Hd, D);
      Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(params[kDense1B].data().data(), Hd);
      nn::MapMat<T> h(k.hidden.data(), Bi, Hd);
      h.noalias() = x * w.transpose();
      h.rowwise() += b;
      h = h.cwiseMax(T(0));
    }
    if (training) nn::apply_dropout(k.hidden, c.dense_dropout, derive_seed(seed, 3), k.drop3_mask, k.drop3);

    k.logits.resize(B);
    k.probs.resize(B);
    const auto& din = k.dense_in();
    for (std::size_t s = 0; s < B; ++s) {
      T z = params[kDense2B][0];
      for (std::size_t j = 0; j < c.dense_hidden; ++j) z += params[kDense2W][j] * din[s * c.dense_hidden + j];
      k.logits[s] = z;
      k.probs[s] = sigmoid(z);
    }
    return k;
  }

  // Backpropagates dL/dlogit through the cache. Returns parameter gradients;
  // when `d_block2_out` is non-null it also receives dL/d(pool2 output), the
  // map Grad-CAM weights are taken from.
  ParamSet<T> backward_from_logits(const ForwardCache<T>& k, std::span<const T> d_logit,
                                   std::vector<T>* d_block2_out = nullptr, bool param_grads = true) const {
    const auto& c = config;
    const std::size_t B = k.batch;
    require(B > 0 && k.logits.size() == B, "backward: missing forward cache");
    require(d_logit.size() == B, "backward: gradient length mismatch");
    const std::size_t H = c.input_h, W = c.input_w, H1 = c.pool1_h(), W1 = c.pool1_w();
    const std::size_t C1 = c.block1_channels, C2 = c.block2_channels, hid = c.dense_hidden;
    ParamSet<T> g;
    for (std::size_t p = 0; p < kParamCount; ++p) g[p] = Tensor<T>(params[p].shape());

    const auto& din = k.dense_in();
    std::vector<T> d_hidden(B * hid);
    for (std::size_t s = 0; s < B; ++s) {
      g[kDense2B][0] += d_logit[s];
      for (std::size_t j = 0; j < hid; ++j) {
        g[kDense2W][j] += d_logit[s] * din[s * hid + j];
        d_hidden[s * hid + j] = d_logit[s] * params[kDense2W][j];
      }
    }
    for (std::size_t i = 0; i < d_hidden.size(); ++i) {
      if (k.training) d_hidden[i] *= k.drop3_mask[i];
      if (!(k.hidden[i] > T(0))) d_hidden[i] = T(0);
    }

    const auto D = static_cast<Eigen::Index>(c.flat_size()), Hd = static_cast<Eigen::Index>(hid);
    const auto Bi = static_cast<Eigen::Index>(B);
    std::vector<T> d_flat(B * c.flat_size());
    {
      nn::ConstMapMat<T> dz(d_hidden.data(), Bi, Hd);
      nn::ConstMapMat<T> x(k.flat().data(), Bi, D);
      nn::ConstMapMat<T> w(params[kDense1W].data().data(), Hd, D);
      nn::MapMat<T> dw(g[kDense1W].data().data(), Hd, D);
      if (param_grads) {
        dw.noalias() = dz.transpose() * x;
        auto& db = g[kDense1B].data();
        for (std::size_t s = 0; s < B; ++s)
          for (std::size_t j = 0; j < hid; ++j) db[j] += d_hidden[s * hid + j];
      }
      nn::MapMat<T> dx(d_flat.data(), Bi, D);
      dx.noalias() = dz * w;
    }
    if (k.training)
      for (std::size_t i = 0; i < d_flat.size(); ++i) d_flat[i] *= k.drop2_mask[i];
    if (d_block2_out) *d_block2_out = d_flat;
    if (!param_grads) return g;

    std::vector<T> d_conv4, d_conv3, d_block1, d_conv2, d_conv1;
    nn::pool_backward(d_flat, k.pool2_arg, B, C2 * H1 * W1, d_conv4);
    nn::conv_relu_backward(k.conv3, k.conv4, d_conv4, B, C2, H1, W1, params[kConv4W], g[kConv4W], g[kConv4B], &d_conv3);
    nn::conv_relu_backward(k.block1_out(), k.conv3, d_conv3, B, C1, H1, W1, params[kConv3W], g[kConv3W], g[kConv3B],
                           &d_block1);
    if (k.training)
      for (std::size_t i = 0; i < d_block1.size(); ++i) d_block1[i] *= k.drop1_mask[i];
    nn::pool_backward(d_block1, k.pool1_arg, B, C1 * H * W, d_conv2);
    nn::conv_relu_backward(k.conv1, k.conv2, d_conv2, B, C1, H, W, params[kConv2W], g[kConv2W], g[kConv2B], &d_conv1);
    nn::conv_relu_backward(k.input, k.conv1, d_conv1, B, 1, H, W, params[kConv1W], g[kConv1W], g[kConv1B],
                           static_cast<std::vector<T>*>(nullptr));
    return g;
  }

  // Inference-mode logit of one sample given its block-2 output (the pooled
  // C2 x H2 x W2 map). Used to check Grad-CAM gradients numerically.
  T logit_from_block2(std::span<const T> block2) const {
    const auto& c = config;
    require(block2.size() == c.flat_size(), "logit_from_block2: size mismatch");
    T z = params[kDense2B][0];
    for (std::size_t j = 0; j < c.dense_hidden; ++j) {
      T h = params[kDense1B][j];
      const T* w = params[kDense1W].data().data() + j * c.flat_size();
      for (std::size_t i = 0; i < block2.size(); ++i) h += w[i] * block2[i];
      z += params[kDense2W][j] * std::max(h, T(0));
    }
    return z;
  }

  // Gradients of the mean BCE loss: dL/dlogit = (p - y) / B.
  ParamSet<T> backward(const ForwardCache<T>& k, std::span<const int> y) const {
    require(k.batch > 0 && !k.probs.empty(), "backward: missing forward cache");
    require(y.size() == k.batch, "backward: label count does not match the batch");
    std::vector<T> d(k.batch);
    for (std::size_t s = 0; s < k.batch; ++s)
      d[s] = (k.probs[s] - static_cast<T>(y[s])) / static_cast<T>(k.batch);
    return backward_from_logits(k, d);
  }

  // Standard Adam with bias-corrected moments.
  void adam_step(const ParamSet<T>& grads, double lr) {
    for (std::size_t p = 0; p < kParamCount; ++p)
      require(grads[p].shape() == params[p].shape(), std::string("adam: shape mismatch for ") + kParamNames[p]);
    ++adam.step;
    const double t = static_cast<double>(adam.step);
    const double c1 = 1.0 - std::pow(kAdamBeta1, t), c2 = 1.0 - std::pow(kAdamBeta2, t);
    const T b1 = static_cast<T>(kAdamBeta1), b2 = static_cast<T>(kAdamBeta2);
    for (std::size_t p = 0; p < kParamCount; ++p) {
      auto& w = params[p].data();
      auto& m = adam.m[p].data();
      auto& v = adam.v[p].data();
      const auto& g = grads[p].data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const double mhat = static_cast<double>(m[i]) / c1;
        const double vhat = static_cast<double>(v[i]) / c2;
        w[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + kAdamEps));
      }
    }
  }

  // Inference probabilities, evaluated in chunks of `chunk` images.
  std::vector<T> predict(const std::vector<std::vector<float>>& images, std::size_t chunk = 64) const {
    std::vector<T> out;
    out.reserve(images.size());
    const std::size_t px = config.input_h * config.input_w;
    std::vector<T> buf;
    for (std::size_t start = 0; start < images.size(); start += chunk) {
      const std::size_t n = std::min(chunk, images.size() - start);
      buf.resize(n * px);
      for (std::size_t s = 0; s < n; ++s) {
        require(images[start + s].size() == px, "predict: image shape mismatch");
        std::copy(images[start + s].begin(), images[start + s].end(), buf.begin() + static_cast<std::ptrdiff_t>(s * px));
      }
      auto k = forward(buf, n, false);
      out.insert(out.end(), k.probs.begin(), k.probs.end());
    }
    return out;
  }

  template <typename U>
  Model<U> cast() const {
    Model<U> m;
    m.config = config;
    for (std::size_t p = 0; p < kParamCount; ++p) {
      m.params[p] = params[p].template cast<U>();
      m.adam.m[p] = adam.m[p].template cast<U>();
      m.adam.v[p] = adam.v[p].template cast<U>();
    }
    m.adam.step = adam.step;
    return m;
  }
};

inline ModelConfig reference_architecture(Mode mode, std::size_t features, std::size_t years_before_target = 12) {
  ModelConfig c;
  c.mode = mode;
  c.input_h = mode == Mode::ExPost ? years_before_target + 1 : years_before_target;
  c.input_w = features;
  return c;
}

template <typename T = float>
Model<T> build_model(Mode mode, std::size_t features, std::uint64_t seed = 42, std::size_t dense_hidden = 128) {
  require(features >= 4, "build_model: need at least 4 features");
  auto c = reference_architecture(mode, features);
  c.seed = seed;
  c.dense_hidden = dense_hidden;
  return Model<T>(c);
}

}  // namespace fraudcnn
