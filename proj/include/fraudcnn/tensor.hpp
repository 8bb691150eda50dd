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
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fraudcnn/error.hpp"
#include "fraudcnn/rng.hpp"

namespace fraudcnn {

// Dense row-major tensor. T is float for training and double for gradient
// verification.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  Tensor(std::vector<std::size_t> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(data_.size() == element_count(shape_), "tensor: data length does not match shape");
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  T at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  T& at(std::size_t c, std::size_t i, std::size_t j) { return data_[(c * shape_[1] + i) * shape_[2] + j]; }
  T at(std::size_t c, std::size_t i, std::size_t j) const { return data_[(c * shape_[1] + i) * shape_[2] + j]; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

// Single-channel 2-D cross-correlation (no kernel flip) with zero padding.
template <typename T>
Tensor<T> xcorr2d(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t padding = 0, std::size_t stride = 1) {
  require(input.rank() == 2 && kernel.rank() == 2, "xcorr2d: expects 2-D input and kernel");
  require(stride >= 1, "xcorr2d: stride must be >= 1");
  const auto H = static_cast<long>(input.dim(0)), W = static_cast<long>(input.dim(1));
  const auto kh = static_cast<long>(kernel.dim(0)), kw = static_cast<long>(kernel.dim(1));
  const auto p = static_cast<long>(padding), s = static_cast<long>(stride);
  const long oh_span = H + 2 * p - kh, ow_span = W + 2 * p - kw;
  require(oh_span >= 0 && ow_span >= 0, "xcorr2d: kernel larger than padded input");
  const long oh = oh_span / s + 1, ow = ow_span / s + 1;
  Tensor<T> out({static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  for (long i = 0; i < oh; ++i)
    for (long j = 0; j < ow; ++j) {
      T acc = 0;
      for (long a = 0; a < kh; ++a)
        for (long b = 0; b < kw; ++b) {
          const long y = i * s + a - p, x = j * s + b - p;
          if (y < 0 || y >= H || x < 0 || x >= W) continue;
          acc += input.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) *
                 kernel.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        }
      out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
    }
  return out;
}

// 2x2 / stride-2 max pooling over a C x H x W tensor. Odd trailing rows and
// columns are dropped. `argmax` (optional) receives, per output element, the
// flat index of the winning input element (first maximum in row-major order).
template <typename T>
void maxpool2x2(std::span<const T> in, std::size_t C, std::size_t H, std::size_t W, std::span<T> out,
                std::span<std::int32_t> argmax = {}) {
  const std::size_t oh = H / 2, ow = W / 2;
  for (std::size_t c = 0; c < C; ++c) {
    const T* plane = in.data() + c * H * W;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (2 * i) * W + 2 * j;
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b) {
            const std::size_t k = (2 * i + a) * W + (2 * j + b);
            if (plane[k] > plane[best]) best = k;
          }
        const std::size_t o = (c * oh + i) * ow + j;
        out[o] = plane[best];
        if (!argmax.empty()) argmax[o] = static_cast<std::int32_t>(c * H * W + best);
      }
  }
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, std::size_t window = 2, std::size_t stride = 2) {
  require(window == 2 && stride == 2, "maxpool2d: only 2x2 windows with stride 2 are supported");
  require(input.rank() == 3, "maxpool2d: expects C x H x W");
  const auto C = input.dim(0), H = input.dim(1), W = input.dim(2);
  require(H >= window && W >= window, "maxpool2d: input smaller than the pooling window");
  Tensor<T> out({C, H / 2, W / 2});
  maxpool2x2<T>(input.span(), C, H, W, out.span());
  return out;
}

enum class Activation { ReLU, Sigmoid };

template <typename T>
T sigmoid(T x) {
  // Split by sign so exp never overflows.
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
  Tensor<T> out = x;
  for (auto& v : out.data()) v = kind == Activation::ReLU ? std::max(v, T(0)) : sigmoid(v);
  return out;
}

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  Tensor<T> mask;  // 0 for dropped, 1/(1-p) for kept
};

// Draws one uniform per element in row-major order from Rng(seed).
template <typename T>
void dropout_mask(std::span<T> mask, double p, std::uint64_t seed) {
  require(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  Rng rng(seed);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (auto& m : mask) m = rng.uniform() < p ? T(0) : keep;
}

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& x, double p, bool training, std::uint64_t seed) {
  require(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  DropoutResult<T> r{x, Tensor<T>(x.shape(), T(1))};
  if (!training) return r;
  dropout_mask<T>(r.mask.span(), p, seed);
  for (std::size_t i = 0; i < x.size(); ++i) r.output[i] = x[i] * r.mask[i];
  return r;
}

inline constexpr double kProbClamp = 1e-7;

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
template <typename T>
double bce_loss(std::span<const int> y, std::span<const T> p) {
  require(!y.empty() && y.size() == p.size(), "bce_loss: labels and probabilities must be nonempty and equal length");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::clamp(static_cast<double>(p[i]), kProbClamp, 1.0 - kProbClamp);
    sum += y[i] ? std::log(q) : std::log(1.0 - q);
  }
  return -sum / static_cast<double>(y.size());
}

}  // namespace fraudcnn
