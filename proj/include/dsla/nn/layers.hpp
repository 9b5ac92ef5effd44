// Copyright 2026 The DSLA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DSLA_NN_LAYERS_HPP_
#define DSLA_NN_LAYERS_HPP_

// Minimal single-sample CNN building blocks with hand-written backward
// passes. Activations are (C, H, W) tensors; every backward takes the saved
// forward quantities explicitly so forward passes stay const and reentrant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsla/random.hpp"
#include "dsla/tensor.hpp"

namespace dsla::nn {

/// Named trainable array with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// 2-D convolution, "same" padding scaled by dilation, optional stride.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_c, int out_c, int kernel, int stride = 1,
         int dilation = 1)
      : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride),
        dilation_(dilation), pad_(dilation * (kernel - 1) / 2) {
    const std::size_t rows = static_cast<std::size_t>(in_c) * kernel * kernel;
    weight_ = {name + ".weight", {out_c, in_c, kernel, kernel},
               std::vector<T>(rows * out_c), std::vector<T>(rows * out_c)};
    bias_ = {name + ".bias", {out_c}, std::vector<T>(out_c), std::vector<T>(out_c)};
  }

  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }
  int dilation() const { return dilation_; }
  int out_size(int in) const {
    return (in + 2 * pad_ - dilation_ * (k_ - 1) - 1) / stride_ + 1;
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  const Param<T>& weight() const { return weight_; }
  const Param<T>& bias() const { return bias_; }

  /// He (fan-in) initialization; biases start at zero.
  void init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / (double(in_c_) * k_ * k_));
    for (auto& w : weight_.value) w = static_cast<T>(rng.normal(0.0, std));
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.channels() != in_c_)
      throw ContractError(weight_.name + ": expected " + std::to_string(in_c_) +
                          " channels, got " + std::to_string(x.channels()));
    const int oh = out_size(x.height()), ow = out_size(x.width());
    const std::size_t P = static_cast<std::size_t>(oh) * ow;
    const std::size_t R = static_cast<std::size_t>(in_c_) * k_ * k_;
    Tensor<T> y(out_c_, oh, ow);
    std::vector<T> col = im2col(x, oh, ow);
    const T* W = weight_.value.data();
    for (int oc = 0; oc < out_c_; ++oc) {
      T* yr = y.data() + oc * P;
      std::fill(yr, yr + P, bias_.value[oc]);
      const T* wr = W + oc * R;
      for (std::size_t r = 0; r < R; ++r) {
        const T w = wr[r];
        const T* cr = col.data() + r * P;
        for (std::size_t p = 0; p < P; ++p) yr[p] += w * cr[p];
      }
    }
    return y;
  }

  /// Accumulates parameter gradients; returns dL/dx unless `need_input_grad`
  /// is false (then an empty tensor).
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& gy,
                     bool need_input_grad = true) {
    const int oh = gy.height(), ow = gy.width();
    const std::size_t P = static_cast<std::size_t>(oh) * ow;
    const std::size_t R = static_cast<std::size_t>(in_c_) * k_ * k_;
    std::vector<T> col = im2col(x, oh, ow);
    T* GW = weight_.grad.data();
    for (int oc = 0; oc < out_c_; ++oc) {
      const T* g = gy.data() + oc * P;
      T bsum = 0;
      for (std::size_t p = 0; p < P; ++p) bsum += g[p];
      bias_.grad[oc] += bsum;
      T* gw = GW + oc * R;
      for (std::size_t r = 0; r < R; ++r) {
        const T* cr = col.data() + r * P;
        T s = 0;
        for (std::size_t p = 0; p < P; ++p) s += g[p] * cr[p];
        gw[r] += s;
      }
    }
    if (!need_input_grad) return {};
    std::fill(col.begin(), col.end(), T(0));
    const T* W = weight_.value.data();
    for (int oc = 0; oc < out_c_; ++oc) {
      const T* g = gy.data() + oc * P;
      const T* wr = W + oc * R;
      for (std::size_t r = 0; r < R; ++r) {
        const T w = wr[r];
        T* cr = col.data() + r * P;
        for (std::size_t p = 0; p < P; ++p) cr[p] += w * g[p];
      }
    }
    return col2im(col, x.channels(), x.height(), x.width(), oh, ow);
  }

 private:
  std::vector<T> im2col(const Tensor<T>& x, int oh, int ow) const {
    const int H = x.height(), W = x.width();
    const std::size_t P = static_cast<std::size_t>(oh) * ow;
    std::vector<T> col(static_cast<std::size_t>(in_c_) * k_ * k_ * P, T(0));
    for (int c = 0; c < in_c_; ++c)
      for (int ki = 0; ki < k_; ++ki)
        for (int kj = 0; kj < k_; ++kj) {
          T* dst = col.data() + ((static_cast<std::size_t>(c) * k_ + ki) * k_ + kj) * P;
          for (int oi = 0; oi < oh; ++oi) {
            const int ii = oi * stride_ - pad_ + ki * dilation_;
            if (ii < 0 || ii >= H) continue;
            const T* src = x.data() + (static_cast<std::size_t>(c) * H + ii) * W;
            T* drow = dst + static_cast<std::size_t>(oi) * ow;
            for (int oj = 0; oj < ow; ++oj) {
              const int jj = oj * stride_ - pad_ + kj * dilation_;
              if (jj >= 0 && jj < W) drow[oj] = src[jj];
            }
          }
        }
    return col;
  }

  Tensor<T> col2im(const std::vector<T>& col, int C, int H, int W, int oh,
                   int ow) const {
    Tensor<T> gx(C, H, W);
    const std::size_t P = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < C; ++c)
      for (int ki = 0; ki < k_; ++ki)
        for (int kj = 0; kj < k_; ++kj) {
          const T* src = col.data() + ((static_cast<std::size_t>(c) * k_ + ki) * k_ + kj) * P;
          for (int oi = 0; oi < oh; ++oi) {
            const int ii = oi * stride_ - pad_ + ki * dilation_;
            if (ii < 0 || ii >= H) continue;
            T* drow = gx.data() + (static_cast<std::size_t>(c) * H + ii) * W;
            const T* srow = src + static_cast<std::size_t>(oi) * ow;
            for (int oj = 0; oj < ow; ++oj) {
              const int jj = oj * stride_ - pad_ + kj * dilation_;
              if (jj >= 0 && jj < W) drow[jj] += srow[oj];
            }
          }
        }
    return gx;
  }

  int in_c_ = 0, out_c_ = 0, k_ = 1, stride_ = 1, dilation_ = 1, pad_ = 0;
  Param<T> weight_, bias_;
};

inline constexpr double kLeakySlope = 0.01;

template <typename T>
void leaky_relu_inplace(Tensor<T>& x) {
  for (auto& v : x.flat())
    if (v < T(0)) v *= static_cast<T>(kLeakySlope);
}

/// Backward through leaky ReLU given its output (sign is preserved).
template <typename T>
void leaky_relu_backward(const Tensor<T>& y, Tensor<T>& g) {
  auto yv = y.flat();
  auto gv = g.flat();
  for (std::size_t k = 0; k < gv.size(); ++k)
    if (yv[k] < T(0)) gv[k] *= static_cast<T>(kLeakySlope);
}

template <typename T>
void sigmoid_inplace(Tensor<T>& x) {
  for (auto& v : x.flat()) v = T(1) / (T(1) + std::exp(-v));
}

template <typename T>
void sigmoid_backward(const Tensor<T>& y, Tensor<T>& g) {
  auto yv = y.flat();
  auto gv = g.flat();
  for (std::size_t k = 0; k < gv.size(); ++k) gv[k] *= yv[k] * (T(1) - yv[k]);
}

/// 2x2 max pooling; `argmax` receives the flat input index of each output.
template <typename T>
Tensor<T> max_pool2(const Tensor<T>& x, std::vector<std::uint32_t>* argmax) {
  const int C = x.channels(), oh = x.height() / 2, ow = x.width() / 2;
  Tensor<T> y(C, oh, ow);
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t o = 0;
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j, ++o) {
        std::size_t best = (static_cast<std::size_t>(c) * x.height() + 2 * i) * x.width() + 2 * j;
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj) {
            const std::size_t idx =
                (static_cast<std::size_t>(c) * x.height() + 2 * i + di) * x.width() + 2 * j + dj;
            if (x.data()[idx] > x.data()[best]) best = idx;
          }
        y.data()[o] = x.data()[best];
        if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
  return y;
}

template <typename T>
Tensor<T> max_pool2_backward(const Tensor<T>& gy,
                             const std::vector<std::uint32_t>& argmax, int C,
                             int H, int W) {
  Tensor<T> gx(C, H, W);
  for (std::size_t o = 0; o < gy.size(); ++o) gx.data()[argmax[o]] += gy.data()[o];
  return gx;
}

template <typename T>
Tensor<T> upsample_nearest2(const Tensor<T>& x) {
  Tensor<T> y(x.channels(), 2 * x.height(), 2 * x.width());
  for (int c = 0; c < x.channels(); ++c)
    for (int i = 0; i < y.height(); ++i)
      for (int j = 0; j < y.width(); ++j) y(c, i, j) = x(c, i / 2, j / 2);
  return y;
}

template <typename T>
Tensor<T> upsample_nearest2_backward(const Tensor<T>& gy) {
  Tensor<T> gx(gy.channels(), gy.height() / 2, gy.width() / 2);
  for (int c = 0; c < gy.channels(); ++c)
    for (int i = 0; i < gy.height(); ++i)
      for (int j = 0; j < gy.width(); ++j) gx(c, i / 2, j / 2) += gy(c, i, j);
  return gx;
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts) {
  int C = 0;
  for (const auto* p : parts) C += p->channels();
  Tensor<T> y(C, parts.front()->height(), parts.front()->width());
  T* dst = y.data();
  for (const auto* p : parts) {
    if (p->height() != y.height() || p->width() != y.width())
      throw ContractError("concat_channels: spatial mismatch");
    dst = std::copy(p->data(), p->data() + p->size(), dst);
  }
  return y;
}

/// Channel range [c0, c0 + n) of x as a new tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int n) {
  Tensor<T> y(n, x.height(), x.width());
  std::copy(x.data() + c0 * x.plane(), x.data() + (c0 + n) * x.plane(), y.data());
  return y;
}

/// Spatial (channel-wise) inverted dropout. Returns the per-channel keep
/// scale (0 or 1/(1-p)) so backward can reapply it.
template <typename T>
std::vector<T> dropout2d_inplace(Tensor<T>& x, double p, Rng& rng) {
  std::vector<T> scale(x.channels(), T(1));
  if (p <= 0.0) return scale;
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (int c = 0; c < x.channels(); ++c) {
    scale[c] = rng.bernoulli(p) ? T(0) : keep;
    for (auto& v : x.channel(c)) v *= scale[c];
  }
  return scale;
}

template <typename T>
void dropout2d_backward(const std::vector<T>& scale, Tensor<T>& g) {
  for (int c = 0; c < g.channels(); ++c)
    for (auto& v : g.channel(c)) v *= scale[c];
}

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw ContractError("add_inplace: shape mismatch");
  auto av = a.flat();
  auto bv = b.flat();
  for (std::size_t k = 0; k < av.size(); ++k) av[k] += bv[k];
}

}  // namespace dsla::nn

#endif  // DSLA_NN_LAYERS_HPP_
