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

#ifndef DSLA_TENSOR_HPP_
#define DSLA_TENSOR_HPP_

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsla {

/// Raised when an operation receives arguments that violate its contract
/// (shape mismatch, out-of-range parameter, degenerate label).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense channel-major (C, H, W) array. Single-sample only; there is no
/// batch dimension anywhere in the library.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(int channels, int height, int width, T fill = T(0))
      : c_(channels), h_(height), w_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {
    if (channels < 0 || height < 0 || width < 0)
      throw ContractError("Tensor: negative extent");
  }

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h_) * w_; }
  bool same_shape(const Tensor& o) const {
    return c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  T& operator()(int c, int i, int j) {
    assert(c >= 0 && c < c_ && i >= 0 && i < h_ && j >= 0 && j < w_);
    return data_[(static_cast<std::size_t>(c) * h_ + i) * w_ + j];
  }
  const T& operator()(int c, int i, int j) const {
    assert(c >= 0 && c < c_ && i >= 0 && i < h_ && j >= 0 && j < w_);
    return data_[(static_cast<std::size_t>(c) * h_ + i) * w_ + j];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  std::span<T> channel(int c) { return {data_.data() + c * plane(), plane()}; }
  std::span<const T> channel(int c) const {
    return {data_.data() + c * plane(), plane()};
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(c_, h_, w_);
    std::transform(data_.begin(), data_.end(), out.data(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  std::string shape_string() const {
    return std::to_string(c_) + "x" + std::to_string(h_) + "x" +
           std::to_string(w_);
  }

 private:
  int c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> data_;
};

/// Single-channel H x W grid, row-major; row index grows downward.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T(0))
      : h_(height), w_(width),
        data_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t size() const { return data_.size(); }
  bool in_bounds(int i, int j) const {
    return i >= 0 && i < h_ && j >= 0 && j < w_;
  }
  bool same_shape(const Grid& o) const { return h_ == o.h_ && w_ == o.w_; }

  T& operator()(int i, int j) {
    assert(in_bounds(i, j));
    return data_[static_cast<std::size_t>(i) * w_ + j];
  }
  const T& operator()(int i, int j) const {
    assert(in_bounds(i, j));
    return data_[static_cast<std::size_t>(i) * w_ + j];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Grid&) const = default;

 private:
  int h_ = 0, w_ = 0;
  std::vector<T> data_;
};

}  // namespace dsla

#endif  // DSLA_TENSOR_HPP_
