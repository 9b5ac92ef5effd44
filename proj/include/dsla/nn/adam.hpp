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

#ifndef DSLA_NN_ADAM_HPP_
#define DSLA_NN_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "dsla/nn/layers.hpp"

namespace dsla::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers follow the order of the
/// parameter list passed to step().
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<Param<T>*>& params, double lr) {
    if (m_.empty()) {
      for (const auto* p : params) {
        m_.emplace_back(p->size(), 0.0f);
        v_.emplace_back(p->size(), 0.0f);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    const double step = lr * std::sqrt(c2) / c1;
    const float b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
    const double eps_hat = cfg_.eps * std::sqrt(c2);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& p = *params[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const float g = static_cast<float>(p.grad[i]);
        m[i] = b1 * m[i] + (1.0f - b1) * g;
        v[i] = b2 * v[i] + (1.0f - b2) * g * g;
        p.value[i] -= static_cast<T>(step * m[i] / (std::sqrt(double(v[i])) + eps_hat));
      }
    }
  }

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  std::vector<std::vector<float>>& first_moments() { return m_; }
  std::vector<std::vector<float>>& second_moments() { return v_; }
  const std::vector<std::vector<float>>& first_moments() const { return m_; }
  const std::vector<std::vector<float>>& second_moments() const { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace dsla::nn

#endif  // DSLA_NN_ADAM_HPP_
