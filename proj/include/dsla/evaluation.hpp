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

#ifndef DSLA_EVALUATION_HPP_
#define DSLA_EVALUATION_HPP_

// Hyperparameter-independent metrics against all-feasible-lane samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dsla/augmentation.hpp"
#include "dsla/circular_stats.hpp"
#include "dsla/losses.hpp"
#include "dsla/nn/network.hpp"
#include "dsla/scene_synth.hpp"

namespace dsla {

inline constexpr double kEvalClamp = 1e-6;
inline constexpr int kEvalInstancesPerLayout = 10;

/// Mean binary cross-entropy of the min-max normalized prediction against the
/// lane union. A constant prediction is scored unnormalized.
template <typename T>
double eval_sla(std::span<const T> y, const Grid<std::uint8_t>& lanes) {
  if (y.size() != lanes.size())
    throw ContractError("eval_sla: prediction and lanes differ in size");
  if (y.empty()) throw ContractError("eval_sla: empty grid");
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double lo = *lo_it, hi = *hi_it;
  const bool normalize = hi > lo;
  const auto l = lanes.flat();
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    double v = normalize ? (double(y[k]) - lo) / (hi - lo) : double(y[k]);
    v = std::clamp(v, kEvalClamp, 1.0 - kEvalClamp);
    s -= l[k] ? std::log(v) : std::log(1.0 - v);
  }
  return s / double(y.size());
}

/// Mean over mode-bearing cells of D_KL(equal-weight b_max target || output).
template <typename T>
double eval_da(const Tensor<T>& out, const EvaluationSample& ev,
               const CircularConstants& consts = {}) {
  const int M = (out.channels() - 1) / 3;
  if (M < 1 || out.channels() != 1 + 3 * M)
    throw ContractError("eval_da: output must have 1 + 3M layers");
  const int n = ev.side();
  if (out.height() != n || out.width() != n)
    throw ContractError("eval_da: output and sample differ in size");
  const QuadratureGrid grid(consts.n_quad);
  std::vector<double> target(grid.size());
  std::vector<RawDirectional> raw(M);
  double total = 0.0;
  std::size_t cells = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto& modes = ev.modes[static_cast<std::size_t>(i) * n + j];
      if (modes.empty()) continue;
      mixture_log_density(multimodal_target(modes, consts), grid, target);
      nn::directional_at(out, M, i, j, raw);
      total += detail::kl_target_vs_raw(target, raw, consts, grid);
      ++cells;
    }
  if (cells == 0) throw ContractError("eval_da: sample has no mode cells");
  return total / double(cells);
}

struct LayoutMetrics {
  std::string layout;
  std::string kind;
  double l_eval_sla = 0.0;
  double l_eval_da = 0.0;
  int instances = 0;
};

struct EvalReport {
  std::string split;
  std::vector<LayoutMetrics> layouts;
  double l_eval_sla = 0.0;  // mean over layouts
  double l_eval_da = 0.0;
  std::string fingerprint;
};

/// Ten (by default) augmented instances of each layout with fixed seeds.
inline std::vector<EvaluationSample> build_eval_set(
    const std::vector<LayoutSpec>& specs, int context_side,
    int instances = kEvalInstancesPerLayout, std::uint64_t seed = 0xe7a1) {
  std::vector<EvaluationSample> out;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const RoadLayout layout = specs[s].build();
    EvaluationSample base = build_eval_sample(layout, context_side);
    base.layout_name = specs[s].name;
    for (int k = 0; k < instances; ++k) {
      const auto p = sample_warp_params(context_side, derive_seed(seed, {s, std::uint64_t(k)}));
      out.push_back(apply_augmentation(base, p));
    }
  }
  return out;
}

template <typename T>
EvalReport evaluate(const nn::Network<T>& net,
                    const std::vector<EvaluationSample>& samples,
                    const std::string& split, const CircularConstants& consts = {}) {
  if (samples.empty()) throw ContractError("evaluate: empty evaluation set");
  std::map<std::string, LayoutMetrics> acc;
  std::vector<std::string> order;
  for (const auto& ev : samples) {
    const Tensor<T> input = ev.context.as_tensor().template cast<T>();
    const Tensor<T> out = net.forward(input, nn::Mode::kEval);
    auto [it, inserted] = acc.try_emplace(ev.layout_name);
    if (inserted) {
      order.push_back(ev.layout_name);
      it->second.layout = ev.layout_name;
      it->second.kind = to_string(ev.kind);
    }
    it->second.l_eval_sla += eval_sla<T>(out.channel(0), ev.lanes);
    it->second.l_eval_da += eval_da(out, ev, consts);
    it->second.instances += 1;
  }
  EvalReport r;
  r.split = split;
  for (const auto& name : order) {
    LayoutMetrics m = acc[name];
    m.l_eval_sla /= m.instances;
    m.l_eval_da /= m.instances;
    r.l_eval_sla += m.l_eval_sla;
    r.l_eval_da += m.l_eval_da;
    r.layouts.push_back(m);
  }
  r.l_eval_sla /= double(r.layouts.size());
  r.l_eval_da /= double(r.layouts.size());
  return r;
}

}  // namespace dsla

#endif  // DSLA_EVALUATION_HPP_
