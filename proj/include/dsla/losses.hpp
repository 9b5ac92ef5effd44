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

#ifndef DSLA_LOSSES_HPP_
#define DSLA_LOSSES_HPP_

// Training objective: masked soft-lane MSE, mean KL directional loss, and the
// cross-normalized sum where each term is scaled by the detached value of
// the other.

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "dsla/circular_stats.hpp"
#include "dsla/scene_synth.hpp"
#include "dsla/tensor.hpp"

namespace dsla {

struct LossConfig {
  double alpha_sla = 100.0;
  CircularConstants circular;

  void validate() const {
    if (!(alpha_sla > 0.0)) throw ContractError("alpha_sla must be > 0");
    circular.validate();
  }
};

struct LossBreakdown {
  double l_sla = 0.0;
  double l_da = 0.0;
  double sla_scaled = 0.0;  // l_sla * detached(l_da)
  double da_scaled = 0.0;   // l_da * detached(l_sla)
  double l_total = 0.0;

  /// Multipliers applied to dL_sla and dL_da when forming the total gradient.
  double sla_grad_scale() const { return l_da; }
  double da_grad_scale() const { return l_sla; }
  /// Either factor vanished, so the other term receives no gradient.
  bool collapsed() const { return l_sla == 0.0 || l_da == 0.0; }
};

/// Squared error over every cell plus alpha * (n^2 / n_mask) times the
/// squared error over masked cells (masked cells appear in both sums).
/// Writes dL/dy into `grad` when it is non-empty.
template <typename T>
double sla_loss(std::span<const T> y, const Grid<std::uint8_t>& mask,
                const LossConfig& cfg, std::span<T> grad = {}) {
  if (y.size() != mask.size())
    throw ContractError("sla_loss: prediction and mask differ in size");
  std::size_t n_mask = 0;
  for (auto v : mask.flat()) n_mask += v != 0;
  if (n_mask == 0) throw ContractError("sla_loss: empty label mask");
  const double beta = double(mask.size()) / double(n_mask);
  const double masked_w = cfg.alpha_sla * beta;
  double all = 0.0, masked = 0.0;
  const auto m = mask.flat();
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double e = double(y[k]) - (m[k] ? 1.0 : 0.0);
    all += e * e;
    if (m[k]) masked += e * e;
    if (!grad.empty())
      grad[k] = static_cast<T>(2.0 * e * (1.0 + (m[k] ? masked_w : 0.0)));
  }
  return all + masked_w * masked;
}

namespace detail {

// Clamps to the finite range of T.
template <typename T>
T saturate(double v) {
  constexpr double hi = static_cast<double>(std::numeric_limits<T>::max());
  return static_cast<T>(std::clamp(v, -hi, hi));
}

/// D_KL(target || mixture(raw)) where the target is given by its log-density
/// on the quadrature nodes. Optionally returns dKL/d(raw) per component.
inline double kl_target_vs_raw(std::span<const double> target_log,
                               std::span<const RawDirectional> raw,
                               const CircularConstants& consts,
                               const QuadratureGrid& grid,
                               std::span<RawDirectional> grad = {}) {
  const int n = grid.size();
  const std::size_t M = raw.size();
  double wsum = 0.0;
  for (const auto& r : raw) wsum += r.w_tilde;
  struct Comp {
    double w, log_w, mu, b, cmu, smu, log_norm, a_ratio;
    bool clamped;
  };
  std::array<Comp, 16> comps{};
  if (M > comps.size()) throw ContractError("kl_target_vs_raw: M > 16");
  for (std::size_t m = 0; m < M; ++m) {
    const double w = wsum > 0.0 ? raw[m].w_tilde / wsum : 1.0 / double(M);
    const double mu = kTwoPi * raw[m].mu_tilde;
    const double unclamped = consts.b_max * (1.0 - raw[m].sigma_tilde + consts.epsilon);
    const double b = std::min(consts.b_max, unclamped);
    comps[m] = {w, w > 0.0 ? std::log(w) : -INFINITY, mu, b, std::cos(mu),
                std::sin(mu), kLogTwoPi + log_bessel_i0(b),
                grad.empty() ? 0.0 : bessel_ratio(b), unclamped >= consts.b_max};
  }
  const double log_floor = std::log(kDensityFloor);
  std::array<double, 16> dmu{}, db{}, dw{};
  std::array<double, 16> lf{};
  double kl = 0.0;
  for (int k = 0; k < n; ++k) {
    double hi = -INFINITY;
    for (std::size_t m = 0; m < M; ++m) {
      lf[m] = comps[m].b * grid.cos_diff(k, comps[m].cmu, comps[m].smu) -
              comps[m].log_norm;
      hi = std::max(hi, comps[m].log_w + lf[m]);
    }
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) s += std::exp(comps[m].log_w + lf[m] - hi);
    const double lq_raw = hi + std::log(s);
    const double lq = std::max(lq_raw, log_floor);
    const double lp = std::max(target_log[k], log_floor);
    const double p = std::exp(lp);
    kl += p * (lp - lq);
    if (grad.empty() || lq_raw < log_floor) continue;
    for (std::size_t m = 0; m < M; ++m) {
      const double f_over_q = std::exp(lf[m] - lq);  // f_m / q
      const double resp = comps[m].w * f_over_q;
      const double c = grid.cos_diff(k, comps[m].cmu, comps[m].smu);
      const double sn = grid.sin_diff(k, comps[m].cmu, comps[m].smu);
      // d ln q / d param, weighted by the target density.
      dmu[m] += p * resp * comps[m].b * sn;
      db[m] += p * resp * (c - comps[m].a_ratio);
      dw[m] += p * (f_over_q - 1.0);
    }
  }
  const double h = grid.step();
  if (!grad.empty()) {
    for (std::size_t m = 0; m < M; ++m) {
      grad[m].mu_tilde = -h * dmu[m] * kTwoPi;
      grad[m].sigma_tilde = comps[m].clamped ? 0.0 : h * db[m] * consts.b_max;
      grad[m].w_tilde = wsum > 0.0 ? -h * dw[m] / wsum : 0.0;
    }
  }
  return kl * h;
}

inline void single_mode_log_density(double mu_hat, const CircularConstants& c,
                                    double log_i0_bmax, const QuadratureGrid& grid,
                                    std::span<double> out) {
  const double cmu = std::cos(mu_hat), smu = std::sin(mu_hat);
  for (int k = 0; k < grid.size(); ++k)
    out[k] = c.b_max * grid.cos_diff(k, cmu, smu) - kLogTwoPi - log_i0_bmax;
}

}  // namespace detail

/// Mean over masked cells of D_KL(vM(mu_hat, b_max) || predicted mixture),
/// mu_hat = atan2(ny, nx). `out` holds the (1 + 3M)-layer network output;
/// when `grad` is non-null dL/d(out) is accumulated into its directional
/// layers.
template <typename T>
double da_loss(const Tensor<T>& out, const TrajectoryLabel& label,
               const LossConfig& cfg, Tensor<T>* grad = nullptr) {
  const int M = (out.channels() - 1) / 3;
  if (M < 1 || out.channels() != 1 + 3 * M)
    throw ContractError("da_loss: output must have 1 + 3M layers");
  if (out.height() != label.side() || out.width() != label.side())
    throw ContractError("da_loss: output and label differ in size");
  if (grad && !grad->same_shape(out))
    throw ContractError("da_loss: gradient buffer shape mismatch");
  const std::size_t n_mask = label.count();
  if (n_mask == 0) throw ContractError("da_loss: empty label mask");

  const QuadratureGrid grid(cfg.circular.n_quad);
  const double log_i0_bmax = log_bessel_i0(cfg.circular.b_max);
  std::vector<double> target(grid.size());
  std::vector<RawDirectional> raw(M), g(M);
  const double inv_n = 1.0 / double(n_mask);
  double total = 0.0;
  for (int i = 0; i < label.side(); ++i)
    for (int j = 0; j < label.side(); ++j) {
      if (!label.mask(i, j)) continue;
      const double mu_hat = wrap_angle(std::atan2(label.ny(i, j), label.nx(i, j)));
      detail::single_mode_log_density(mu_hat, cfg.circular, log_i0_bmax, grid, target);
      for (int m = 0; m < M; ++m)
        raw[m] = {double(out(1 + 3 * m, i, j)), double(out(2 + 3 * m, i, j)),
                  double(out(3 + 3 * m, i, j))};
      total += detail::kl_target_vs_raw(target, raw, cfg.circular, grid,
                                        grad ? std::span(g) : std::span<RawDirectional>{});
      if (grad)
        for (int m = 0; m < M; ++m) {
          (*grad)(1 + 3 * m, i, j) += detail::saturate<T>(g[m].mu_tilde * inv_n);
          (*grad)(2 + 3 * m, i, j) += detail::saturate<T>(g[m].sigma_tilde * inv_n);
          (*grad)(3 + 3 * m, i, j) += detail::saturate<T>(g[m].w_tilde * inv_n);
        }
    }
  return total * inv_n;
}

/// Cross-normalized combination. Each term carries the other's value as a
/// constant factor, so dTotal = l_da * dL_sla + l_sla * dL_da.
inline LossBreakdown combine_losses(double l_sla, double l_da) {
  if (!(std::isfinite(l_sla) && std::isfinite(l_da) && l_sla >= 0.0 && l_da >= -1e-9))
    throw ContractError("combine_losses: losses must be finite and >= 0");
  LossBreakdown b;
  b.l_sla = l_sla;
  b.l_da = l_da;
  b.sla_scaled = l_sla * l_da;
  b.da_scaled = l_da * l_sla;
  b.l_total = b.sla_scaled + b.da_scaled;
  return b;
}

/// Evaluates both losses on a network output and, when `grad` is non-null,
/// writes the gradient of the combined total w.r.t. the output.
template <typename T>
LossBreakdown compute_losses(const Tensor<T>& out, const TrajectoryLabel& label,
                             const LossConfig& cfg, Tensor<T>* grad = nullptr) {
  const std::size_t P = out.plane();
  std::vector<T> g_sla(grad ? P : 0);
  const double l_sla = sla_loss<T>(out.channel(0), label.mask, cfg, g_sla);
  Tensor<T> g_da;
  if (grad) g_da = Tensor<T>(out.channels(), out.height(), out.width());
  const double l_da = da_loss(out, label, cfg, grad ? &g_da : nullptr);
  LossBreakdown b = combine_losses(l_sla, std::max(l_da, 0.0));
  if (grad) {
    *grad = Tensor<T>(out.channels(), out.height(), out.width());
    const T s_sla = static_cast<T>(b.sla_grad_scale());
    const T s_da = static_cast<T>(b.da_grad_scale());
    auto dst = grad->flat();
    for (std::size_t k = 0; k < P; ++k)
      dst[k] = detail::saturate<T>(double(s_sla) * double(g_sla[k]));
    auto src = g_da.flat();
    for (std::size_t k = P; k < dst.size(); ++k)
      dst[k] = detail::saturate<T>(double(s_da) * double(src[k]));
  }
  return b;
}

}  // namespace dsla

#endif  // DSLA_LOSSES_HPP_
