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

#ifndef DSLA_CIRCULAR_STATS_HPP_
#define DSLA_CIRCULAR_STATS_HPP_

// Von Mises densities, mixtures and the quadrature KL divergence used by both
// the training loss and the evaluation metric.
//
// Angle convention: radians, 0 along +x, counter-clockwise with y pointing up.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dsla/tensor.hpp"

namespace dsla {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kLogTwoPi = 1.8378770664093453;  // ln(2*pi)
inline constexpr double kDensityFloor = 1e-300;

struct CircularConstants {
  double b_max = 88.0;
  double epsilon = 1e-3;
  int n_quad = 256;

  void validate() const {
    if (!(b_max > 0.0)) throw ContractError("b_max must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw ContractError("epsilon must lie in (0, 1)");
    if (n_quad < 64) throw ContractError("n_quad must be >= 64");
  }
};

struct VonMisesComponent {
  double mu = 0.0;  // [0, 2pi)
  double b = 1.0;   // concentration
  double w = 1.0;   // mixture weight
};

/// Unit-interval network outputs for one mixture component at one cell.
struct RawDirectional {
  double mu_tilde = 0.5;
  double sigma_tilde = 0.5;
  double w_tilde = 0.5;
};

/// Wraps an angle into [0, 2pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Smallest absolute angular difference, in [0, pi].
inline double angular_distance(double a, double b) {
  double d = std::fabs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

namespace detail {

// log of sum_k exp((2k + order) ln(b/2) - ln k! - ln (k+order)!), evaluated
// around its dominant term so nothing overflows for large b.
inline double log_bessel_series(double b, int order) {
  const double log_half_b = std::log(0.5 * b);
  // Terms peak near k = b/2.
  const int k_peak = static_cast<int>(0.5 * b);
  auto log_term = [&](int k) {
    return (2.0 * k + order) * log_half_b - std::lgamma(k + 1.0) -
           std::lgamma(k + order + 1.0);
  };
  const double peak = std::max(log_term(k_peak), log_term(k_peak + 1));
  double sum = 0.0;
  double t = log_term(0);
  for (int k = 0;; ++k) {
    if (k > 0) t += 2.0 * log_half_b - std::log(double(k)) -
                    std::log(double(k + order));
    const double rel = t - peak;
    sum += std::exp(rel);
    if (k > k_peak && rel < -40.0) break;
  }
  return peak + std::log(sum);
}

}  // namespace detail

/// ln I0(b), finite for every b >= 0 (no e^b is ever formed).
inline double log_bessel_i0(double b) {
  if (!(b >= 0.0)) throw ContractError("log_bessel_i0: b must be >= 0");
  if (b == 0.0) return 0.0;
  return detail::log_bessel_series(b, 0);
}

/// ln I1(b) for b > 0.
inline double log_bessel_i1(double b) {
  if (!(b > 0.0)) throw ContractError("log_bessel_i1: b must be > 0");
  return detail::log_bessel_series(b, 1);
}

/// Mean resultant length A(b) = I1(b)/I0(b) = d ln I0 / db.
inline double bessel_ratio(double b) {
  if (b == 0.0) return 0.0;
  return std::exp(log_bessel_i1(b) - log_bessel_i0(b));
}

inline double vm_log_pdf(double theta, const VonMisesComponent& c) {
  return c.b * std::cos(wrap_angle(theta) - c.mu) - kLogTwoPi - log_bessel_i0(c.b);
}

inline double vm_pdf(double theta, const VonMisesComponent& c) {
  return std::exp(vm_log_pdf(theta, c));
}

class Mixture {
 public:
  Mixture() = default;
  explicit Mixture(std::vector<VonMisesComponent> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw ContractError("Mixture: M must be >= 1");
  }

  std::span<const VonMisesComponent> components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  const VonMisesComponent& operator[](std::size_t m) const {
    return components_[m];
  }

  double weight_sum() const {
    double s = 0.0;
    for (const auto& c : components_) s += c.w;
    return s;
  }

  /// Throws if weights do not sum to one within `tol`.
  void check_weights(double tol = 1e-4) const {
    if (components_.empty()) throw ContractError("Mixture: empty");
    if (std::fabs(weight_sum() - 1.0) > tol)
      throw ContractError("Mixture: weights sum to " +
                          std::to_string(weight_sum()));
  }

 private:
  std::vector<VonMisesComponent> components_;
};

/// Uniform quadrature nodes theta_k = 2 pi k / n with cached cos/sin. On a
/// periodic integrand the n-node rectangle rule equals the closed trapezoid.
class QuadratureGrid {
 public:
  explicit QuadratureGrid(int n = 256) : n_(n), cos_(n), sin_(n) {
    if (n < 1) throw ContractError("QuadratureGrid: n must be >= 1");
    for (int k = 0; k < n; ++k) {
      const double t = kTwoPi * k / n;
      cos_[k] = std::cos(t);
      sin_[k] = std::sin(t);
    }
  }
  int size() const { return n_; }
  double step() const { return kTwoPi / n_; }
  double theta(int k) const { return kTwoPi * k / n_; }
  // cos(theta_k - mu) given cos(mu), sin(mu).
  double cos_diff(int k, double cmu, double smu) const {
    return cos_[k] * cmu + sin_[k] * smu;
  }
  double sin_diff(int k, double cmu, double smu) const {
    return sin_[k] * cmu - cos_[k] * smu;
  }

 private:
  int n_;
  std::vector<double> cos_, sin_;
};

/// Evaluates ln p(theta_k) of a mixture on every quadrature node.
inline void mixture_log_density(const Mixture& mix, const QuadratureGrid& grid,
                                std::span<double> out) {
  const int n = grid.size();
  struct Pre {
    double log_w, b, log_norm, cmu, smu;
  };
  std::vector<Pre> pre;
  pre.reserve(mix.size());
  for (const auto& c : mix.components()) {
    if (c.w <= 0.0) continue;
    pre.push_back({std::log(c.w), c.b, kLogTwoPi + log_bessel_i0(c.b),
                   std::cos(c.mu), std::sin(c.mu)});
  }
  const double log_floor = std::log(kDensityFloor);
  for (int k = 0; k < n; ++k) {
    double hi = -std::numeric_limits<double>::infinity();
    // Two passes over at most a handful of components: max then sum.
    for (const auto& p : pre)
      hi = std::max(hi, p.log_w + p.b * grid.cos_diff(k, p.cmu, p.smu) -
                            p.log_norm);
    double s = 0.0;
    for (const auto& p : pre)
      s += std::exp(p.log_w + p.b * grid.cos_diff(k, p.cmu, p.smu) -
                    p.log_norm - hi);
    out[k] = std::max(hi + std::log(s), log_floor);
  }
}

inline double mixture_pdf(double theta, const Mixture& mix) {
  mix.check_weights();
  double s = 0.0;
  for (const auto& c : mix.components())
    if (c.w > 0.0) s += c.w * vm_pdf(theta, c);
  return s;
}

/// Ideal single-mode target: mean mu_hat at maximal concentration.
inline Mixture target_distribution(double mu_hat,
                                   const CircularConstants& consts = {}) {
  return Mixture({{wrap_angle(mu_hat), consts.b_max, 1.0}});
}

/// Equal-weight multi-mode target, every mode at maximal concentration.
inline Mixture multimodal_target(std::span<const double> modes,
                                 const CircularConstants& consts = {}) {
  if (modes.empty()) throw ContractError("multimodal_target: no modes");
  std::vector<VonMisesComponent> comps;
  const double w = 1.0 / static_cast<double>(modes.size());
  for (double m : modes) comps.push_back({wrap_angle(m), consts.b_max, w});
  return Mixture(std::move(comps));
}

/// D_KL(p || q) by n-node periodic trapezoid quadrature over [0, 2pi).
inline double kl_divergence(const Mixture& p, const Mixture& q,
                            const QuadratureGrid& grid) {
  const int n = grid.size();
  std::vector<double> lp(n), lq(n);
  mixture_log_density(p, grid, lp);
  mixture_log_density(q, grid, lq);
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += std::exp(lp[k]) * (lp[k] - lq[k]);
  return s * grid.step();
}

inline double kl_divergence(const Mixture& p, const Mixture& q,
                            int n_quad = 256) {
  return kl_divergence(p, q, QuadratureGrid(n_quad));
}

/// Concentration from a normalized variance, clamped to (0, b_max].
inline double concentration_from_raw(double sigma_tilde,
                                     const CircularConstants& consts) {
  return std::min(consts.b_max,
                  consts.b_max * (1.0 - sigma_tilde + consts.epsilon));
}

inline Mixture params_from_raw(std::span<const RawDirectional> raw,
                               const CircularConstants& consts = {}) {
  if (raw.empty()) throw ContractError("params_from_raw: no components");
  double wsum = 0.0;
  for (const auto& r : raw) wsum += r.w_tilde;
  const double m = static_cast<double>(raw.size());
  std::vector<VonMisesComponent> comps;
  comps.reserve(raw.size());
  for (const auto& r : raw) {
    const double w = wsum > 0.0 ? r.w_tilde / wsum : 1.0 / m;
    comps.push_back({wrap_angle(kTwoPi * r.mu_tilde),
                     concentration_from_raw(r.sigma_tilde, consts), w});
  }
  return Mixture(std::move(comps));
}

}  // namespace dsla

#endif  // DSLA_CIRCULAR_STATS_HPP_
