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

#ifndef DSLA_AUGMENTATION_HPP_
#define DSLA_AUGMENTATION_HPP_

// Online augmentation: rotation about the grid centre followed by a
// component-wise quadratic warp  i = a0 i'^2 + a1 i' + a2  on each axis, where
// i' is the warped (output) coordinate and i the unwarped one.
//
// Coordinates are continuous with cell (i, j) centred at (i + 0.5, j + 0.5).

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dsla/circular_stats.hpp"
#include "dsla/random.hpp"
#include "dsla/scene_synth.hpp"
#include "dsla/tensor.hpp"

namespace dsla {

struct WarpCoeffs {
  double a0 = 0.0, a1 = 1.0, a2 = 0.0;

  double operator()(double ip) const { return (a0 * ip + a1) * ip + a2; }
  double derivative(double ip) const { return 2.0 * a0 * ip + a1; }
  /// Strictly increasing on [0, i_max].
  bool monotonic(double i_max) const {
    return derivative(0.0) > 0.0 && derivative(i_max) > 0.0;
  }
};

/// Coefficients of the quadratic through (0, 0), (i_max, i_max) and
/// (i0_prime, i0).
inline WarpCoeffs warp_coeffs(double i0_prime, double i0, double i_max) {
  if (!(i_max > 0.0)) throw ContractError("warp_coeffs: i_max must be > 0");
  if (!(i0_prime > 0.0 && i0_prime < i_max))
    throw ContractError("warp_coeffs: singular control point");
  WarpCoeffs c;
  c.a1 = (i0 - i0_prime * i0_prime / i_max) / (i0_prime * (1.0 - i0_prime / i_max));
  c.a0 = (1.0 - c.a1) / i_max;
  c.a2 = 0.0;
  return c;
}

struct WarpParams {
  double i0_prime = 128.0, j0_prime = 128.0;  // control point, warped space
  double i0 = 128.0, j0 = 128.0;              // its image, unwarped space
  double i_max = 256.0;
  double rotation = 0.0;  // radians, counter-clockwise

  static WarpParams identity(double i_max) {
    const double c = 0.5 * i_max;
    return {c, c, c, c, i_max, 0.0};
  }

  /// Same warp expressed on a grid of side i_max * factor.
  WarpParams scaled(double factor) const {
    return {i0_prime * factor, j0_prime * factor, i0 * factor, j0 * factor,
            i_max * factor, rotation};
  }

  WarpCoeffs row_coeffs() const { return warp_coeffs(i0_prime, i0, i_max); }
  WarpCoeffs col_coeffs() const { return warp_coeffs(j0_prime, j0, i_max); }

  double control_radius() const {
    return std::hypot(i0_prime - 0.5 * i_max, j0_prime - 0.5 * i_max);
  }
};

inline constexpr double kWarpRadiusMean = 0.15;
inline constexpr double kWarpRadiusStd = 0.05;
inline constexpr double kWarpRadiusClip = 0.3;

/// Random rotation plus a warp control point drawn from a radial Gaussian
/// around the grid centre. Draws producing a non-monotonic warp are rejected.
inline WarpParams sample_warp_params(double i_max, std::uint64_t seed) {
  if (!(i_max > 0.0)) throw ContractError("sample_warp_params: i_max <= 0");
  Rng rng(derive_seed(seed, {0x3a2bu}));
  const double c = 0.5 * i_max;
  for (;;) {
    const double r = std::clamp(
        rng.normal(kWarpRadiusMean * i_max, kWarpRadiusStd * i_max), 0.0,
        kWarpRadiusClip * i_max);
    const double dir = rng.uniform(0.0, kTwoPi);
    const double rot = rng.uniform(0.0, kTwoPi);
    WarpParams p{c + r * std::sin(dir), c + r * std::cos(dir), c, c, i_max, rot};
    if (p.row_coeffs().monotonic(i_max) && p.col_coeffs().monotonic(i_max))
      return p;
  }
}

namespace detail {

// Output-to-source map for one grid resolution.
class AugmentMap {
 public:
  explicit AugmentMap(const WarpParams& p)
      : rows_(p.row_coeffs()), cols_(p.col_coeffs()), c_(0.5 * p.i_max),
        cos_(std::cos(p.rotation)), sin_(std::sin(p.rotation)) {}

  /// Continuous source coordinates of output cell (i, j).
  void source(int i, int j, double& si, double& sj) const {
    const double ri = rows_(i + 0.5), rj = cols_(j + 0.5);
    // Undo the rotation in (x, y-up) coordinates about the centre.
    const double x = rj - c_, y = c_ - ri;
    const double xs = cos_ * x + sin_ * y;
    const double ys = -sin_ * x + cos_ * y;
    sj = xs + c_;
    si = c_ - ys;
  }

  /// Pushes a source-frame direction into the output frame: rotation, then
  /// the inverse of the warp Jacobian (central differences, one-cell step).
  Vec2 push_direction(int i, int j, Vec2 v) const {
    const Vec2 r{cos_ * v.x - sin_ * v.y, sin_ * v.x + cos_ * v.y};
    const double di = rows_(i + 1.0) - rows_(i + 0.0);
    const double dj = cols_(j + 1.0) - cols_(j + 0.0);
    return Vec2{r.x / dj, r.y / di}.normalized();
  }

 private:
  WarpCoeffs rows_, cols_;
  double c_, cos_, sin_;
};

inline float bilinear(const Grid<float>& g, double si, double sj) {
  const double u = si - 0.5, v = sj - 0.5;
  const int i0 = static_cast<int>(std::floor(u));
  const int j0 = static_cast<int>(std::floor(v));
  const double fu = u - i0, fv = v - j0;
  auto at = [&](int i, int j) -> double {
    return g.in_bounds(i, j) ? g(i, j) : 0.0;
  };
  double s = (1.0 - fu) * (1.0 - fv) * at(i0, j0);
  if (fv > 0.0) s += (1.0 - fu) * fv * at(i0, j0 + 1);
  if (fu > 0.0) s += fu * (1.0 - fv) * at(i0 + 1, j0);
  if (fu > 0.0 && fv > 0.0) s += fu * fv * at(i0 + 1, j0 + 1);
  return static_cast<float>(s);
}

inline bool nearest(int side, double si, double sj, int& i, int& j) {
  i = static_cast<int>(std::floor(si));
  j = static_cast<int>(std::floor(sj));
  return i >= 0 && i < side && j >= 0 && j < side;
}

inline Grid<float> resample_bilinear(const Grid<float>& g, const AugmentMap& m) {
  Grid<float> out(g.height(), g.width(), 0.0f);
  for (int i = 0; i < g.height(); ++i)
    for (int j = 0; j < g.width(); ++j) {
      double si, sj;
      m.source(i, j, si, sj);
      out(i, j) = bilinear(g, si, sj);
    }
  return out;
}

inline RoadContext augment_context(const RoadContext& ctx, const WarpParams& p) {
  const AugmentMap m(p.scaled(ctx.side() / p.i_max));
  return {resample_bilinear(ctx.drivable, m), resample_bilinear(ctx.markings, m)};
}

}  // namespace detail

/// Rotates then warps context and label together. `params` is expressed at
/// the context resolution; the label uses the same warp scaled to its side.
inline std::pair<RoadContext, TrajectoryLabel> apply_augmentation(
    const RoadContext& context, const TrajectoryLabel& label,
    const WarpParams& params) {
  if (context.side() != static_cast<int>(std::lround(params.i_max)))
    throw ContractError("apply_augmentation: params do not match context side");
  RoadContext ctx = detail::augment_context(context, params);

  const int n = label.side();
  const detail::AugmentMap m(params.scaled(double(n) / params.i_max));
  TrajectoryLabel out{Grid<std::uint8_t>(n, n, 0), Grid<float>(n, n, 0.0f),
                      Grid<float>(n, n, 0.0f)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double si, sj;
      m.source(i, j, si, sj);
      int ni, nj;
      if (!detail::nearest(n, si, sj, ni, nj) || !label.mask(ni, nj)) continue;
      const Vec2 v = m.push_direction(i, j, {label.nx(ni, nj), label.ny(ni, nj)});
      out.mask(i, j) = 1;
      out.nx(i, j) = static_cast<float>(v.x);
      out.ny(i, j) = static_cast<float>(v.y);
    }
  return {std::move(ctx), std::move(out)};
}

/// Same transform applied to an evaluation sample; modes are pushed forward
/// individually and re-merged.
inline EvaluationSample apply_augmentation(const EvaluationSample& ev,
                                           const WarpParams& params) {
  if (ev.context.side() != static_cast<int>(std::lround(params.i_max)))
    throw ContractError("apply_augmentation: params do not match context side");
  EvaluationSample out;
  out.context = detail::augment_context(ev.context, params);
  out.layout_name = ev.layout_name;
  out.kind = ev.kind;
  const int n = ev.side();
  out.lanes = Grid<std::uint8_t>(n, n, 0);
  out.modes.assign(static_cast<std::size_t>(n) * n, {});
  const detail::AugmentMap m(params.scaled(double(n) / params.i_max));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double si, sj;
      m.source(i, j, si, sj);
      int ni, nj;
      if (!detail::nearest(n, si, sj, ni, nj) || !ev.lanes(ni, nj)) continue;
      out.lanes(i, j) = 1;
      const auto& src = ev.modes[static_cast<std::size_t>(ni) * n + nj];
      std::vector<double> modes;
      for (double a : src)
        modes.push_back(m.push_direction(i, j, unit_from_angle(a)).angle());
      out.modes[static_cast<std::size_t>(i) * n + j] = merge_modes(std::move(modes));
    }
  return out;
}

}  // namespace dsla

#endif  // DSLA_AUGMENTATION_HPP_
