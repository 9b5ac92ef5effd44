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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <queue>
#include <random>

#include "dsla/augmentation.hpp"

namespace dsla {
namespace {

constexpr double kPi = std::numbers::pi;

int components8(const Grid<std::uint8_t>& m) {
  Grid<int> seen(m.height(), m.width(), 0);
  int n = 0;
  for (int i = 0; i < m.height(); ++i)
    for (int j = 0; j < m.width(); ++j) {
      if (!m(i, j) || seen(i, j)) continue;
      ++n;
      std::queue<std::pair<int, int>> q;
      q.push({i, j});
      seen(i, j) = 1;
      while (!q.empty()) {
        auto [a, b] = q.front();
        q.pop();
        for (int da = -1; da <= 1; ++da)
          for (int db = -1; db <= 1; ++db)
            if (m.in_bounds(a + da, b + db) && m(a + da, b + db) && !seen(a + da, b + db)) {
              seen(a + da, b + db) = 1;
              q.push({a + da, b + db});
            }
      }
    }
  return n;
}

TEST(WarpCoeffs, CentreIsIdentity) {
  const auto c = warp_coeffs(128, 128, 256);
  EXPECT_EQ(c.a0, 0.0);
  EXPECT_EQ(c.a1, 1.0);
  EXPECT_EQ(c.a2, 0.0);
}

TEST(WarpCoeffs, WorkedExample) {
  const auto c = warp_coeffs(128, 140, 256);
  EXPECT_DOUBLE_EQ(c.a1, 76.0 / 64.0);
  EXPECT_NEAR(c.a0, -0.1875 / 256.0, 1e-15);
  EXPECT_NEAR(c.a0, -7.3242e-4, 1e-8);
  EXPECT_EQ(c.a2, 0.0);
  EXPECT_NEAR(c(0), 0.0, 1e-12);
  EXPECT_NEAR(c(256), 256.0, 1e-12);
  EXPECT_NEAR(c(128), 140.0, 1e-12);
}

TEST(WarpCoeffs, BoundaryConditionsOverRandomParams) {
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const double imax = rng.uniform(16, 512);
    const double ip = rng.uniform(0.05, 0.95) * imax;
    const double i0 = rng.uniform(0.05, 0.95) * imax;
    const auto c = warp_coeffs(ip, i0, imax);
    ASSERT_NEAR(c(0.0), 0.0, 1e-9);
    ASSERT_NEAR(c(imax), imax, 1e-9);
    ASSERT_NEAR(c(ip), i0, 1e-9);
  }
}

TEST(WarpCoeffs, SingularControlPoint) {
  EXPECT_THROW(warp_coeffs(0, 128, 256), ContractError);
  EXPECT_THROW(warp_coeffs(256, 128, 256), ContractError);
}

// Independent Monte Carlo of the control-point radius: radial Gaussian
// (mean 0.15, std 0.05, clip 0.3 of the side) with and without rejection of
// non-monotone per-axis warps (slope at either end <= 0).
struct RadiusOracle {
  double proposal_mean = 0.0;
  double accepted_mean = 0.0;
};

RadiusOracle radius_oracle(double imax, int n) {
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> radius(0.15 * imax, 0.05 * imax);
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
  auto monotone = [imax](double ip) {
    const double c = imax / 2;
    const double a1 = (c - ip * ip / imax) / (ip * (1 - ip / imax));
    return a1 > 0 && 2 - a1 > 0;
  };
  double all = 0.0, acc = 0.0;
  int n_acc = 0;
  for (int k = 0; k < n; ++k) {
    const double r = std::clamp(radius(gen), 0.0, 0.3 * imax);
    const double d = angle(gen);
    all += r;
    if (monotone(imax / 2 + r * std::sin(d)) && monotone(imax / 2 + r * std::cos(d))) {
      acc += r;
      ++n_acc;
    }
  }
  return {all / n, acc / n_acc};
}

TEST(SampleWarpParams, RadiusStatistics) {
  const RadiusOracle oracle = radius_oracle(256, 200000);
  EXPECT_NEAR(oracle.proposal_mean, 38.4, 1.5);
  double sum = 0.0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const auto p = sample_warp_params(256, s);
    const double r = p.control_radius();
    ASSERT_LE(r, 76.8 + 1e-9);
    sum += r;
    EXPECT_EQ(p.i0, 128.0);
    EXPECT_EQ(p.j0, 128.0);
    EXPECT_GE(p.rotation, 0.0);
    EXPECT_LT(p.rotation, kTwoPi);
    EXPECT_TRUE(p.row_coeffs().monotonic(256) && p.col_coeffs().monotonic(256));
  }
  EXPECT_NEAR(sum / n, oracle.accepted_mean, 0.5);
}

TEST(SampleWarpParams, Deterministic) {
  const auto a = sample_warp_params(256, 77), b = sample_warp_params(256, 77);
  EXPECT_EQ(a.i0_prime, b.i0_prime);
  EXPECT_EQ(a.j0_prime, b.j0_prime);
  EXPECT_EQ(a.rotation, b.rotation);
}

struct Fixture {
  RoadLayout layout = generate_layout(LayoutKind::kTIntersection);
  RoadContext ctx;
  TrajectoryLabel label;
  Fixture() {
    auto s = rasterize_sample(layout, sample_trajectory(layout, 4).path, 256);
    ctx = std::move(s.first);
    label = std::move(s.second);
  }
};

TEST(ApplyAugmentation, IdentityLeavesSampleUnchanged) {
  Fixture f;
  const auto [ctx, lab] = apply_augmentation(f.ctx, f.label, WarpParams::identity(256));
  EXPECT_TRUE(ctx.drivable == f.ctx.drivable);
  EXPECT_TRUE(ctx.markings == f.ctx.markings);
  EXPECT_TRUE(lab.mask == f.label.mask);
  for (std::size_t k = 0; k < lab.mask.size(); ++k)
    if (lab.mask.flat()[k]) {
      EXPECT_NEAR(lab.nx.flat()[k], f.label.nx.flat()[k], 1e-6);
      EXPECT_NEAR(lab.ny.flat()[k], f.label.ny.flat()[k], 1e-6);
    }
}

TEST(ApplyAugmentation, QuarterTurnRotatesMaskAndDirections) {
  const RoadLayout L = generate_layout(LayoutKind::kStraight);
  const auto [ctx0, lab0] =
      rasterize_sample(L, Polyline{{{-20.0, 123.0}, {276.0, 123.0}}}, 256);
  WarpParams p = WarpParams::identity(256);
  p.rotation = kPi / 2;
  const auto [ctx, lab] = apply_augmentation(ctx0, lab0, p);
  const int n = 128;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ASSERT_EQ(lab.mask(i, j), lab0.mask(j, n - 1 - i)) << i << "," << j;
      if (lab.mask(i, j)) {
        EXPECT_NEAR(lab.nx(i, j), 0.0f, 1e-6);
        EXPECT_NEAR(lab.ny(i, j), 1.0f, 1e-6);
      }
    }
  for (int i = 0; i < 256; ++i)
    for (int j = 0; j < 256; ++j)
      ASSERT_NEAR(ctx.drivable(i, j), ctx0.drivable(j, 255 - i), 1e-5);
}

TEST(ApplyAugmentation, DirectionsStayUnit) {
  Fixture f;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto [ctx, lab] = apply_augmentation(f.ctx, f.label, sample_warp_params(256, s));
    for (std::size_t k = 0; k < lab.mask.size(); ++k)
      if (lab.mask.flat()[k])
        ASSERT_NEAR(std::hypot(double(lab.nx.flat()[k]), double(lab.ny.flat()[k])), 1.0, 1e-6);
  }
}

TEST(ApplyAugmentation, PureWarpMatchesJacobianPushforward) {
  // A horizontal line under a column-only warp keeps its direction; under a
  // row-only warp it also stays horizontal because dy = 0.
  const RoadLayout L = generate_layout(LayoutKind::kStraight);
  const auto [ctx0, lab0] = rasterize_sample(L, Polyline{{{-20.0, 123.0}, {276.0, 123.0}}}, 256);
  WarpParams p = WarpParams::identity(256);
  p.j0_prime = 100.0;
  p.i0_prime = 150.0;
  const auto [ctx, lab] = apply_augmentation(ctx0, lab0, p);
  ASSERT_GT(lab.count(), 0u);
  for (std::size_t k = 0; k < lab.mask.size(); ++k)
    if (lab.mask.flat()[k]) {
      EXPECT_NEAR(lab.nx.flat()[k], 1.0f, 1e-6);
      EXPECT_NEAR(lab.ny.flat()[k], 0.0f, 1e-6);
    }
}

TEST(ApplyAugmentation, DiagonalDirectionFollowsLocalStretch) {
  // With rotation 0 the pushed direction is (vx / f_col', vy / f_row').
  WarpParams p = WarpParams::identity(64);
  p.i0_prime = 40.0;
  p.j0_prime = 24.0;
  const detail::AugmentMap m(p);
  const Vec2 v = Vec2{1.0, 1.0}.normalized();
  const auto rows = p.row_coeffs(), cols = p.col_coeffs();
  for (int i : {3, 30, 60})
    for (int j : {5, 31, 58}) {
      const double fi = rows(i + 1.0) - rows(double(i)), fj = cols(j + 1.0) - cols(double(j));
      const Vec2 expect = Vec2{v.x / fj, v.y / fi}.normalized();
      const Vec2 got = m.push_direction(i, j, v);
      EXPECT_NEAR(got.x, expect.x, 1e-12);
      EXPECT_NEAR(got.y, expect.y, 1e-12);
    }
}

TEST(ApplyAugmentation, PreservesStrokeConnectivity) {
  const RoadLayout L = generate_layout(LayoutKind::kStraight);
  const RoadContext base = rasterize_context(L, 256);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto lab0 = rasterize_label(L, sample_trajectory(L, s).path, 128);
    ASSERT_EQ(components8(lab0.mask), 1);
    const auto [ctx, lab] = apply_augmentation(base, lab0, sample_warp_params(256, 1000 + s));
    EXPECT_EQ(components8(lab.mask), 1) << "sample " << s;
  }
}

TEST(ApplyAugmentation, Deterministic) {
  Fixture f;
  const auto p = sample_warp_params(256, 5);
  const auto a = apply_augmentation(f.ctx, f.label, p);
  const auto b = apply_augmentation(f.ctx, f.label, p);
  EXPECT_TRUE(a.first.drivable == b.first.drivable);
  EXPECT_TRUE(a.second.mask == b.second.mask);
  EXPECT_TRUE(a.second.nx == b.second.nx);
}

TEST(ApplyAugmentation, OutOfBoundsFillsWithZero) {
  Fixture f;
  RoadContext ones{Grid<float>(256, 256, 1.0f), Grid<float>(256, 256, 1.0f)};
  WarpParams p = WarpParams::identity(256);
  p.rotation = kPi / 4;
  const auto [ctx, lab] = apply_augmentation(ones, f.label, p);
  EXPECT_EQ(ctx.drivable(0, 0), 0.0f);
  EXPECT_EQ(ctx.drivable(128, 128), 1.0f);
}

TEST(ApplyAugmentation, MismatchedParamsRejected) {
  Fixture f;
  EXPECT_THROW(apply_augmentation(f.ctx, f.label, WarpParams::identity(64)), ContractError);
}

TEST(ApplyAugmentation, EvalSampleModesFollowRotation) {
  const auto ev = build_eval_sample(generate_layout(LayoutKind::kStraight), 64);
  WarpParams p = WarpParams::identity(64);
  p.rotation = kPi / 2;
  const auto out = apply_augmentation(ev, p);
  EXPECT_EQ(out.mode_cells(), ev.mode_cells());
  for (const auto& m : out.modes)
    for (double a : m)
      EXPECT_TRUE(angular_distance(a, kPi / 2) < 1e-6 || angular_distance(a, 3 * kPi / 2) < 1e-6) << a;
}

}  // namespace
}  // namespace dsla
