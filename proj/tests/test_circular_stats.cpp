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
#include <vector>

#include "dsla/circular_stats.hpp"
#include "dsla/random.hpp"

namespace dsla {
namespace {

constexpr double kPi = std::numbers::pi;

// ln I0(b) by direct summation of sum_k ((b/2)^k / k!)^2 in long double.
double series_log_i0(double b) {
  long double term = 1.0L, sum = 1.0L;
  const long double q = (long double)b * b / 4.0L;
  for (int k = 1; k < 400; ++k) {
    term *= q / ((long double)k * k);
    sum += term;
    if (term < sum * 1e-21L) break;
  }
  return static_cast<double>(std::log(sum));
}

// Large-argument expansion of ln I0.
double asymptotic_log_i0(double b) {
  const double s = 1.0 + 1.0 / (8 * b) + 9.0 / (128 * b * b) + 225.0 / (3072 * b * b * b) +
                   11025.0 / (98304 * b * b * b * b);
  return b - 0.5 * std::log(2 * kPi * b) + std::log(s);
}

// Large-argument expansion of A(b) = I1(b)/I0(b).
double asymptotic_ratio(double b) {
  return 1.0 - 1.0 / (2 * b) - 1.0 / (8 * b * b) - 1.0 / (8 * b * b * b) -
         25.0 / (128 * b * b * b * b);
}

// Composite Simpson integral of exp(b (cos t - 1)) over [0, pi] / pi, scaled.
double quadrature_log_i0(double b) {
  const int n = 20000;
  const double h = kPi / n;
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    s += w * std::exp(b * (std::cos(k * h) - 1.0));
  }
  return b + std::log(s * h / 3.0 / kPi);
}

Mixture random_mixture(Rng& rng, int m, double b_max = 88.0) {
  std::vector<VonMisesComponent> c;
  double wsum = 0.0;
  for (int k = 0; k < m; ++k) {
    c.push_back({rng.uniform(0, kTwoPi), rng.uniform(1e-3, b_max), rng.uniform(0.05, 1.0)});
    wsum += c.back().w;
  }
  for (auto& x : c) x.w /= wsum;
  return Mixture(c);
}

TEST(LogBesselI0, ZeroIsZero) { EXPECT_EQ(log_bessel_i0(0.0), 0.0); }

TEST(LogBesselI0, KnownValues) {
  EXPECT_NEAR(log_bessel_i0(1.0), std::log(1.2660658777520082), 1e-12);
  EXPECT_NEAR(log_bessel_i0(88.0), 84.8438, 1e-4);
}

TEST(LogBesselI0, MatchesSeriesOracleOnSmallArguments) {
  for (double b = 0.01; b <= 20.0; b += 0.173)
    EXPECT_NEAR(log_bessel_i0(b), series_log_i0(b), 1e-6 * std::fabs(series_log_i0(b)) + 1e-15)
        << "b=" << b;
}

TEST(LogBesselI0, MatchesAsymptoticOracleOnLargeArguments) {
  for (double b = 40.0; b <= 88.0; b += 0.5)
    EXPECT_NEAR(log_bessel_i0(b), asymptotic_log_i0(b), 1e-4 * asymptotic_log_i0(b)) << b;
}

TEST(LogBesselI0, MatchesQuadratureCrossCheck) {
  for (double b : {0.5, 3.0, 17.0, 55.0, 88.0, 100.0})
    EXPECT_NEAR(log_bessel_i0(b), quadrature_log_i0(b), 1e-9 * (1.0 + b)) << b;
}

TEST(LogBesselI0, FiniteUpToOneHundredAndBeyond) {
  for (double b = 0.0; b <= 100.0; b += 0.25) EXPECT_TRUE(std::isfinite(log_bessel_i0(b)));
  EXPECT_TRUE(std::isfinite(log_bessel_i0(1000.0)));
}

TEST(LogBesselI0, NegativeArgumentIsDomainError) {
  EXPECT_THROW(log_bessel_i0(-1e-9), ContractError);
  EXPECT_THROW(log_bessel_i0(std::nan("")), ContractError);
}

TEST(BesselRatio, MatchesDerivativeOfLogI0) {
  for (double b : {0.3, 2.0, 10.0, 50.0, 88.0}) {
    const double h = 1e-5 * (1.0 + b);
    const double fd = (log_bessel_i0(b + h) - log_bessel_i0(b - h)) / (2 * h);
    EXPECT_NEAR(bessel_ratio(b), fd, 1e-7) << b;
  }
  EXPECT_NEAR(bessel_ratio(88.0), asymptotic_ratio(88.0), 1e-8);
}

TEST(VmPdf, UniformLimit) {
  for (double t : {0.0, 1.0, 4.0}) EXPECT_NEAR(vm_pdf(t, {0.7, 1e-12, 1}), 1 / kTwoPi, 1e-12);
}

TEST(VmPdf, DirectEvaluation) {
  EXPECT_NEAR(vm_pdf(0.4, {0.4, 1.0, 1.0}), std::exp(1.0) / (kTwoPi * 1.2660658777520082), 1e-12);
  EXPECT_NEAR(vm_pdf(0.4 + kPi, {0.4, 1.0, 1.0}), 0.046245, 1e-6);
  EXPECT_NEAR(vm_pdf(0.4, {0.4, 1.0, 1.0}), 0.34171, 1e-5);
}

TEST(VmPdf, PeriodicExactly) {
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const VonMisesComponent c{rng.uniform(0, kTwoPi), rng.uniform(0.01, 88), 1};
    const double t = rng.uniform(0, kTwoPi);
    if ((t + kTwoPi) - kTwoPi != t) continue;
    EXPECT_EQ(vm_pdf(t, c), vm_pdf(t + kTwoPi, c));
  }
}

TEST(VmPdf, StrictlyPositive) {
  EXPECT_GT(vm_pdf(kPi, {0.0, 88.0, 1.0}), 0.0);
}

TEST(MixturePdf, DegenerateWeightsEqualComponent) {
  const Mixture mix({{1.0, 5.0, 1.0}, {2.0, 3.0, 0.0}, {4.0, 9.0, 0.0}});
  for (double t = 0; t < kTwoPi; t += 0.3)
    EXPECT_NEAR(mixture_pdf(t, mix), vm_pdf(t, mix[0]), 1e-15);
}

TEST(MixturePdf, NearUniformComponentsGiveUniform) {
  const Mixture mix({{1.0, 1e-12, 0.2}, {2.0, 1e-12, 0.5}, {4.0, 1e-12, 0.3}});
  EXPECT_NEAR(mixture_pdf(2.5, mix), 1 / kTwoPi, 1e-12);
}

TEST(MixturePdf, RejectsBadWeights) {
  const Mixture mix({{1.0, 1.0, 0.5}, {2.0, 1.0, 0.6}});
  EXPECT_THROW(mixture_pdf(0.0, mix), ContractError);
}

TEST(MixturePdf, IntegratesToOneOverRandomMixtures) {
  Rng rng(11);
  const int n = 256;
  for (int trial = 0; trial < 1000; ++trial) {
    const Mixture mix = random_mixture(rng, 1 + int(rng.index(3)));
    // Periodic trapezoid rule on 256 bins.
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += mixture_pdf(kTwoPi * k / n, mix);
    ASSERT_NEAR(s * kTwoPi / n, 1.0, 1e-3) << trial;
  }
}

TEST(TargetDistribution, SingleMaximalComponent) {
  const auto t0 = target_distribution(0.0);
  ASSERT_EQ(t0.size(), 1u);
  EXPECT_EQ(t0[0].mu, 0.0);
  EXPECT_EQ(t0[0].b, 88.0);
  EXPECT_EQ(t0[0].w, 1.0);
  EXPECT_EQ(target_distribution(kPi)[0].mu, kPi);
  EXPECT_NEAR(mixture_pdf(0.0, t0), std::exp(88.0 - asymptotic_log_i0(88.0)) / kTwoPi, 1e-4);
  EXPECT_NEAR(mixture_pdf(0.0, t0), 3.7371, 1e-3);
}

TEST(KlDivergence, SelfDivergenceVanishes) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const Mixture p = random_mixture(rng, 3);
    EXPECT_LE(std::fabs(kl_divergence(p, p)), 1e-6);
  }
  EXPECT_LE(std::fabs(kl_divergence(target_distribution(1.0), target_distribution(1.0))), 1e-6);
}

TEST(KlDivergence, PeakedTargetAgainstUniformMatchesClosedForm) {
  const double b = 88.0;
  const double oracle = b * asymptotic_ratio(b) - asymptotic_log_i0(b);
  EXPECT_NEAR(oracle, 2.655, 5e-3);
  const Mixture uniform({{0.0, 1e-12, 1.0}});
  for (double mu : {0.0, 0.3, kPi, 5.9})
    EXPECT_NEAR(kl_divergence(target_distribution(mu), uniform), oracle, 1e-2);
}

TEST(KlDivergence, NonNegativeOverRandomPairs) {
  Rng rng(17);
  for (int k = 0; k < 1000; ++k) {
    const Mixture p = random_mixture(rng, 1 + int(rng.index(3)));
    const Mixture q = random_mixture(rng, 1 + int(rng.index(3)));
    ASSERT_GE(kl_divergence(p, q), -1e-9) << k;
  }
}

TEST(KlDivergence, FiniteWhenQVanishes) {
  const double kl = kl_divergence(target_distribution(0.0), target_distribution(kPi));
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_GT(kl, 100.0);
}

TEST(ParamsFromRaw, Transform) {
  std::vector<RawDirectional> raw{{0.5, 0.0, 1.0}, {0.25, 1.0, 1.0}, {0.0, 0.5, 2.0}};
  const Mixture m = params_from_raw(raw);
  EXPECT_NEAR(m[0].mu, kPi, 1e-15);
  EXPECT_NEAR(m[1].mu, kPi / 2, 1e-15);
  EXPECT_DOUBLE_EQ(m[0].w, 0.25);
  EXPECT_DOUBLE_EQ(m[1].w, 0.25);
  EXPECT_DOUBLE_EQ(m[2].w, 0.5);
  EXPECT_DOUBLE_EQ(m[0].b, 88.0);  // clamped from 88 * 1.001
  EXPECT_NEAR(m[1].b, 0.088, 1e-15);
  EXPECT_NEAR(m[2].b, 88.0 * 0.501, 1e-12);
}

TEST(ParamsFromRaw, AllZeroWeightsFallBackToUniform) {
  std::vector<RawDirectional> raw(3, {0.1, 0.2, 0.0});
  const Mixture m = params_from_raw(raw);
  for (const auto& c : m.components()) EXPECT_DOUBLE_EQ(c.w, 1.0 / 3.0);
}

TEST(ParamsFromRaw, AlwaysValidMixture) {
  Rng rng(23);
  for (int k = 0; k < 2000; ++k) {
    std::vector<RawDirectional> raw(3);
    for (auto& r : raw) {
      r = {rng.uniform(), rng.uniform(), rng.uniform()};
      if (rng.bernoulli(0.1)) r.sigma_tilde = rng.bernoulli(0.5) ? 0.0 : 1.0;
      if (rng.bernoulli(0.1)) r.w_tilde = 0.0;
    }
    const Mixture m = params_from_raw(raw);
    EXPECT_NEAR(m.weight_sum(), 1.0, 1e-12);
    for (const auto& c : m.components()) {
      EXPECT_GT(c.b, 0.0);
      EXPECT_LE(c.b, 88.0);
      EXPECT_GE(c.mu, 0.0);
      EXPECT_LT(c.mu, kTwoPi);
    }
  }
}

TEST(Angles, WrapAndDistance) {
  EXPECT_NEAR(wrap_angle(-0.5), kTwoPi - 0.5, 1e-15);
  EXPECT_NEAR(wrap_angle(7.0), 7.0 - kTwoPi, 1e-15);
  EXPECT_LT(wrap_angle(-1e-18), kTwoPi);
  EXPECT_NEAR(angular_distance(0.1, kTwoPi - 0.1), 0.2, 1e-12);
}

TEST(CircularConstants, Validation) {
  EXPECT_NO_THROW(CircularConstants{}.validate());
  EXPECT_THROW((CircularConstants{0.0, 1e-3, 256}.validate()), ContractError);
  EXPECT_THROW((CircularConstants{88.0, 1.0, 256}.validate()), ContractError);
  EXPECT_THROW((CircularConstants{88.0, 1e-3, 32}.validate()), ContractError);
}

}  // namespace
}  // namespace dsla
