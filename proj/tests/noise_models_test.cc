/*
 * Copyright 2026 The rsde Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rsde/error.h"
#include "rsde/noise.h"
#include "rsde/rng.h"

namespace rsde {
namespace {

using CharFn = std::function<std::complex<double>(std::span<const double>)>;

CharFn GaussianChi(std::vector<double> r) {
  return [r](std::span<const double> y) { return NoiseModel::Gaussian(r).CharacteristicFunction(y); };
}

CharFn CauchyChi(std::vector<double> r) {
  return [r](std::span<const double> y) { return NoiseModel::Cauchy(r).CharacteristicFunction(y); };
}

double Quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double a = pos - lo;
  return (1 - a) * v[lo] + a * v[std::min(lo + 1, v.size() - 1)];
}

TEST(SampleNoise, ZeroRiskGivesZeroVector) {
  Rng rng = MakeRng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(SampleNoise(NoiseModel::Gaussian({0.0, 0.0}), rng), Tensor::FromList({0.0, 0.0}));
    EXPECT_EQ(SampleNoise(NoiseModel::Cauchy({0.0}), rng), Tensor::FromList({0.0}));
  }
}

TEST(SampleNoise, GaussianStandardDeviation) {
  Rng rng = MakeRng(2);
  const NoiseModel m = NoiseModel::Gaussian({2.0});
  double s = 0, ss = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double e = SampleNoise(m, rng)[0];
    s += e;
    ss += e * e;
  }
  const double sd = std::sqrt(ss / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, 2.0, 0.04);
}

TEST(SampleNoise, CauchyQuartiles) {
  Rng rng = MakeRng(3);
  const NoiseModel m = NoiseModel::Cauchy({1.0});
  std::vector<double> v(100000);
  for (auto& e : v) e = SampleNoise(m, rng)[0];
  EXPECT_NEAR(Quantile(v, 0.5), 0.0, 0.02);
  EXPECT_NEAR(Quantile(v, 0.75) - Quantile(v, 0.25), 2.0, 0.05);
}

TEST(NoiseModel, ValidationAndCustomRequirements) {
  EXPECT_THROW(NoiseModel::Gaussian({-1.0}), InvalidArgument);
  EXPECT_THROW(NoiseModel::Custom({1.0}, nullptr, nullptr), InvalidArgument);
  EXPECT_EQ(ParseNoiseKind("cauchy"), NoiseKind::kCauchy);
  EXPECT_THROW(ParseNoiseKind("laplace"), InvalidArgument);
}

TEST(NoiseModel, CharacteristicFunctionSanity) {
  Rng rng = MakeRng(4);
  for (const NoiseModel& m : {NoiseModel::Gaussian({0.7, 1.9}), NoiseModel::Cauchy({0.3, 2.0})}) {
    EXPECT_EQ(m.CharacteristicFunction(std::vector<double>{0.0, 0.0}), std::complex<double>(1.0));
    for (int i = 0; i < 1000; ++i) {
      const std::vector<double> y = {UniformRange(rng, -20, 20), UniformRange(rng, -20, 20)};
      EXPECT_LE(std::abs(m.CharacteristicFunction(y)), 1.0);
    }
  }
}

TEST(PsiGaussian, ReferenceValues) {
  EXPECT_EQ(PsiGaussian(std::vector<double>{0.0, 0.0}, 0.5), (std::vector<double>{0.0, 0.0}));
  const auto p = PsiGaussian(std::vector<double>{1.0, 1.0}, 0.7052);
  EXPECT_NEAR(p[0], 0.4973, 1e-4);
  EXPECT_NEAR(p[1], 0.4973, 1e-4);
}

TEST(PsiGaussian, GeneralPathEqualsClosedFormCoefficients) {
  SdeSpec spec;
  Rng rng = MakeRng(5);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> r = {UniformRange(rng, 0, 2), UniformRange(rng, 0, 2)};
    const double t = Uniform01(rng);
    const RiskCoefficients a = ComputeRiskCoefficients(spec, r, t);
    const RiskCoefficients b = GeneralRiskCoefficients(spec, NoiseModel::Gaussian(r), t);
    const RiskCoefficients c =
        GeneralRiskCoefficients(spec, DeductionProfile::ForNoise(NoiseModel::Gaussian(r)), t);
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.v, c.v);
    EXPECT_EQ(a.stable, c.stable);
  }
}

TEST(PsiCauchy, ReferenceValues) {
  EXPECT_NEAR(PsiCauchy(std::vector<double>{2.0})[0], 2.0, 1e-14);
  const auto p = PsiCauchy(std::vector<double>{1.0, 1.0});
  EXPECT_NEAR(p[0], 4.0 / 7.0, 1e-14);
  EXPECT_NEAR(p[1], 4.0 / 7.0, 1e-14);
  // Exact moment integrals of the Laplace weight solved independently.
  const auto q = PsiCauchy(std::vector<double>{1.0, 2.0});
  EXPECT_NEAR(q[0], 4.0 / 7.0, 1e-13);
  EXPECT_NEAR(q[1], 16.0 / 7.0, 1e-13);
  const auto w = PsiCauchy(std::vector<double>{0.3, 2.5, 1.1});
  EXPECT_NEAR(w[0], 0.05625, 1e-13);
  EXPECT_NEAR(w[1], 3.90625, 1e-12);
  EXPECT_NEAR(w[2], 0.75625, 1e-13);
}

TEST(PsiCauchy, PrintedVariantAgreesOnlyInSymmetricCases) {
  EXPECT_NEAR(PsiCauchyPrinted(std::vector<double>{2.0})[0], 2.0, 1e-14);
  EXPECT_NEAR(PsiCauchyPrinted(std::vector<double>{1.0, 1.0})[0], 4.0 / 7.0, 1e-14);
  const auto q = PsiCauchyPrinted(std::vector<double>{1.0, 2.0});
  EXPECT_NEAR(q[0], 0.457142857142857, 1e-12);
  EXPECT_NEAR(q[1], 3.028571428571429, 1e-12);
}

TEST(PsiCauchy, ZeroRiskCoordinatesExcluded) {
  const auto p = PsiCauchy(std::vector<double>{0.0, 1.0, 1.0});
  EXPECT_EQ(p[0], 0.0);
  // Remaining system is the two-dimensional one.
  EXPECT_NEAR(p[1], 4.0 / 7.0, 1e-14);
  EXPECT_EQ(PsiCauchy(std::vector<double>{0.0, 0.0}), (std::vector<double>{0.0, 0.0}));
}

TEST(PsiCauchy, SymmetricRisksGiveEqualEntries) {
  for (int d = 1; d <= 5; ++d) {
    const auto p = PsiCauchy(std::vector<double>(d, 1.7));
    for (double v : p) EXPECT_NEAR(v, p[0], 1e-12);
  }
}

TEST(PsiCauchy, NonnegativeAndMonotoneInEachRisk) {
  for (double a = 0.2; a <= 3.0; a += 0.2) {
    double prev0 = -1, prev1 = -1;
    for (double b = 0.2; b <= 3.0; b += 0.2) {
      const auto p = PsiCauchy(std::vector<double>{a, b});
      EXPECT_GE(p[0], 0.0);
      EXPECT_GE(p[1], prev1);
      EXPECT_GE(p[0], prev0 - 1e-12);
      prev0 = p[0];
      prev1 = p[1];
    }
  }
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  std::vector<double> x, w;
  GaussLegendre(129, &x, &w);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 2.0, 1e-13);
  double m4 = 0, m100 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m4 += w[i] * std::pow(x[i], 4);
    m100 += w[i] * std::pow(x[i], 100);
  }
  EXPECT_NEAR(m4, 2.0 / 5.0, 1e-14);
  EXPECT_NEAR(m100, 2.0 / 101.0, 1e-14);
  GaussLegendre(1, &x, &w);
  EXPECT_EQ(x[0], 0.0);
  EXPECT_DOUBLE_EQ(w[0], 2.0);
}

TEST(QuadratureGrid, WeightsPositiveAndMassCorrect) {
  const QuadratureGrid g = BuildQuadratureGrid(WeightFunction::GaussianEnvelope(2, 1.0));
  double mass = 0;
  for (double w : g.weights) {
    EXPECT_GT(w, 0.0);
    mass += w;
  }
  EXPECT_NEAR(mass, 2.0 * M_PI, 1e-9);
}

TEST(PsiNumeric, GaussianUnitRisk) {
  const QuadratureGrid g = BuildQuadratureGrid(WeightFunction::GaussianEnvelope(1, 1.0));
  EXPECT_NEAR(PsiNumeric(GaussianChi({1.0}), 1.0, g)[0], 1.0, 1e-3);
}

TEST(PsiNumeric, MatchesGaussianClosedFormOnRandomCases) {
  Rng rng = MakeRng(6);
  std::vector<QuadratureGrid> grids;
  for (int d = 1; d <= 3; ++d) {
    grids.push_back(BuildQuadratureGrid(WeightFunction::GaussianEnvelope(d, 1.0)));
  }
  for (int c = 0; c < 50; ++c) {
    const int d = 1 + c % 3;
    std::vector<double> r(d);
    for (auto& v : r) v = UniformRange(rng, 1e-6, 2.0);
    const double u = UniformRange(rng, 1e-6, 1.0);
    const auto num = PsiNumeric(GaussianChi(r), u, grids[d - 1]);
    const auto ref = PsiGaussian(r, u);
    for (int j = 0; j < d; ++j) EXPECT_NEAR(num[j], ref[j], 1e-3) << "case " << c;
  }
}

TEST(PsiNumeric, CauchyMatchesClosedFormUnderLaplaceWeight) {
  const auto one = PsiNumeric(CauchyChi({2.0}), 1.0,
                              BuildQuadratureGrid(WeightFunction::Laplace({2.0})));
  EXPECT_NEAR(one[0], 2.0, 1e-2);
  const auto two = PsiNumeric(CauchyChi({1.0, 1.0}), 1.0,
                              BuildQuadratureGrid(WeightFunction::Laplace({1.0, 1.0})));
  EXPECT_NEAR(two[0], 4.0 / 7.0, 1e-2);
  EXPECT_NEAR(two[1], 4.0 / 7.0, 1e-2);

  Rng rng = MakeRng(7);
  for (int c = 0; c < 9; ++c) {
    const int d = 1 + c % 3;
    std::vector<double> r(d);
    for (auto& v : r) v = UniformRange(rng, 0.2, 3.0);
    const auto num = PsiNumeric(CauchyChi(r), 1.0, BuildQuadratureGrid(WeightFunction::Laplace(r)));
    const auto ref = PsiCauchy(r);
    for (int j = 0; j < d; ++j) EXPECT_NEAR(num[j], ref[j], 1e-2) << "case " << c;
  }
}

TEST(PsiNumeric, CauchyDeductionIsLinearInScale) {
  const std::vector<double> r = {0.8, 1.4};
  const QuadratureGrid g = BuildQuadratureGrid(WeightFunction::Laplace(r));
  const auto full = PsiNumeric(CauchyChi(r), 1.0, g);
  const auto half = PsiNumeric(CauchyChi(r), 0.5, g);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(half[j], 0.5 * full[j], 1e-9);
}

TEST(PsiNumeric, MonteCarloPathAboveTensorDimension) {
  QuadratureOptions opt;
  opt.mc_samples = 200000;
  const std::vector<double> r = {0.5, 1.0, 1.5, 0.7};
  const QuadratureGrid g = BuildQuadratureGrid(WeightFunction::GaussianEnvelope(4, 1.0), opt);
  const auto num = PsiNumeric(GaussianChi(r), 0.8, g);
  const auto ref = PsiGaussian(r, 0.8);
  // Gaussian log-modulus lies in the span of the moment features, so the
  // weighted least squares recovers it independent of the sample.
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(num[j], ref[j], 1e-9);
}

TEST(PsiNumeric, IllConditionedMomentsThrow) {
  QuadratureGrid g;
  g.dim = 2;
  g.nodes = {1.0, 0.0, 2.0, 0.0};
  g.weights = {1.0, 1.0};
  EXPECT_THROW(PsiNumeric(GaussianChi({1.0, 1.0}), 1.0, g), NumericalFailure);
}

TEST(PsiNumeric, CustomWeightFunctionExtentBySearch) {
  const WeightFunction w = WeightFunction::Custom(
      1, [](std::span<const double> y) { return std::exp(-0.5 * y[0] * y[0]); });
  EXPECT_NEAR(w.AxisExtent(0, 1e-12), std::sqrt(2.0 * std::log(1e12)), 1e-9);
  const QuadratureGrid g = BuildQuadratureGrid(w);
  EXPECT_NEAR(PsiNumeric(GaussianChi({0.9}), 1.0, g)[0], 0.81, 1e-3);
}

TEST(GeneralRiskCoefficients, VeCauchyThresholdExample) {
  SdeSpec ve;
  ve.family = SdeFamily::kVe;
  // sigma(t)^2 = sigma(0)^2 + 1, so v0^2 = 1 < psi = 2.
  const double t = 0.540696926791501;
  const RiskCoefficients c = GeneralRiskCoefficients(ve, NoiseModel::Cauchy({2.0}), t);
  EXPECT_EQ(c.stable[0], 0);
  EXPECT_EQ(c.v[0], 0.0);
  const StabilityInterval iv = GeneralStabilityInterval(ve, NoiseModel::Cauchy({2.0}));
  EXPECT_GT(iv.t_star, t);
  // Stable once sigma(t)^2 - sigma(0)^2 reaches 2.
  const double expected = 0.5 * std::log1p(2.0 / 1e-4) / std::log(5000.0);
  EXPECT_NEAR(iv.t_star, expected, 1e-8);
}

TEST(GeneralRiskCoefficients, ZeroRiskIsBaseSchedule) {
  SdeSpec spec;
  for (const NoiseModel& m : {NoiseModel::Cauchy({0.0, 0.0}), NoiseModel::Gaussian({0.0, 0.0})}) {
    const RiskCoefficients c = GeneralRiskCoefficients(spec, m, 0.3);
    EXPECT_EQ(c.v_sq[0], BaseSchedules(spec, 0.3).v0_sq);
    EXPECT_EQ(GeneralStabilityInterval(spec, m).t_star, 0.0);
  }
}

TEST(GeneralRiskCoefficients, CustomLawMatchesEquivalentGaussian) {
  // A custom law with a Gaussian characteristic function must reproduce the
  // Gaussian deduction through the tabulated quadrature path.
  const CharFnFamily chi = [](std::span<const double> r, std::span<const double> y) {
    double e = 0;
    for (std::size_t j = 0; j < y.size(); ++j) e += r[j] * r[j] * y[j] * y[j];
    return std::complex<double>(std::exp(-0.5 * e), 0.0);
  };
  const NoiseSamplerFamily sampler = [](std::span<const double> r, Rng& rng,
                                        std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = r[j] * StandardNormal(rng);
  };
  const NoiseModel custom = NoiseModel::Custom({0.6, 1.2}, chi, sampler);
  SdeSpec spec;
  DeductionOptions opt;
  opt.table_nodes = 65;
  const DeductionProfile p = DeductionProfile::ForNoise(custom, opt);
  for (double t : {0.2, 0.5, 0.9}) {
    const RiskCoefficients a = GeneralRiskCoefficients(spec, p, t);
    const RiskCoefficients b = ComputeRiskCoefficients(spec, custom.risk, t);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(a.v_sq[j], b.v_sq[j], 2e-3) << t;
  }
  EXPECT_NEAR(GeneralStabilityInterval(spec, p).t_star,
              ComputeStabilityInterval(spec, custom.risk).t_star, 2e-3);
  Rng rng = MakeRng(9);
  EXPECT_EQ(SampleNoise(custom, rng).size(), 2u);
}

}  // namespace
}  // namespace rsde
