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

#include <cmath>

#include "rsde/error.h"
#include "rsde/rng.h"
#include "rsde/stability_lab.h"

namespace rsde {
namespace {

Tensor Normal(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng = MakeRng(seed);
  Tensor t = Tensor::Matrix(n, d);
  for (auto& v : t.values()) v = StandardNormal(rng);
  return t;
}

TEST(CharFnTest, OriginIsOne) {
  const CharFnEstimate e = EmpiricalCharFn(Normal(2000, 2, 1), Tensor::Matrix(1, 2));
  EXPECT_EQ(e.values[0], std::complex<double>(1.0, 0.0));
  EXPECT_EQ(e.samples, 2000u);
}

TEST(CharFnTest, GaussianValue) {
  const std::size_t n = 100000;
  const CharFnEstimate e = EmpiricalCharFn(Normal(n, 1, 2), Tensor::Matrix(1, 1, 1.0));
  EXPECT_NEAR(e.values[0].real(), std::exp(-0.5), 3.0 / std::sqrt(n));
  EXPECT_NEAR(e.values[0].imag(), 0.0, 3.0 / std::sqrt(n));
}

TEST(CharFnTest, PointMassHasUnitModulus) {
  const Tensor c = Tensor::Matrix(1500, 2, std::vector<double>(3000, 0.0));
  Tensor same = c;
  for (std::size_t i = 0; i < 1500; ++i) {
    same.at(i, 0) = 0.7;
    same.at(i, 1) = -1.3;
  }
  const Tensor y = Tensor::Matrix(2, 2, {1.0, 2.0, -0.5, 0.25});
  const CharFnEstimate e = EmpiricalCharFn(same, y);
  for (int k = 0; k < 2; ++k) {
    const double phase = y.at(k, 0) * 0.7 + y.at(k, 1) * -1.3;
    EXPECT_NEAR(e.values[k].real(), std::cos(phase), 1e-12);
    EXPECT_NEAR(e.values[k].imag(), std::sin(phase), 1e-12);
  }
}

TEST(CharFnTest, ModulusBoundAndErrors) {
  const std::size_t n = 4000;
  const Tensor s = Normal(n, 3, 3);
  const ProbeGrid grid = MakeProbeGrid(s);
  const CharFnEstimate e = EmpiricalCharFn(s, grid.points);
  for (const auto& v : e.values) EXPECT_LE(std::abs(v), 1.0 + 3.0 / std::sqrt(n));
  EXPECT_THROW(EmpiricalCharFn(Tensor::Matrix(0, 2), grid.points), InvalidArgument);
  EXPECT_THROW(EmpiricalCharFn(Normal(10, 3, 1), grid.points), PreconditionViolation);
  EXPECT_NO_THROW(EmpiricalCharFn(Normal(10, 3, 1), grid.points, true));
}

TEST(CharFnTest, MatchesDirectSum) {
  const Tensor s = Normal(2500, 2, 4);
  const Tensor y = Tensor::Matrix(3, 2, {0.3, -0.1, 1.0, 1.0, -2.0, 0.5});
  const CharFnEstimate e = EmpiricalCharFn(s, y);
  for (int k = 0; k < 3; ++k) {
    std::complex<double> ref = 0.0;
    for (std::size_t i = 0; i < 2500; ++i) {
      ref += std::exp(std::complex<double>(0.0, y.at(k, 0) * s.at(i, 0) + y.at(k, 1) * s.at(i, 1)));
    }
    ref /= 2500.0;
    EXPECT_NEAR(std::abs(e.values[k] - ref), 0.0, 1e-12);
  }
}

TEST(ProbeGridTest, WhitenedRadii) {
  Tensor s = Normal(5000, 2, 5);
  for (std::size_t i = 0; i < 5000; ++i) s.at(i, 1) *= 4.0;
  ProbeOptions opt;
  opt.directions = 8;
  opt.radii = 4;
  const ProbeGrid g = MakeProbeGrid(s, opt);
  ASSERT_EQ(g.points.rows(), 32u);
  double wsum = 0.0;
  for (double w : g.weights) wsum += w;
  EXPECT_NEAR(wsum, 1.0, 1e-12);
  // Largest node of each ray has y^T cov y close to max_radius^2.
  for (int a = 0; a < 8; ++a) {
    const std::size_t row = a * 4 + 3;
    const double q = g.points.at(row, 0) * g.points.at(row, 0) +
                     16.0 * g.points.at(row, 1) * g.points.at(row, 1);
    EXPECT_NEAR(q, 9.0, 0.6);
  }
}

TEST(InstabilityTest, IdenticalSetsGiveZero) {
  const Tensor s = Normal(3000, 2, 6);
  const ProbeGrid g = MakeProbeGrid(s);
  EXPECT_EQ(Instability(s, s, g), 0.0);
}

TEST(InstabilityTest, NoValidNodeFails) {
  const Tensor s = Normal(3000, 2, 6);
  ProbeOptions opt;
  opt.max_radius = 50.0;
  opt.radii = 2;
  const ProbeGrid g = MakeProbeGrid(s, opt);
  EXPECT_THROW(Instability(s, Normal(3000, 2, 7), g), NumericalFailure);
}

TEST(InstabilityTest, BootstrapThresholdSeparatesShift) {
  const Tensor clean = Normal(20000, 2, 8);
  const ProbeGrid g = MakeProbeGrid(clean);
  const NullThreshold null = BootstrapThreshold(clean, g, 20, 0.95, 1);
  ASSERT_EQ(null.replicates.size(), 20u);
  EXPECT_GT(null.threshold, 0.0);
  Tensor shifted = Normal(20000, 2, 9);
  for (std::size_t i = 0; i < 20000; ++i) shifted.at(i, 0) += 0.3;
  EXPECT_GT(Instability(shifted, clean, g), null.threshold);
  EXPECT_LT(Instability(Normal(20000, 2, 10), clean, g), null.threshold);
}

TEST(InstabilityScanTest, GaussianStableInsideIntervalOnly) {
  const SdeSpec spec;
  ScanOptions opt;
  opt.samples = 40000;
  opt.times = {0.1, 0.5, 0.9};
  opt.seed = 3;
  const auto scan = InstabilityScan(spec, DefaultMixture(), NoiseModel::Gaussian({1.0, 1.0}), opt);
  ASSERT_EQ(scan.size(), 3u);
  EXPECT_FALSE(scan[0].stable_in_theory);
  EXPECT_TRUE(scan[0].exceeds());
  for (int k = 1; k < 3; ++k) {
    EXPECT_TRUE(scan[k].stable_in_theory);
    EXPECT_FALSE(scan[k].exceeds()) << scan[k].t << " " << scan[k].instability << " "
                                    << scan[k].threshold;
  }
}

TEST(InstabilityScanTest, CauchyAdjustmentNeverHurts) {
  SdeSpec spec;
  spec.family = SdeFamily::kVe;
  ScanOptions opt;
  opt.samples = 40000;
  opt.times = {0.6, 0.8};
  opt.seed = 4;
  opt.bootstrap = 5;
  const NoiseModel noise = NoiseModel::Cauchy({1.0, 1.0});
  const auto adjusted = InstabilityScan(spec, DefaultMixture(), noise, opt);
  opt.rule = CoefficientRule::kUnadjusted;
  const auto plain = InstabilityScan(spec, DefaultMixture(), noise, opt);
  for (std::size_t k = 0; k < adjusted.size(); ++k) {
    EXPECT_LE(adjusted[k].instability, plain[k].instability) << adjusted[k].t;
  }
}

TEST(InstabilityScanTest, CauchyMidScheduleExceedsThreshold) {
  const SdeSpec spec;
  ScanOptions opt;
  opt.samples = 40000;
  opt.times = {0.5};
  opt.seed = 5;
  opt.bootstrap = 10;
  const auto scan = InstabilityScan(spec, DefaultMixture(), NoiseModel::Cauchy({1.0, 1.0}), opt);
  EXPECT_TRUE(scan[0].exceeds()) << scan[0].instability << " " << scan[0].threshold;
}

}  // namespace
}  // namespace rsde
