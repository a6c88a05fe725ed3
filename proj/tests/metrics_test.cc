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
#include <json.hpp>

#include "rsde/error.h"
#include "rsde/metrics.h"
#include "rsde/rng.h"

namespace rsde {
namespace {

Tensor Gaussian(std::size_t n, std::vector<double> mean, double sd, std::uint64_t seed) {
  Rng rng = MakeRng(seed);
  const std::size_t d = mean.size();
  Tensor t = Tensor::Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) t.at(i, j) = mean[j] + sd * StandardNormal(rng);
  }
  return t;
}

TEST(FrechetTest, IdentitySymmetryAndClosedForms) {
  const Tensor a = Gaussian(2000, {0.0, 1.0, -1.0}, 1.0, 1);
  const Tensor b = Gaussian(2000, {0.5, 1.0, 0.0}, 2.0, 2);
  EXPECT_NEAR(FrechetDistance(a, a).distance, 0.0, 1e-8);
  EXPECT_NEAR(FrechetDistance(a, b).distance, FrechetDistance(b, a).distance, 1e-8);

  // (mu1 - mu2)^2 + (sigma1 - sigma2)^2 per axis.
  EXPECT_NEAR(FrechetDistance(Gaussian(100000, {0.0}, 1.0, 3), Gaussian(100000, {1.0}, 1.0, 4)).distance,
              1.0, 0.05);
  EXPECT_NEAR(
      FrechetDistance(Gaussian(100000, {0.0, 0.0}, 1.0, 5), Gaussian(100000, {0.0, 0.0}, 2.0, 6)).distance,
      2.0, 0.1);
}

TEST(FrechetTest, PreconditionsAndRankDeficiency) {
  EXPECT_THROW(FrechetDistance(Tensor::Matrix(2, 2), Tensor::Matrix(5, 2)), InvalidArgument);
  EXPECT_THROW(FrechetDistance(Tensor::Matrix(5, 2), Tensor::Matrix(5, 3)), InvalidArgument);
  // A degenerate set is annotated, not rejected.
  Tensor flat = Gaussian(100, {0.0, 0.0}, 1.0, 7);
  for (std::size_t i = 0; i < 100; ++i) flat.at(i, 1) = flat.at(i, 0);
  const FrechetResult r = FrechetDistance(flat, Gaussian(100, {0.0, 0.0}, 1.0, 8));
  EXPECT_TRUE(std::isfinite(r.distance));
  EXPECT_GE(r.distance, 0.0);
}

TEST(PrdTest, HistogramClosedForm) {
  const auto curve = PrdFromHistograms({0.5, 0.5}, {1.0, 0.0}, 1001, 1e-10);
  double max_p = 0.0, max_r = 0.0;
  for (const auto& p : curve) {
    max_p = std::max(max_p, p.precision);
    max_r = std::max(max_r, p.recall);
    EXPECT_LE(p.precision, 0.5 + 1e-12);
  }
  EXPECT_NEAR(max_p, 0.5, 1e-6);
  EXPECT_NEAR(max_r, 1.0, 1e-6);
}

TEST(PrdTest, IdenticalSetsReachTheCorner) {
  const Tensor a = Gaussian(3000, {0.0, 0.0}, 1.0, 1);
  const auto curve = PrdCurve(a, a);
  double best = 0.0;
  for (const auto& p : curve) best = std::max(best, std::min(p.precision, p.recall));
  EXPECT_GE(best, 0.95);
}

TEST(PrdTest, DisjointSetsHugTheAxes) {
  const auto curve = PrdCurve(Gaussian(2000, {0.0, 0.0}, 1.0, 1), Gaussian(2000, {50.0, 0.0}, 1.0, 2));
  for (const auto& p : curve) EXPECT_LE(std::min(p.precision, p.recall), 0.05);
}

TEST(PrdTest, CurveIsMonotoneAndInUnitSquare) {
  const auto curve = PrdCurve(Gaussian(2000, {0.0, 0.0}, 1.0, 1), Gaussian(2000, {1.0, 0.0}, 1.5, 2));
  ASSERT_EQ(curve.size(), 1001u);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    EXPECT_GE(curve[i].precision, 0.0);
    EXPECT_LE(curve[i].precision, 1.0);
    EXPECT_GE(curve[i].recall, 0.0);
    EXPECT_LE(curve[i].recall, 1.0);
    if (i > 0) {
      EXPECT_GE(curve[i].recall, curve[i - 1].recall);
      EXPECT_LE(curve[i].precision, curve[i - 1].precision);
    }
  }
  PrdOptions bad;
  bad.clusters = 1;
  EXPECT_THROW(PrdCurve(Tensor::Matrix(3, 2), Tensor::Matrix(3, 2), bad), InvalidArgument);
}

TEST(PrdTest, RecallAtPrecisionGrid) {
  const std::vector<PrdPoint> curve = {{1.0, 0.1}, {0.8, 0.5}, {0.3, 0.9}};
  const auto r = RecallAtPrecision(curve, 11);
  ASSERT_EQ(r.size(), 11u);
  EXPECT_EQ(r[0], 0.9);
  EXPECT_EQ(r[3], 0.9);
  EXPECT_EQ(r[4], 0.5);
  EXPECT_EQ(r[8], 0.5);
  EXPECT_EQ(r[9], 0.1);
  EXPECT_EQ(r[10], 0.1);
}

TEST(KMeansTest, SeparatesBlobs) {
  Tensor pts = Tensor::Matrix(300, 2);
  const Tensor a = Gaussian(150, {0.0, 0.0}, 0.3, 1);
  const Tensor b = Gaussian(150, {10.0, 10.0}, 0.3, 2);
  std::copy(a.values().begin(), a.values().end(), pts.values().begin());
  std::copy(b.values().begin(), b.values().end(), pts.values().begin() + 300);
  Tensor centers;
  const auto labels = KMeans(pts, 2, 5, 100, 3, &centers);
  for (int i = 1; i < 150; ++i) EXPECT_EQ(labels[i], labels[0]);
  for (int i = 151; i < 300; ++i) EXPECT_EQ(labels[i], labels[150]);
  EXPECT_NE(labels[0], labels[150]);
  EXPECT_EQ(centers.rows(), 2u);
}

TEST(CoverageTest, MixtureDrawsSitAtTheChiSquareMass) {
  const MixtureSpec m = DefaultMixture();
  const std::size_t n = 50000;
  const double p = 1.0 - std::exp(-4.5);  // P(chi2_2 <= 9)
  EXPECT_NEAR(ThreeSigmaCoverage(SampleMixture(m, n, 1), m), p, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(CoverageTest, PointsAtMeansAndUniformBox) {
  const MixtureSpec m = DefaultMixture();
  Tensor at_means = Tensor::Matrix(4, 2, {4, 4, -4, 4, -4, -4, 4, -4});
  EXPECT_EQ(ThreeSigmaCoverage(at_means, m), 1.0);
  EXPECT_EQ(FarFraction(at_means, m, 6.0), 0.0);

  const std::size_t n = 200000;
  const double half = 40.0;
  Rng rng = MakeRng(4);
  Tensor box = Tensor::Matrix(n, 2);
  for (auto& v : box.values()) v = UniformRange(rng, -half, half);
  // Four disjoint ellipses of area pi * 9 * 0.5.
  const double p = 4 * M_PI * 9 * 0.5 / (4 * half * half);
  EXPECT_NEAR(ThreeSigmaCoverage(box, m), p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(BalanceTest, DeviationsAndDeficits) {
  const MixtureSpec m = DefaultMixture();
  const ComponentBalance one = ComputeComponentBalance(Tensor::Matrix(10, 2, 4.0), m);
  EXPECT_EQ(one.weights[0], 1.0);
  EXPECT_EQ(one.max_deviation, 0.75);
  EXPECT_EQ(one.deficit[0], -0.75);
  EXPECT_EQ(one.deficit[1], 0.25);

  const std::size_t n = 20000;
  const ComponentBalance direct = ComputeComponentBalance(SampleMixture(m, n, 2), m);
  EXPECT_LE(direct.max_deviation, 3 * std::sqrt(0.25 * 0.75 / n));
}

TEST(EnergyTest, AcceptsSameLawAndRejectsShift) {
  EnergyTestOptions opt;
  opt.seed = 2;
  const Tensor a = Gaussian(5000, {0.0, 0.0}, 1.0, 1);
  EXPECT_GT(EnergyTest(a, Gaussian(5000, {0.0, 0.0}, 1.0, 2), opt).p_value, 0.01);
  EXPECT_LT(EnergyTest(a, Gaussian(5000, {0.3, 0.0}, 1.0, 3), opt).p_value, 0.01);
  opt.permutations = 20;
  const Tensor small = Gaussian(800, {0.0, 0.0}, 1.0, 4);
  EXPECT_NEAR(EnergyTest(small, small, opt).statistic, 0.0, 1e-8);
}

TEST(MomentsTest, StandardErrorsScale) {
  const MomentComparison same =
      CompareMoments(Gaussian(50000, {1.0, 2.0}, 1.0, 1), Gaussian(50000, {1.0, 2.0}, 1.0, 2));
  EXPECT_LT(same.max_mean_z, 4.0);
  EXPECT_LT(same.max_cov_z, 4.0);
  const MomentComparison diff =
      CompareMoments(Gaussian(50000, {1.0, 2.0}, 1.0, 1), Gaussian(50000, {1.1, 2.0}, 1.2, 2));
  EXPECT_GT(diff.max_mean_z, 10.0);
  EXPECT_GT(diff.max_cov_z, 10.0);
}

TEST(ReportTest, JsonAndSvg) {
  const MixtureSpec m = DefaultMixture();
  const Tensor gen = SampleMixture(m, 600, 1);
  const Tensor ref = SampleMixture(m, 600, 2);
  const EvalReport r = Evaluate(gen, ref, &m);
  EXPECT_GE(r.frechet, 0.0);
  const auto j = nlohmann::json::parse(r.ToJson());
  EXPECT_TRUE(j.contains("frechet"));
  EXPECT_EQ(j["prd"].size(), r.prd.size());
  EXPECT_EQ(j["component_balance"]["weights"].size(), 4u);
  EXPECT_DOUBLE_EQ(j["three_sigma_coverage"].get<double>(), r.three_sigma_coverage);

  const std::string svg = ScatterSvg(gen, &m, "samples");
  std::size_t ellipses = 0;
  for (std::size_t pos = svg.find("<ellipse"); pos != std::string::npos;
       pos = svg.find("<ellipse", pos + 1)) {
    ++ellipses;
  }
  EXPECT_EQ(ellipses, 4u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(ScatterSvg(gen, nullptr, "x").find("<circle"), std::string::npos);
}

}  // namespace
}  // namespace rsde
