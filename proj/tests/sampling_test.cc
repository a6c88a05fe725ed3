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
#include <limits>

#include "rsde/error.h"
#include "rsde/rng.h"
#include "rsde/sampling.h"

namespace rsde {
namespace {

// x0 ~ N(m, s2 I) has marginal N(u m, (u^2 s2 + v0^2) I) under the base
// process, so its score is linear in x.
struct GaussianData {
  std::vector<double> mean;
  double var;

  ScoreFn Score(const SdeSpec& spec) const {
    return [this, spec](std::span<const double> x, std::size_t batch, double t,
                        std::span<double> out) {
      const BaseSchedule b = BaseSchedules(spec, t);
      const double var_t = b.u * b.u * var + b.v0_sq;
      const std::size_t d = mean.size();
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          out[i * d + j] = -(x[i * d + j] - b.u * mean[j]) / var_t;
        }
      }
    };
  }
};

struct Moments {
  std::vector<double> mean;
  std::vector<double> var;
};

Moments ColumnMoments(const Tensor& s) {
  const std::size_t n = s.rows(), d = s.cols();
  Moments m{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += s.at(i, j) / n;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = s.at(i, j) - m.mean[j];
      m.var[j] += c * c / (n - 1);
    }
  }
  return m;
}

// Exact mean and variance of one coordinate after the Euler-Maruyama
// recursion with a linear score: x' = a x + b + g sqrt(dt) z.
std::pair<double, double> RecursionMoments(const SdeSpec& spec, int steps, double m, double s2) {
  double mean = 0.0;
  double var = spec.family == SdeFamily::kVp ? 1.0 : BaseSchedules(spec, spec.horizon).v0_sq;
  for (int k = 0; k < steps; ++k) {
    const double t = spec.horizon * (steps - k) / steps;
    const double dt = spec.horizon / steps;
    const BaseSchedule b = BaseSchedules(spec, t);
    const double var_t = b.u * b.u * s2 + b.v0_sq;
    const double f = spec.family == SdeFamily::kVp ? -0.5 * Beta(spec, t) : 0.0;
    const double g2 = BaseDiffusion(spec, t) * BaseDiffusion(spec, t);
    const double a = 1.0 - f * dt - g2 * dt / var_t;
    const double c = g2 * dt * b.u * m / var_t;
    mean = a * mean + c;
    var = a * a * var + g2 * dt;
  }
  return {mean, var};
}

SdeSpec Vp() { return SdeSpec{}; }

SdeSpec Ve() {
  SdeSpec s;
  s.family = SdeFamily::kVe;
  return s;
}

TEST(SamplerTest, AnalyticScoreRecoversDataMomentsVp) {
  const GaussianData data{{1.0, -2.0}, 0.25};
  const SdeSpec spec = Vp();
  SamplerConfig cfg;
  cfg.seed = 4;
  const Tensor s = ReverseSample(data.Score(spec), 2, spec, cfg, 100000);
  const Moments m = ColumnMoments(s);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(m.mean[j], data.mean[j], 0.02 * std::abs(data.mean[j])) << j;
    EXPECT_NEAR(m.var[j], data.var, 0.02 * data.var) << j;
  }
}

TEST(SamplerTest, AnalyticScoreRecoversDataMomentsVe) {
  const GaussianData data{{3.0}, 1.0};
  const SdeSpec spec = Ve();
  SamplerConfig cfg;
  cfg.seed = 5;
  const Tensor s = ReverseSample(data.Score(spec), 1, spec, cfg, 100000);
  const Moments m = ColumnMoments(s);
  EXPECT_NEAR(m.mean[0], 3.0, 0.02 * 3.0);
  EXPECT_NEAR(m.var[0], 1.0, 0.02);
}

TEST(SamplerTest, DiscretizationErrorShrinksWithSteps) {
  const SdeSpec spec = Vp();
  const double m = 1.5, s2 = 0.3;
  double prev = std::numeric_limits<double>::infinity();
  for (int steps : {250, 500, 1000}) {
    const auto [mean, var] = RecursionMoments(spec, steps, m, s2);
    const double err = std::abs(mean - m) + std::abs(var - s2);
    EXPECT_LT(err, prev) << steps;
    // First-order scheme: halving dt roughly halves the error.
    if (std::isfinite(prev)) {
      EXPECT_NEAR(prev / err, 2.0, 0.3) << steps;
    }
    prev = err;
  }
  EXPECT_LT(prev, 0.02 * s2);
}

TEST(SamplerTest, EmpiricalMomentsMatchExactRecursion) {
  const GaussianData data{{1.5}, 0.3};
  const SdeSpec spec = Vp();
  for (int steps : {250, 1000}) {
    SamplerConfig cfg;
    cfg.steps = steps;
    cfg.seed = 7;
    const std::size_t n = 40000;
    const Tensor s = ReverseSample(data.Score(spec), 1, spec, cfg, n);
    const Moments em = ColumnMoments(s);
    const auto [mean, var] = RecursionMoments(spec, steps, 1.5, 0.3);
    EXPECT_NEAR(em.mean[0], mean, 4 * std::sqrt(var / n)) << steps;
    EXPECT_NEAR(em.var[0], var, 4 * var * std::sqrt(2.0 / n)) << steps;
  }
}

TEST(SamplerTest, SingleStepMatchesHandUpdate) {
  const GaussianData data{{0.5, 0.5}, 1.0};
  const SdeSpec spec = Vp();
  SamplerConfig cfg;
  cfg.steps = 1;
  cfg.seed = 12;
  const Tensor s = ReverseSample(data.Score(spec), 2, spec, cfg, 1);
  ASSERT_TRUE(s.AllFinite());

  Rng rng = MakeRng(12, 0);
  const double x[2] = {StandardNormal(rng), StandardNormal(rng)};
  const BaseSchedule b = BaseSchedules(spec, 1.0);
  const double var_t = b.u * b.u + b.v0_sq;
  const double f = -0.5 * Beta(spec, 1.0);
  const double g = BaseDiffusion(spec, 1.0);
  for (int j = 0; j < 2; ++j) {
    const double score = -(x[j] - b.u * 0.5) / var_t;
    const double expected = x[j] - (f * x[j] - g * g * score) + g * StandardNormal(rng);
    EXPECT_NEAR(s.at(0, j), expected, 1e-12);
  }
}

TEST(SamplerTest, CoefficientsAreOnlyEvaluatedAtZeroRisk) {
  const GaussianData data{{0.0}, 1.0};
  SamplerConfig cfg;
  cfg.steps = 37;
  int calls = 0;
  double max_risk = 0.0;
  cfg.on_coefficients = [&](double, std::span<const double> risk) {
    ++calls;
    for (double r : risk) max_risk = std::max(max_risk, std::abs(r));
  };
  ReverseSample(data.Score(Vp()), 1, Vp(), cfg, 10);
  EXPECT_EQ(calls, 37);
  EXPECT_EQ(max_risk, 0.0);
}

TEST(SamplerTest, ResultIndependentOfBlockingAndThreads) {
  const GaussianData data{{1.0, 2.0, 3.0}, 0.5};
  SamplerConfig a;
  a.steps = 50;
  a.seed = 3;
  a.block = 500;
  const Tensor ra = ReverseSample(data.Score(Vp()), 3, Vp(), a, 97);
  SamplerConfig b = a;
  b.block = 7;
  b.threads = 3;
  EXPECT_EQ(ReverseSample(data.Score(Vp()), 3, Vp(), b, 97), ra);
  // Chains are individually seeded, so a prefix is reproduced exactly.
  const Tensor prefix = ReverseSample(data.Score(Vp()), 3, Vp(), a, 10);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(prefix[i], ra[i]);
}

TEST(SamplerTest, CustomGridIsValidated) {
  const GaussianData data{{0.0}, 1.0};
  SamplerConfig cfg;
  cfg.grid = {1.0, 0.5, 0.5, 0.0};
  EXPECT_THROW(ReverseSample(data.Score(Vp()), 1, Vp(), cfg, 1), InvalidArgument);
  cfg.grid = {0.9, 0.0};
  EXPECT_THROW(ReverseSample(data.Score(Vp()), 1, Vp(), cfg, 1), InvalidArgument);
  cfg.grid = {1.0, 0.3, 0.0};
  EXPECT_EQ(TimeGrid(Vp(), cfg).size(), 3u);
  EXPECT_TRUE(ReverseSample(data.Score(Vp()), 1, Vp(), cfg, 4).AllFinite());
  SamplerConfig bad;
  bad.steps = 0;
  EXPECT_THROW(ReverseSample(data.Score(Vp()), 1, Vp(), bad, 1), InvalidArgument);
}

TEST(SamplerTest, UniformGridEndpoints) {
  SamplerConfig cfg;
  cfg.steps = 3;
  const auto g = TimeGrid(Vp(), cfg);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g.front(), 1.0);
  EXPECT_EQ(g.back(), 0.0);
  EXPECT_NEAR(g[1], 2.0 / 3.0, 1e-15);
}

TEST(SamplerTest, NonFiniteStateReportsStep) {
  ScoreFn bad = [](std::span<const double>, std::size_t, double t, std::span<double> out) {
    for (auto& v : out) v = t < 0.5 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  SamplerConfig cfg;
  cfg.steps = 10;
  try {
    ReverseSample(bad, 2, Vp(), cfg, 3);
    FAIL() << "expected a numerical failure";
  } catch (const NumericalFailure& e) {
    EXPECT_NE(std::string(e.what()).find("step 7"), std::string::npos) << e.what();
  }
}

TEST(SamplerTest, ConditionalModelNeedsGuidance) {
  ModelConfig mc;
  mc.cond_dim = 3;
  const ScoreModel model = ScoreModel::Create(mc, 1);
  EXPECT_THROW(ModelScore(model), InvalidArgument);
}

TEST(SamplerTest, ModelSamplingIsDeterministic) {
  ModelConfig mc;
  mc.hidden = {8};
  const ScoreModel model = ScoreModel::Create(mc, 2);
  SamplerConfig cfg;
  cfg.steps = 20;
  cfg.seed = 9;
  const Tensor a = ReverseSample(model, Vp(), cfg, 5);
  EXPECT_EQ(a, ReverseSample(model, Vp(), cfg, 5));
  EXPECT_TRUE(a.AllFinite());
  const Tensor one = ReverseSampleOne(model, Vp(), cfg);
  EXPECT_EQ(one.rank(), 1u);
  EXPECT_EQ(one[0], a.at(0, 0));
}

}  // namespace
}  // namespace rsde
