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

#include "rsde/baselines.h"
#include "rsde/datagen.h"
#include "rsde/error.h"
#include "rsde/metrics.h"

namespace rsde {
namespace {

ModelConfig Small(Method method, int dim = 2) {
  ModelConfig base;
  base.hidden = {16};
  return ModelConfigFor(method, dim, base);
}

void ZeroHead(ScoreModel* m) {
  auto& last = m->layers().back();
  std::fill(last.weight.values().begin(), last.weight.values().end(), 0.0);
  std::fill(last.bias.values().begin(), last.bias.values().end(), 0.0);
}

TEST(MethodTest, NamesRoundTrip) {
  for (Method m : {Method::kStandard, Method::kRiskVariable, Method::kClassifierFree,
                   Method::kRiskRegressor, Method::kRiskSensitive}) {
    EXPECT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_THROW(ParseMethod("oracle"), InvalidArgument);
}

TEST(MethodTest, ModelShapes) {
  EXPECT_EQ(ModelConfigFor(Method::kRiskVariable, 3).data_dim, 6);
  EXPECT_EQ(ModelConfigFor(Method::kClassifierFree, 3).cond_dim, 4);
  EXPECT_EQ(ModelConfigFor(Method::kRiskRegressor, 3).out_width(), 3);
  EXPECT_EQ(ModelConfigFor(Method::kStandard, 3).cond_dim, 0);
}

TEST(GuidanceTest, RuleValidation) {
  const ScoreModel plain = ScoreModel::Create(Small(Method::kStandard), 1);
  const ScoreModel odd = ScoreModel::Create(Small(Method::kStandard, 3), 1);
  GuidanceRule rule;
  EXPECT_THROW(rule.Validate(), InvalidArgument);
  rule.model = &plain;
  rule.kind = GuidanceKind::kClassifierFree;
  EXPECT_THROW(rule.Validate(), InvalidArgument);
  rule.kind = GuidanceKind::kRiskVariable;
  rule.model = &odd;
  EXPECT_THROW(rule.Validate(), InvalidArgument);
  rule.kind = GuidanceKind::kRiskRegressor;
  rule.model = &plain;
  EXPECT_THROW(rule.Validate(), InvalidArgument);
  rule.scale = -1.0;
  EXPECT_THROW(rule.Validate(), InvalidArgument);
}

TEST(GuidanceTest, RiskVariableAddsUnitPullOnRiskBlock) {
  ScoreModel joint = ScoreModel::Create(Small(Method::kRiskVariable), 1);
  ZeroHead(&joint);
  GuidanceRule rule{GuidanceKind::kRiskVariable, 2.0, &joint, nullptr};
  const ScoreFn s = GuidedScore(rule);
  const std::vector<double> z = {5.0, -1.0, 3.0, 4.0, 1.0, 1.0, 0.0, 0.0};
  std::vector<double> out(8);
  s(z, 2, 0.5, out);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
  EXPECT_NEAR(out[2], -2.0 * 0.6, 1e-15);
  EXPECT_NEAR(out[3], -2.0 * 0.8, 1e-15);
  // No pull at the origin of the risk block.
  EXPECT_EQ(out[6], 0.0);
  EXPECT_EQ(out[7], 0.0);
}

TEST(GuidanceTest, ClassifierFreeCombination) {
  const ScoreModel cond = ScoreModel::Create(Small(Method::kClassifierFree), 4);
  const double gamma = 1.5;
  GuidanceRule rule{GuidanceKind::kClassifierFree, gamma, &cond, nullptr};
  const std::vector<double> x = {0.3, -0.7};
  std::vector<double> out(2);
  GuidedScore(rule)(x, 1, 0.4, out);
  const Tensor xt = Tensor::FromVector(x);
  const Tensor s0 = cond.Forward(xt, 0.4, Tensor::FromList({0.0, 0.0, 0.0}));
  const Tensor s1 = cond.Forward(xt, 0.4, Tensor::FromList({0.0, 0.0, 1.0}));
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(out[j], (1 + gamma) * s0[j] - gamma * s1[j], 1e-12);
}

TEST(GuidanceTest, RegressorGradientMatchesFiniteDifferences) {
  RiskRegressor reg{ScoreModel::Create(Small(Method::kRiskRegressor), 6), true};
  const std::vector<double> x = {0.4, -1.1};
  std::vector<double> g(2);
  reg.GuidanceGradient(x, 1, 0.3, g);
  auto objective = [&](std::vector<double> p) {
    double s = 0.0;
    for (double v : reg.Predict(p, 1, 0.3)) s -= v;
    return s;
  };
  for (int j = 0; j < 2; ++j) {
    std::vector<double> hi = x, lo = x;
    hi[j] += 1e-6;
    lo[j] -= 1e-6;
    const double fd = (objective(hi) - objective(lo)) / 2e-6;
    EXPECT_NEAR(g[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
  const auto pred = reg.Predict(x, 1, 0.3);
  for (double p : pred) EXPECT_GT(p, 0.0);
}

TEST(GuidanceTest, UntrainedRegressorIsRejected) {
  const ScoreModel base = ScoreModel::Create(Small(Method::kStandard), 1);
  RiskRegressor reg{ScoreModel::Create(Small(Method::kRiskRegressor), 2), false};
  GuidanceRule rule{GuidanceKind::kRiskRegressor, 1.0, &base, &reg};
  SamplerConfig cfg;
  cfg.steps = 3;
  EXPECT_THROW(GuidedReverseSample(rule, SdeSpec{}, cfg, 2), PreconditionViolation);
}

TEST(GuidanceTest, ZeroScaleReproducesUnguidedSampler) {
  const SdeSpec spec;
  SamplerConfig cfg;
  cfg.steps = 40;
  cfg.seed = 5;
  const ScoreModel base = ScoreModel::Create(Small(Method::kStandard), 1);
  RiskRegressor reg{ScoreModel::Create(Small(Method::kRiskRegressor), 2), true};
  GuidanceRule rule{GuidanceKind::kRiskRegressor, 0.0, &base, &reg};
  const Tensor guided = GuidedReverseSample(rule, spec, cfg, 300);
  const Tensor plain = ReverseSample(base, spec, cfg, 300);
  EXPECT_EQ(guided, plain);
  EnergyTestOptions opt;
  opt.seed = 1;
  SamplerConfig other = cfg;
  other.seed = 6;
  EXPECT_GT(EnergyTest(guided, ReverseSample(base, spec, other, 300), opt).p_value, 0.01);
}

TEST(BaselineTrainingTest, RegressorLearnsWhereRiskLives) {
  const MixtureDraw draw = GenerateMixture(DefaultMixture(), 4000, 3);
  TrainConfig cfg;
  cfg.steps = 1500;
  cfg.batch_size = 128;
  cfg.learning_rate = 3e-3;
  TrainingTrace trace;
  const RiskRegressor reg = TrainRiskRegressor(
      ScoreModel::Create(ModelConfigFor(Method::kRiskRegressor, 2), 1), draw.data, SdeSpec{}, cfg,
      &trace);
  EXPECT_TRUE(reg.trained);
  EXPECT_EQ(trace.loss.size(), 1500u);
  // Near t = 0 the upper-right component carries risk 0.95 on average and
  // the others 0.1.
  const std::vector<double> pts = {4.0, 4.0, -4.0, 4.0, -4.0, -4.0, 4.0, -4.0};
  const auto pred = reg.Predict(pts, 4, 0.01);
  EXPECT_NEAR(pred[0], 0.95, 0.15);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(pred[2 * k], 0.1, 0.15) << k;
}

TEST(BaselineTrainingTest, RiskVariableGuidanceLowersGeneratedRisk) {
  const MixtureDraw draw = GenerateMixture(DefaultMixture(), 4000, 3);
  TrainConfig cfg;
  cfg.steps = 3000;
  cfg.batch_size = 128;
  cfg.weighting = LossWeighting::kNoiseVariance;
  ModelConfig base;
  base.hidden = {64, 64};
  const TrainResult joint = TrainRiskVariable(
      ScoreModel::Create(ModelConfigFor(Method::kRiskVariable, 2, base), 1), draw.data, SdeSpec{}, cfg);
  SamplerConfig sc;
  sc.steps = 200;
  sc.seed = 2;
  double prev = std::numeric_limits<double>::infinity();
  for (double gamma : {0.0, 1.0, 4.0}) {
    GuidanceRule rule{GuidanceKind::kRiskVariable, gamma, &joint.model, nullptr};
    const Tensor z = GuidedReverseSample(rule, SdeSpec{}, sc, 2000);
    ASSERT_EQ(z.cols(), 4u);
    double norm = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) norm += std::hypot(z.at(i, 2), z.at(i, 3)) / z.rows();
    EXPECT_LT(norm, prev) << gamma;
    prev = norm;
  }
  EXPECT_EQ(DataBlock(Tensor::Matrix(3, 4, 1.0), 2).cols(), 2u);
}

TEST(BaselineTrainingTest, StandardIgnoresRisk) {
  const MixtureDraw draw = GenerateMixture(DefaultMixture(), 200, 3);
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.batch_size = 8;
  const TrainResult a =
      TrainStandard(ScoreModel::Create(Small(Method::kStandard), 1), draw.data, SdeSpec{}, cfg);
  const TrainResult b = TrainStandard(ScoreModel::Create(Small(Method::kStandard), 1),
                                      draw.data.WithoutRisk(), SdeSpec{}, cfg);
  EXPECT_TRUE(a.model == b.model);
}

}  // namespace
}  // namespace rsde
