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

// Comparison systems: a risk-unaware diffusion model and three ways of
// conditioning generation on low risk.
//
//   risk-variable    joint model over z = x (+) r, guided by -grad ||r||
//   classifier-free  s(x, t, r) with r randomly masked; sampled with
//                    (1 + g) s(x, t, r = 0) - g s(x, t, masked)
//   risk-regressor   h(x(t), t) with softplus(h) ~ r, guided by
//                    grad_x -sum softplus(h)

#ifndef RSDE_BASELINES_H_
#define RSDE_BASELINES_H_

#include <string>
#include <vector>

#include "rsde/dataset.h"
#include "rsde/mlp.h"
#include "rsde/sampling.h"
#include "rsde/sde.h"
#include "rsde/training.h"

namespace rsde {

enum class Method { kStandard, kRiskVariable, kClassifierFree, kRiskRegressor, kRiskSensitive };

const char* MethodName(Method method);
Method ParseMethod(const std::string& name);

// Network shape for a method on D-dimensional data, starting from `base`
// (hidden widths, activation, time embedding).
ModelConfig ModelConfigFor(Method method, int dim, const ModelConfig& base = {});

TrainResult TrainStandard(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                          const TrainConfig& config);
TrainResult TrainRiskVariable(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                              const TrainConfig& config);
TrainResult TrainClassifierFree(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                                const TrainConfig& config, double mask_probability = 0.1);

struct RiskRegressor {
  ScoreModel net;
  bool trained = false;

  // softplus(h(x, t)) for `batch` rows.
  std::vector<double> Predict(std::span<const double> x, std::size_t batch, double t) const;
  // grad_x of -sum_i softplus(h_i(x, t)), batch x dim. Throws
  // PreconditionViolation if the regressor was never trained.
  void GuidanceGradient(std::span<const double> x, std::size_t batch, double t,
                        std::span<double> out) const;
};

// Square loss ||r - softplus(h(x(t), t))||^2 on clean-schedule noised
// inputs with t uniform on [guard T, T].
RiskRegressor TrainRiskRegressor(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                                 const TrainConfig& config, TrainingTrace* trace = nullptr);

enum class GuidanceKind { kRiskVariable, kClassifierFree, kRiskRegressor };

struct GuidanceRule {
  GuidanceKind kind = GuidanceKind::kClassifierFree;
  double scale = 1.0;
  // Joint model, conditional model, or base score model respectively.
  const ScoreModel* model = nullptr;
  const RiskRegressor* regressor = nullptr;

  void Validate() const;
  // Dimension of the sampled state (2D for the joint model).
  int state_dim() const;
};

ScoreFn GuidedScore(const GuidanceRule& rule);

// Samples with the guided score. For the risk-variable rule the result has
// 2D columns [x | r]; use DataBlock to drop the risk block.
Tensor GuidedReverseSample(const GuidanceRule& rule, const SdeSpec& spec,
                           const SamplerConfig& config, std::size_t count);

// First `dim` columns.
Tensor DataBlock(const Tensor& samples, int dim);

}  // namespace rsde

#endif  // RSDE_BASELINES_H_
