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

// Risk-free denoising score matching. Each sample is diffused only at times
// inside its stability interval, where
//
//   x(t) = u(t) x0 + v(r, t) eta,   target = -eta / v(r, t)
//
// has the same law as the clean process, so regressing the score network on
// the target trains the clean score from corrupted data.

#ifndef RSDE_TRAINING_H_
#define RSDE_TRAINING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rsde/dataset.h"
#include "rsde/mlp.h"
#include "rsde/noise.h"
#include "rsde/rng.h"
#include "rsde/sde.h"

namespace rsde {

enum class LossWeighting {
  kUniform,
  // lambda(t) = v0(t)^2
  kNoiseVariance,
  // Per-entry v(r, t)^2; the minimizer is unchanged.
  kRiskVariance,
};

const char* LossWeightingName(LossWeighting w);
LossWeighting ParseLossWeighting(const std::string& name);

struct TrainConfig {
  int steps = 20000;
  int batch_size = 256;
  double learning_rate = 1e-3;
  LossWeighting weighting = LossWeighting::kUniform;
  // Probability that a draw ignores the stability interval.
  double p_force = 0.0;
  double v_floor = 1e-5;
  // Times are drawn from [t_star + guard * T, T].
  double guard = 1e-4;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct TrainingTrace {
  std::vector<double> loss;
  std::vector<double> mean_t;
  std::size_t drawn = 0;
  std::size_t skipped = 0;

  double skipped_fraction() const {
    return drawn == 0 ? 0.0 : static_cast<double>(skipped) / static_cast<double>(drawn);
  }
  void WriteCsv(const std::string& path) const;
};

// Uniform draw from [t_star + guard T, T], or from [guard T, T] when forced
// (probability p_force). Returns nullopt when the interval is empty and the
// draw is not forced. Consumes the same random numbers in every case.
std::optional<double> SampleTrainingTime(const StabilityInterval& interval, double p_force,
                                         double horizon, double guard, Rng& rng,
                                         bool* forced = nullptr);

struct LossResult {
  double loss = 0.0;
  ParameterSet grads;
  std::vector<double> eta;
};

// Single-sample risk-free loss with Gaussian risk. Throws
// PreconditionViolation if some v(r, t) entry falls below v_floor and the
// draw is not forced; forced draws are floored.
LossResult RiskFreeLoss(const ScoreModel& model, const SdeSpec& spec, std::span<const double> x0,
                        std::span<const double> risk, double t, Rng& rng, double v_floor = 1e-5,
                        bool forced = false);

// Per-sample variance deductions and stability intervals for a dataset.
class RiskSchedule {
 public:
  RiskSchedule(const SdeSpec& spec, const Dataset& data, NoiseKind noise,
               const DeductionOptions& options = {});

  std::size_t size() const { return intervals_.size(); }
  const StabilityInterval& interval(std::size_t i) const { return intervals_[i]; }
  const DeductionProfile& profile(std::size_t i) const { return profiles_[i]; }
  std::size_t empty_count() const;

 private:
  std::vector<DeductionProfile> profiles_;
  std::vector<StabilityInterval> intervals_;
};

enum class Objective {
  kRiskSensitive,
  // Ignores risk; equivalent to kRiskSensitive on a zero-risk dataset.
  kStandard,
  // Clean schedule with [r | mask flag] conditioning, r masked with
  // probability mask_probability.
  kClassifierFree,
};

struct TrainOptions {
  Objective objective = Objective::kRiskSensitive;
  NoiseKind noise = NoiseKind::kGaussian;
  DeductionOptions deduction;
  double mask_probability = 0.1;
  // Called after every optimizer step.
  std::function<void(int step, double loss)> on_step;
};

struct TrainResult {
  ScoreModel model;
  TrainingTrace trace;
};

// Runs config.steps Adam updates from `init`. Throws ConfigurationError when
// every sample would be skipped, InvalidArgument on shape mismatch.
TrainResult Train(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                  const TrainConfig& config, const TrainOptions& options = {});

}  // namespace rsde

#endif  // RSDE_TRAINING_H_
