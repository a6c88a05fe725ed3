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

// Reverse-time Euler-Maruyama at zero risk:
//
//   x(t_{i-1}) = x(t_i) - [f(t_i) x - g(t_i)^2 s(x, t_i)] dt + g(t_i) sqrt(dt) z

#ifndef RSDE_SAMPLING_H_
#define RSDE_SAMPLING_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rsde/mlp.h"
#include "rsde/sde.h"
#include "rsde/tensor.h"

namespace rsde {

// Evaluates the score for `batch` rows of x (batch x dim) at a common time t.
using ScoreFn = std::function<void(std::span<const double> x, std::size_t batch, double t,
                                   std::span<double> out)>;

struct SamplerConfig {
  // Number of Euler-Maruyama steps; the uniform grid has steps + 1 points.
  int steps = 1000;
  // Optional explicit grid, strictly decreasing from T to 0.
  std::vector<double> grid;
  std::uint64_t seed = 0;
  // Chains advanced together per score call.
  std::size_t block = 500;
  int threads = 1;
  // Receives every (t, risk) pair at which a coefficient is evaluated.
  std::function<void(double t, std::span<const double> risk)> on_coefficients;

  void Validate() const;
};

// Time points from T down to 0.
std::vector<double> TimeGrid(const SdeSpec& spec, const SamplerConfig& config);

ScoreFn ModelScore(const ScoreModel& model);

// `count` independent chains in `dim` dimensions; chain c uses the random
// stream MixSeed(seed, c), so results do not depend on block size or thread
// count. Throws NumericalFailure with the step index on non-finite states.
Tensor ReverseSample(const ScoreFn& score, int dim, const SdeSpec& spec,
                     const SamplerConfig& config, std::size_t count);
Tensor ReverseSample(const ScoreModel& model, const SdeSpec& spec, const SamplerConfig& config,
                     std::size_t count);

// One chain.
Tensor ReverseSampleOne(const ScoreModel& model, const SdeSpec& spec, const SamplerConfig& config);

}  // namespace rsde

#endif  // RSDE_SAMPLING_H_
