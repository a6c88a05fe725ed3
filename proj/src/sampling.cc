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

#include "rsde/sampling.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "rsde/error.h"
#include "rsde/rng.h"

namespace rsde {
namespace {

struct StepCoefficients {
  double t;
  double dt;
  double f;
  double g;
};

std::vector<StepCoefficients> Coefficients(const SdeSpec& spec, const SamplerConfig& config,
                                           int dim) {
  const std::vector<double> grid = TimeGrid(spec, config);
  const std::vector<double> zero(dim, 0.0);
  std::vector<StepCoefficients> steps;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t = grid[k];
    if (config.on_coefficients) config.on_coefficients(t, zero);
    const double g = Diffusion(spec, zero, t)[0];
    steps.push_back({t, t - grid[k + 1], Drift(spec, t), g});
  }
  return steps;
}

void RunBlock(const ScoreFn& score, int dim, const SamplerConfig& config,
              const std::vector<StepCoefficients>& steps, std::size_t first, std::size_t count,
              double prior_sd, double* out) {
  std::vector<Rng> rngs;
  rngs.reserve(count);
  for (std::size_t c = 0; c < count; ++c) rngs.push_back(MakeRng(config.seed, first + c));
  const std::size_t n = count * dim;
  std::vector<double> x(n), s(n);
  for (std::size_t c = 0; c < count; ++c) {
    for (int j = 0; j < dim; ++j) x[c * dim + j] = prior_sd * StandardNormal(rngs[c]);
  }
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const StepCoefficients& st = steps[k];
    score(x, count, st.t, s);
    const double g2 = st.g * st.g;
    const double noise = st.g * std::sqrt(st.dt);
    for (std::size_t c = 0; c < count; ++c) {
      for (int j = 0; j < dim; ++j) {
        const std::size_t i = c * dim + j;
        const double drift = st.f * x[i] - g2 * s[i];
        x[i] = x[i] - drift * st.dt + noise * StandardNormal(rngs[c]);
        if (!std::isfinite(x[i])) {
          throw NumericalFailure("non-finite sampler state at step " + std::to_string(k + 1) +
                                 " (t = " + std::to_string(st.t) + ")");
        }
      }
    }
  }
  std::copy(x.begin(), x.end(), out);
}

}  // namespace

void SamplerConfig::Validate() const {
  if (grid.empty() && steps < 1) throw InvalidArgument("sampler needs at least one step");
  if (block == 0) throw InvalidArgument("block size must be positive");
  if (threads < 1) throw InvalidArgument("thread count must be positive");
}

std::vector<double> TimeGrid(const SdeSpec& spec, const SamplerConfig& config) {
  if (!config.grid.empty()) {
    const auto& g = config.grid;
    if (g.size() < 2 || g.front() != spec.horizon || g.back() != 0.0) {
      throw InvalidArgument("custom time grid must run from T to 0");
    }
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!(g[i] < g[i - 1])) throw InvalidArgument("custom time grid must strictly decrease");
    }
    return g;
  }
  const int m = config.steps;
  std::vector<double> g(m + 1);
  for (int i = 0; i <= m; ++i) g[i] = spec.horizon * static_cast<double>(m - i) / m;
  g[0] = spec.horizon;
  g[m] = 0.0;
  return g;
}

ScoreFn ModelScore(const ScoreModel& model) {
  if (model.config().cond_dim != 0) {
    throw InvalidArgument("conditional models need a guidance rule to sample");
  }
  return [&model](std::span<const double> x, std::size_t batch, double t, std::span<double> out) {
    std::vector<double> tv(batch, t);
    std::vector<double> res;
    model.ForwardBatch(x, tv, {}, batch, &res);
    std::copy(res.begin(), res.end(), out.begin());
  };
}

Tensor ReverseSample(const ScoreFn& score, int dim, const SdeSpec& spec,
                     const SamplerConfig& config, std::size_t count) {
  config.Validate();
  spec.Validate();
  if (dim <= 0) throw InvalidArgument("sample dimension must be positive");
  const auto steps = Coefficients(spec, config, dim);
  const double prior_sd =
      spec.family == SdeFamily::kVp ? 1.0 : std::sqrt(BaseSchedules(spec, spec.horizon).v0_sq);
  Tensor out = Tensor::Matrix(count, dim);
  const std::size_t blocks = (count + config.block - 1) / config.block;
  const int threads = static_cast<int>(
      std::min<std::size_t>(config.threads, std::max<std::size_t>(blocks, 1)));
  auto work = [&](int tid) {
    for (std::size_t b = tid; b < blocks; b += threads) {
      const std::size_t first = b * config.block;
      const std::size_t n = std::min(config.block, count - first);
      RunBlock(score, dim, config, steps, first, n, prior_sd,
               out.data().data() + first * dim);
    }
  };
  if (threads <= 1) {
    work(0);
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex mu;
  for (int tid = 0; tid < threads; ++tid) {
    pool.emplace_back([&, tid] {
      try {
        work(tid);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

Tensor ReverseSample(const ScoreModel& model, const SdeSpec& spec, const SamplerConfig& config,
                     std::size_t count) {
  return ReverseSample(ModelScore(model), model.config().data_dim, spec, config, count);
}

Tensor ReverseSampleOne(const ScoreModel& model, const SdeSpec& spec,
                        const SamplerConfig& config) {
  const Tensor s = ReverseSample(model, spec, config, 1);
  return Tensor::FromVector(s.values());
}

}  // namespace rsde
