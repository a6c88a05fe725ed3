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

#include "rsde/training.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "rsde/error.h"

namespace rsde {
namespace {

// Fills v(r, t) for one sample into v; returns false if any entry is below
// the floor.
bool FillRiskScale(const BaseSchedule& base, const DeductionProfile& profile, double v_floor,
                   std::vector<double>* deduction, std::vector<double>* v) {
  profile.Evaluate(base.u, *deduction);
  bool ok = true;
  for (std::size_t j = 0; j < v->size(); ++j) {
    const double vsq = base.v0_sq >= (*deduction)[j] ? base.v0_sq - (*deduction)[j] : 0.0;
    (*v)[j] = std::sqrt(vsq);
    if ((*v)[j] < v_floor) {
      ok = false;
      (*v)[j] = v_floor;
    }
  }
  return ok;
}

}  // namespace

const char* LossWeightingName(LossWeighting w) {
  switch (w) {
    case LossWeighting::kUniform:
      return "uniform";
    case LossWeighting::kNoiseVariance:
      return "noise-variance";
    case LossWeighting::kRiskVariance:
      return "risk-variance";
  }
  return "?";
}

LossWeighting ParseLossWeighting(const std::string& name) {
  if (name == "uniform") return LossWeighting::kUniform;
  if (name == "noise-variance") return LossWeighting::kNoiseVariance;
  if (name == "risk-variance") return LossWeighting::kRiskVariance;
  throw InvalidArgument("unknown loss weighting '" + name + "'");
}

void TrainConfig::Validate() const {
  if (steps < 0) throw InvalidArgument("steps must be nonnegative");
  if (batch_size < 1) throw InvalidArgument("batch size must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(p_force >= 0.0 && p_force <= 1.0)) throw InvalidArgument("p_force must lie in [0, 1]");
  if (!(v_floor > 0.0)) throw InvalidArgument("v_floor must be positive");
  if (!(guard >= 0.0 && guard < 1.0)) throw InvalidArgument("guard must lie in [0, 1)");
}

void TrainingTrace::WriteCsv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << "step,loss,mean_t\n";
  char buf[96];
  for (std::size_t i = 0; i < loss.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.6f\n", i + 1, loss[i], mean_t[i]);
    out << buf;
  }
}

std::optional<double> SampleTrainingTime(const StabilityInterval& interval, double p_force,
                                         double horizon, double guard, Rng& rng, bool* forced) {
  const double f = Uniform01(rng);
  const double a = Uniform01(rng);
  const bool force = f < p_force;
  if (forced) *forced = force;
  const double delta = guard * horizon;
  if (!force && interval.empty) return std::nullopt;
  const double lo = force ? delta : interval.t_star + delta;
  if (lo >= horizon) return std::nullopt;
  return lo + a * (horizon - lo);
}

LossResult RiskFreeLoss(const ScoreModel& model, const SdeSpec& spec, std::span<const double> x0,
                        std::span<const double> risk, double t, Rng& rng, double v_floor,
                        bool forced) {
  const std::size_t d = x0.size();
  if (risk.size() != d || static_cast<std::size_t>(model.config().data_dim) != d) {
    throw InvalidArgument("sample, risk and model dimensions differ");
  }
  const RiskCoefficients c = ComputeRiskCoefficients(spec, risk, t);
  LossResult res;
  res.eta.resize(d);
  Batch b;
  b.size = 1;
  b.t = {t};
  b.weight = {1.0};
  b.x.resize(d);
  b.target.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    double v = c.v[j];
    if (v < v_floor) {
      if (!forced) {
        throw PreconditionViolation("v(r, t) below floor at t = " + std::to_string(t) +
                                    "; time lies outside the stability interval");
      }
      v = v_floor;
    }
    res.eta[j] = StandardNormal(rng);
    b.x[j] = c.u * x0[j] + v * res.eta[j];
    b.target[j] = -res.eta[j] / v;
  }
  res.grads = model.ZeroLike();
  res.loss = LossAndGrads(model, b, &res.grads);
  return res;
}

RiskSchedule::RiskSchedule(const SdeSpec& spec, const Dataset& data, NoiseKind noise,
                           const DeductionOptions& options) {
  const std::size_t n = data.size();
  profiles_.resize(n);
  intervals_.resize(n);
  NoiseModel model;
  model.kind = noise;
  if (noise == NoiseKind::kCustom) {
    throw InvalidArgument("custom noise laws need a NoiseModel with callbacks");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto rr = data.r_row(i);
    model.risk.assign(rr.begin(), rr.end());
    profiles_[i] = DeductionProfile::ForNoise(model, options);
    intervals_[i] = noise == NoiseKind::kGaussian ? ComputeStabilityInterval(spec, model.risk)
                                                  : GeneralStabilityInterval(spec, profiles_[i]);
  }
}

std::size_t RiskSchedule::empty_count() const {
  std::size_t c = 0;
  for (const auto& iv : intervals_) c += iv.empty ? 1 : 0;
  return c;
}

TrainResult Train(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                  const TrainConfig& config, const TrainOptions& options) {
  config.Validate();
  spec.Validate();
  if (data.empty()) throw InvalidArgument("training set is empty");
  const int d = data.dim();
  const ModelConfig& mc = init.config();
  if (mc.data_dim != d || mc.out_width() != d) {
    throw InvalidArgument("model data dimension " + std::to_string(mc.data_dim) +
                          " differs from dataset dimension " + std::to_string(d));
  }
  const bool cfg_free = options.objective == Objective::kClassifierFree;
  const int cond_dim = cfg_free ? d + 1 : 0;
  if (mc.cond_dim != cond_dim) {
    throw InvalidArgument("model conditioning width must be " + std::to_string(cond_dim));
  }
  if (cfg_free && !(options.mask_probability > 0.0 && options.mask_probability < 1.0)) {
    throw InvalidArgument("mask probability must lie in (0, 1)");
  }

  const bool risky = options.objective == Objective::kRiskSensitive;
  const Dataset zero = risky ? Dataset() : data.WithoutRisk();
  const RiskSchedule schedule(spec, risky ? data : zero, options.noise, options.deduction);
  if (schedule.empty_count() == data.size() && config.p_force == 0.0) {
    throw ConfigurationError("every sample has an empty stability interval");
  }

  TrainResult result{std::move(init), {}};
  ScoreModel& model = result.model;
  AdamOptions adam;
  adam.learning_rate = config.learning_rate;
  OptimizerState state = OptimizerState::Create(model, adam);
  ParameterSet grads = model.ZeroLike();

  Rng rng = MakeRng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  Batch batch;
  batch.size = bs;
  batch.x.resize(bs * d);
  batch.t.resize(bs);
  batch.cond.resize(bs * cond_dim);
  batch.target.resize(bs * d);
  batch.weight.resize(bs);
  if (config.weighting == LossWeighting::kRiskVariance) batch.entry_weight.resize(bs * d);
  std::vector<double> v(d), deduction(d), eta(d);
  result.trace.loss.reserve(config.steps);
  result.trace.mean_t.reserve(config.steps);

  for (int step = 0; step < config.steps; ++step) {
    double t_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < bs; ++b) {
      const std::size_t idx = pick(rng);
      bool forced = false;
      const auto t = SampleTrainingTime(schedule.interval(idx), config.p_force, spec.horizon,
                                        config.guard, rng, &forced);
      bool masked = false;
      if (cfg_free) masked = Uniform01(rng) < options.mask_probability;
      for (int j = 0; j < d; ++j) eta[j] = StandardNormal(rng);
      ++result.trace.drawn;
      const auto x0 = data.x_row(idx);
      double* xb = batch.x.data() + b * d;
      double* yb = batch.target.data() + b * d;
      if (!t) {
        ++result.trace.skipped;
        batch.t[b] = spec.horizon;
        batch.weight[b] = 0.0;
        for (int j = 0; j < d; ++j) {
          xb[j] = x0[j];
          yb[j] = 0.0;
        }
        if (!batch.entry_weight.empty()) std::fill_n(batch.entry_weight.data() + b * d, d, 0.0);
        continue;
      }
      const BaseSchedule base = BaseSchedules(spec, *t);
      const bool ok = FillRiskScale(base, schedule.profile(idx), config.v_floor, &deduction, &v);
      if (!ok && !forced) {
        throw PreconditionViolation("v(r, t) below floor at t = " + std::to_string(*t) +
                                    " for sample " + std::to_string(idx));
      }
      batch.t[b] = *t;
      for (int j = 0; j < d; ++j) {
        xb[j] = base.u * x0[j] + v[j] * eta[j];
        yb[j] = -eta[j] / v[j];
      }
      switch (config.weighting) {
        case LossWeighting::kUniform:
          batch.weight[b] = 1.0;
          break;
        case LossWeighting::kNoiseVariance:
          batch.weight[b] = base.v0_sq;
          break;
        case LossWeighting::kRiskVariance:
          batch.weight[b] = 1.0;
          for (int j = 0; j < d; ++j) batch.entry_weight[b * d + j] = v[j] * v[j];
          break;
      }
      if (cfg_free) {
        double* cb = batch.cond.data() + b * cond_dim;
        const auto rr = data.r_row(idx);
        for (int j = 0; j < d; ++j) cb[j] = masked ? 0.0 : rr[j];
        cb[d] = masked ? 1.0 : 0.0;
      }
      t_sum += *t;
      ++used;
    }
    const double loss = LossAndGrads(model, batch, &grads);
    AdamStep(&model, grads, &state);
    result.trace.loss.push_back(loss);
    result.trace.mean_t.push_back(used ? t_sum / used : 0.0);
    if (options.on_step) options.on_step(step, loss);
  }
  return result;
}

}  // namespace rsde
