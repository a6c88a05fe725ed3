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

#include "rsde/baselines.h"

#include <cmath>
#include <random>

#include "rsde/error.h"
#include "rsde/rng.h"

namespace rsde {
namespace {

double Softplus(double h) { return h > 30.0 ? h : std::log1p(std::exp(h)); }
double Sigmoid(double h) { return 1.0 / (1.0 + std::exp(-h)); }

}  // namespace

const char* MethodName(Method method) {
  switch (method) {
    case Method::kStandard:
      return "standard";
    case Method::kRiskVariable:
      return "risk-variable";
    case Method::kClassifierFree:
      return "classifier-free";
    case Method::kRiskRegressor:
      return "risk-regressor";
    case Method::kRiskSensitive:
      return "risk-sensitive";
  }
  return "?";
}

Method ParseMethod(const std::string& name) {
  for (Method m : {Method::kStandard, Method::kRiskVariable, Method::kClassifierFree,
                   Method::kRiskRegressor, Method::kRiskSensitive}) {
    if (name == MethodName(m)) return m;
  }
  throw InvalidArgument("unknown method '" + name + "'");
}

ModelConfig ModelConfigFor(Method method, int dim, const ModelConfig& base) {
  ModelConfig c = base;
  c.data_dim = dim;
  c.cond_dim = 0;
  c.output_dim = -1;
  switch (method) {
    case Method::kRiskVariable:
      c.data_dim = 2 * dim;
      break;
    case Method::kClassifierFree:
      c.cond_dim = dim + 1;
      break;
    case Method::kRiskRegressor:
      // Predicts risk, not a score.
      c.precondition.enabled = false;
      break;
    default:
      break;
  }
  return c;
}

TrainResult TrainStandard(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                          const TrainConfig& config) {
  TrainOptions opt;
  opt.objective = Objective::kStandard;
  return Train(std::move(init), data, spec, config, opt);
}

TrainResult TrainRiskVariable(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                              const TrainConfig& config) {
  TrainOptions opt;
  opt.objective = Objective::kStandard;
  return Train(std::move(init), data.Concatenated(), spec, config, opt);
}

TrainResult TrainClassifierFree(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                                const TrainConfig& config, double mask_probability) {
  TrainOptions opt;
  opt.objective = Objective::kClassifierFree;
  opt.mask_probability = mask_probability;
  return Train(std::move(init), data, spec, config, opt);
}

std::vector<double> RiskRegressor::Predict(std::span<const double> x, std::size_t batch,
                                           double t) const {
  std::vector<double> tv(batch, t);
  std::vector<double> h;
  net.ForwardBatch(x, tv, {}, batch, &h);
  for (auto& v : h) v = Softplus(v);
  return h;
}

void RiskRegressor::GuidanceGradient(std::span<const double> x, std::size_t batch, double t,
                                     std::span<double> out) const {
  if (!trained) throw PreconditionViolation("risk regressor has not been trained");
  std::vector<double> tv(batch, t);
  ForwardPass pass(net, x, tv, {}, batch);
  const auto h = pass.output();
  std::vector<double> d_out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) d_out[i] = -Sigmoid(h[i]);
  std::vector<double> dx;
  pass.Backward(d_out, nullptr, &dx);
  std::copy(dx.begin(), dx.end(), out.begin());
}

RiskRegressor TrainRiskRegressor(ScoreModel init, const Dataset& data, const SdeSpec& spec,
                                 const TrainConfig& config, TrainingTrace* trace) {
  config.Validate();
  if (data.empty()) throw InvalidArgument("training set is empty");
  const int d = data.dim();
  if (init.config().data_dim != d || init.config().out_width() != d ||
      init.config().cond_dim != 0) {
    throw InvalidArgument("regressor must map D inputs to D outputs");
  }
  RiskRegressor reg{std::move(init), false};
  AdamOptions adam;
  adam.learning_rate = config.learning_rate;
  OptimizerState state = OptimizerState::Create(reg.net, adam);
  ParameterSet grads = reg.net.ZeroLike();
  Rng rng = MakeRng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  std::vector<double> x(bs * d), t(bs), target(bs * d), d_out(bs * d);
  const double lo = config.guard * spec.horizon;
  for (int step = 0; step < config.steps; ++step) {
    double t_sum = 0.0;
    for (std::size_t b = 0; b < bs; ++b) {
      const std::size_t idx = pick(rng);
      t[b] = lo + Uniform01(rng) * (spec.horizon - lo);
      t_sum += t[b];
      const BaseSchedule base = BaseSchedules(spec, t[b]);
      const double v0 = std::sqrt(base.v0_sq);
      const auto x0 = data.x_row(idx);
      const auto r = data.r_row(idx);
      for (int j = 0; j < d; ++j) {
        x[b * d + j] = base.u * x0[j] + v0 * StandardNormal(rng);
        target[b * d + j] = r[j];
      }
    }
    ForwardPass pass(reg.net, x, t, {}, bs);
    const auto h = pass.output();
    double loss = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double res = Softplus(h[i]) - target[i];
      loss += res * res;
      d_out[i] = 2.0 * res * Sigmoid(h[i]) / static_cast<double>(bs);
    }
    grads.SetZero();
    pass.Backward(d_out, &grads, nullptr);
    AdamStep(&reg.net, grads, &state);
    if (trace) {
      trace->loss.push_back(loss / static_cast<double>(bs));
      trace->mean_t.push_back(t_sum / static_cast<double>(bs));
      trace->drawn += bs;
    }
  }
  reg.trained = true;
  return reg;
}

void GuidanceRule::Validate() const {
  if (!(scale >= 0.0)) throw InvalidArgument("guidance scale must be nonnegative");
  if (model == nullptr) throw InvalidArgument("guidance rule needs a score model");
  const ModelConfig& c = model->config();
  switch (kind) {
    case GuidanceKind::kRiskVariable:
      if (c.cond_dim != 0 || c.data_dim % 2 != 0) {
        throw InvalidArgument("risk-variable guidance needs a joint model over [x | r]");
      }
      break;
    case GuidanceKind::kClassifierFree:
      if (c.cond_dim != c.data_dim + 1) {
        throw InvalidArgument("classifier-free guidance needs a model conditioned on [r | flag]");
      }
      break;
    case GuidanceKind::kRiskRegressor:
      if (regressor == nullptr) throw InvalidArgument("risk-regressor guidance needs a regressor");
      if (c.cond_dim != 0 || regressor->net.config().data_dim != c.data_dim) {
        throw InvalidArgument("regressor and score model dimensions differ");
      }
      break;
  }
}

int GuidanceRule::state_dim() const { return model->config().data_dim; }

ScoreFn GuidedScore(const GuidanceRule& rule) {
  rule.Validate();
  const ScoreModel& model = *rule.model;
  const double gamma = rule.scale;
  switch (rule.kind) {
    case GuidanceKind::kRiskVariable:
      return [&model, gamma](std::span<const double> x, std::size_t batch, double t,
                             std::span<double> out) {
        const int dz = model.config().data_dim;
        const int d = dz / 2;
        std::vector<double> tv(batch, t), s;
        model.ForwardBatch(x, tv, {}, batch, &s);
        for (std::size_t i = 0; i < batch; ++i) {
          const double* r = x.data() + i * dz + d;
          double norm = 0.0;
          for (int j = 0; j < d; ++j) norm += r[j] * r[j];
          norm = std::sqrt(norm);
          for (int j = 0; j < dz; ++j) {
            double g = 0.0;
            if (j >= d && norm > 0.0) g = -r[j - d] / norm;
            out[i * dz + j] = s[i * dz + j] + gamma * g;
          }
        }
      };
    case GuidanceKind::kClassifierFree:
      return [&model, gamma](std::span<const double> x, std::size_t batch, double t,
                             std::span<double> out) {
        const int d = model.config().data_dim;
        const int cd = model.config().cond_dim;
        std::vector<double> tv(batch, t), cond(batch * cd, 0.0), s0, s1;
        model.ForwardBatch(x, tv, cond, batch, &s0);
        if (gamma == 0.0) {
          std::copy(s0.begin(), s0.end(), out.begin());
          return;
        }
        for (std::size_t i = 0; i < batch; ++i) cond[i * cd + d] = 1.0;
        model.ForwardBatch(x, tv, cond, batch, &s1);
        for (std::size_t i = 0; i < s0.size(); ++i) out[i] = (1.0 + gamma) * s0[i] - gamma * s1[i];
      };
    case GuidanceKind::kRiskRegressor: {
      const RiskRegressor& reg = *rule.regressor;
      return [&model, &reg, gamma](std::span<const double> x, std::size_t batch, double t,
                                   std::span<double> out) {
        std::vector<double> tv(batch, t), s;
        model.ForwardBatch(x, tv, {}, batch, &s);
        if (gamma == 0.0) {
          std::copy(s.begin(), s.end(), out.begin());
          return;
        }
        std::vector<double> g(s.size());
        reg.GuidanceGradient(x, batch, t, g);
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] + gamma * g[i];
      };
    }
  }
  throw InternalError("unhandled guidance kind");
}

Tensor GuidedReverseSample(const GuidanceRule& rule, const SdeSpec& spec,
                           const SamplerConfig& config, std::size_t count) {
  return ReverseSample(GuidedScore(rule), rule.state_dim(), spec, config, count);
}

Tensor DataBlock(const Tensor& samples, int dim) {
  const std::size_t n = samples.rows();
  const std::size_t cols = samples.cols();
  if (static_cast<std::size_t>(dim) > cols) throw InvalidArgument("block wider than samples");
  Tensor out = Tensor::Matrix(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) out.at(i, j) = samples.at(i, j);
  }
  return out;
}

}  // namespace rsde
