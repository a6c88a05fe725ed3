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

#include "rsde/sde.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsde/error.h"

namespace rsde {
namespace {

void CheckTime(const SdeSpec& spec, double t) {
  if (!(t >= 0.0 && t <= spec.horizon)) {
    throw InvalidArgument("time " + std::to_string(t) + " outside [0, " +
                          std::to_string(spec.horizon) + "]");
  }
}

double MaxSquaredRisk(std::span<const double> risk) {
  double m = 0.0;
  for (double r : risk) {
    if (!(r >= 0.0)) throw InvalidArgument("risk entries must be nonnegative");
    m = std::max(m, r * r);
  }
  return m;
}

}  // namespace

const char* SdeFamilyName(SdeFamily family) {
  return family == SdeFamily::kVp ? "vp" : "ve";
}

SdeFamily ParseSdeFamily(const std::string& name) {
  if (name == "vp" || name == "VP") return SdeFamily::kVp;
  if (name == "ve" || name == "VE") return SdeFamily::kVe;
  throw InvalidArgument("unknown SDE family '" + name + "'");
}

void SdeSpec::Validate() const {
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  if (dim <= 0) throw InvalidArgument("dimension must be positive");
  if (family == SdeFamily::kVp) {
    if (!(beta_min > 0.0 && beta_max > 0.0)) {
      throw InvalidArgument("beta schedule must stay positive on [0, T]");
    }
  } else {
    if (!(sigma_min > 0.0 && sigma_max > sigma_min)) {
      throw InvalidArgument("sigma schedule must be positive and strictly increasing");
    }
  }
}

double Beta(const SdeSpec& spec, double t) {
  return spec.beta_min + (spec.beta_max - spec.beta_min) * t / spec.horizon;
}

double IntegratedBeta(const SdeSpec& spec, double t) {
  return spec.beta_min * t + 0.5 * (spec.beta_max - spec.beta_min) * t * t / spec.horizon;
}

double Sigma(const SdeSpec& spec, double t) {
  return spec.sigma_min * std::pow(spec.sigma_max / spec.sigma_min, t / spec.horizon);
}

BaseSchedule BaseSchedules(const SdeSpec& spec, double t) {
  CheckTime(spec, t);
  if (spec.family == SdeFamily::kVp) {
    const double b = IntegratedBeta(spec, t);
    return {std::exp(-0.5 * b), -std::expm1(-b)};
  }
  const double s = Sigma(spec, t);
  return {1.0, s * s - spec.sigma_min * spec.sigma_min};
}

bool RiskCoefficients::AllStable() const {
  return std::all_of(stable.begin(), stable.end(), [](char s) { return s != 0; });
}

RiskCoefficients CoefficientsFromDeduction(const SdeSpec& spec, double t,
                                           std::span<const double> deduction) {
  const BaseSchedule base = BaseSchedules(spec, t);
  RiskCoefficients c;
  c.u = base.u;
  c.v0_sq = base.v0_sq;
  c.v.resize(deduction.size());
  c.v_sq.resize(deduction.size());
  c.stable.resize(deduction.size());
  for (std::size_t j = 0; j < deduction.size(); ++j) {
    const bool stable = base.v0_sq >= deduction[j];
    c.stable[j] = stable ? 1 : 0;
    c.v_sq[j] = stable ? base.v0_sq - deduction[j] : 0.0;
    c.v[j] = std::sqrt(c.v_sq[j]);
  }
  return c;
}

RiskCoefficients ComputeRiskCoefficients(const SdeSpec& spec, std::span<const double> risk,
                                         double t) {
  CheckTime(spec, t);
  const BaseSchedule base = BaseSchedules(spec, t);
  std::vector<double> deduction(risk.size());
  for (std::size_t j = 0; j < risk.size(); ++j) {
    if (!(risk[j] >= 0.0)) throw InvalidArgument("risk entries must be nonnegative");
    deduction[j] = (risk[j] * risk[j]) * (base.u * base.u);
  }
  return CoefficientsFromDeduction(spec, t, deduction);
}

double Drift(const SdeSpec& spec, double t) {
  CheckTime(spec, t);
  return spec.family == SdeFamily::kVp ? -0.5 * Beta(spec, t) : 0.0;
}

double BaseDiffusion(const SdeSpec& spec, double t) {
  CheckTime(spec, t);
  if (spec.family == SdeFamily::kVp) return std::sqrt(Beta(spec, t));
  const double rate = 2.0 * std::log(spec.sigma_max / spec.sigma_min) / spec.horizon;
  return Sigma(spec, t) * std::sqrt(rate);
}

std::vector<double> Diffusion(const SdeSpec& spec, std::span<const double> risk, double t) {
  const RiskCoefficients c = ComputeRiskCoefficients(spec, risk, t);
  const double g = BaseDiffusion(spec, t);
  std::vector<double> out(risk.size());
  for (std::size_t j = 0; j < risk.size(); ++j) out[j] = c.stable[j] ? g : 0.0;
  return out;
}

StabilityInterval ComputeStabilityInterval(const SdeSpec& spec,
                                           std::span<const double> risk) {
  const double m = MaxSquaredRisk(risk);
  StabilityInterval interval{0.0, spec.horizon, false};
  if (m == 0.0) return interval;
  double t = 0.0;
  if (spec.family == SdeFamily::kVp) {
    // exp(B(t)) - 1 >= m  <=>  a t^2 + b t >= log1p(m).
    const double a = 0.5 * (spec.beta_max - spec.beta_min) / spec.horizon;
    const double b = spec.beta_min;
    const double c = std::log1p(m);
    if (a == 0.0) {
      t = c / b;
    } else {
      const double disc = std::sqrt(b * b + 4.0 * a * c);
      t = b >= 0.0 ? 2.0 * c / (b + disc) : (disc - b) / (2.0 * a);
    }
  } else {
    // sigma(t)^2 >= sigma_min^2 + m.
    t = spec.horizon * 0.5 * std::log1p(m / (spec.sigma_min * spec.sigma_min)) /
        std::log(spec.sigma_max / spec.sigma_min);
  }
  if (!(t <= spec.horizon)) {
    interval.empty = true;
    interval.t_star = spec.horizon;
    return interval;
  }
  interval.t_star = t;
  return interval;
}

StabilityInterval SolveStabilityInterval(const SdeSpec& spec,
                                         const std::function<bool(double)>& stable_at,
                                         double tolerance) {
  StabilityInterval interval{0.0, spec.horizon, false};
  if (stable_at(0.0)) return interval;
  if (!stable_at(spec.horizon)) {
    interval.empty = true;
    interval.t_star = spec.horizon;
    return interval;
  }
  double lo = 0.0;
  double hi = spec.horizon;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (stable_at(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  interval.t_star = hi;
  return interval;
}

Tensor ForwardKernelSample(const SdeSpec& spec, std::span<const double> risk, double t,
                           std::span<const double> x0, Rng& rng) {
  if (risk.size() != x0.size()) {
    throw InvalidArgument("risk and sample dimensions differ");
  }
  const RiskCoefficients c = ComputeRiskCoefficients(spec, risk, t);
  std::vector<double> out(x0.size());
  for (std::size_t j = 0; j < x0.size(); ++j) {
    out[j] = c.u * x0[j] + c.v[j] * StandardNormal(rng);
  }
  return Tensor::FromVector(std::move(out));
}

}  // namespace rsde
