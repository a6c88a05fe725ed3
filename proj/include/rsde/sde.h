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

// Base diffusion schedules and risk-adjusted coefficients.
//
// A base SDE has a forward kernel N(u(t) x0, v0(t)^2 I). For a sample whose
// entries carry Gaussian corruption of standard deviation r, the
// risk-sensitive process keeps u(t) and uses
//
//   v(r, t)^2 = max(v0(t)^2 - r^2 u(t)^2, 0)
//
// so that u (x0 + eps) + v eta has the same law as u x0 + v0 eta whenever
// v0^2 >= r^2 u^2 (the entry is "stable"). More general corruption replaces
// r^2 u^2 by a variance deduction Psi(u, r); see noise.h.

#ifndef RSDE_SDE_H_
#define RSDE_SDE_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rsde/rng.h"
#include "rsde/tensor.h"

namespace rsde {

enum class SdeFamily { kVp, kVe };

const char* SdeFamilyName(SdeFamily family);
SdeFamily ParseSdeFamily(const std::string& name);

struct SdeSpec {
  SdeFamily family = SdeFamily::kVp;
  double horizon = 1.0;
  // VP: beta(t) = beta_min + (beta_max - beta_min) t / T.
  double beta_min = 0.1;
  double beta_max = 20.0;
  // VE: sigma(t) = sigma_min (sigma_max / sigma_min)^(t / T).
  double sigma_min = 0.01;
  double sigma_max = 50.0;
  int dim = 2;

  // Throws InvalidArgument when the schedule violates its invariants.
  void Validate() const;
};

double Beta(const SdeSpec& spec, double t);
// Integral of beta over [0, t].
double IntegratedBeta(const SdeSpec& spec, double t);
double Sigma(const SdeSpec& spec, double t);

struct BaseSchedule {
  double u = 1.0;
  double v0_sq = 0.0;
};

// Clean forward kernel scale and variance. Throws InvalidArgument when t is
// outside [0, T].
BaseSchedule BaseSchedules(const SdeSpec& spec, double t);

struct RiskCoefficients {
  double u = 1.0;
  double v0_sq = 0.0;
  std::vector<double> v;
  std::vector<double> v_sq;
  // stable[j] != 0 iff v0^2 >= deduction_j.
  std::vector<char> stable;

  bool AllStable() const;
};

// Gaussian-risk coefficients. Throws InvalidArgument for negative risk.
RiskCoefficients ComputeRiskCoefficients(const SdeSpec& spec,
                                         std::span<const double> risk, double t);

// Coefficients for an arbitrary per-entry variance deduction at time t.
RiskCoefficients CoefficientsFromDeduction(const SdeSpec& spec, double t,
                                           std::span<const double> deduction);

// Per-entry drift f(t); risk-independent.
double Drift(const SdeSpec& spec, double t);

// Clean diffusion coefficient g(0, t).
double BaseDiffusion(const SdeSpec& spec, double t);

// g(r, t): the base coefficient on stable entries, zero elsewhere. At the
// stability boundary the right derivative applies, so the boundary counts as
// stable.
std::vector<double> Diffusion(const SdeSpec& spec, std::span<const double> risk, double t);

struct StabilityInterval {
  double t_star = 0.0;
  double upper = 1.0;
  bool empty = false;

  bool Contains(double t) const { return !empty && t >= t_star && t <= upper; }
};

// Least t with v0(t)^2 >= max_j r_j^2 u(t)^2, in closed form for the linear
// beta and geometric sigma schedules. An unreachable threshold yields an
// empty interval.
StabilityInterval ComputeStabilityInterval(const SdeSpec& spec,
                                           std::span<const double> risk);

// Generic solver: least t in [0, T] with stable_at(t) true, assuming the
// stable set is an up-set. Bisection to absolute tolerance `tolerance`.
StabilityInterval SolveStabilityInterval(const SdeSpec& spec,
                                         const std::function<bool(double)>& stable_at,
                                         double tolerance = 1e-9);

// u(t) x0 + v(r, t) * eta with eta ~ N(0, I).
Tensor ForwardKernelSample(const SdeSpec& spec, std::span<const double> risk, double t,
                           std::span<const double> x0, Rng& rng);

}  // namespace rsde

#endif  // RSDE_SDE_H_
