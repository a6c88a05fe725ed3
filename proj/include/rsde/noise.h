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

// Corruption laws and the variance deduction Psi(u, r) that turns a base
// schedule into the minimum-instability schedule for that law.
//
// Given a weight function Omega(y) and a characteristic function chi_r, the
// deduction solves the D x D system
//
//   M Psi = b,  M_ij = int Omega y_i^2 y_j^2,  b_i = -2 int Omega ln|chi_r(u y)| y_i^2
//
// Gaussian corruption gives Psi = r^2 u^2 exactly; symmetric Cauchy
// corruption with Omega = exp(-sum_j r_j |y_j|) has a closed form that is
// linear in u.

#ifndef RSDE_NOISE_H_
#define RSDE_NOISE_H_

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rsde/rng.h"
#include "rsde/sde.h"
#include "rsde/tensor.h"

namespace rsde {

enum class NoiseKind { kGaussian, kCauchy, kCustom };

const char* NoiseKindName(NoiseKind kind);
NoiseKind ParseNoiseKind(const std::string& name);

// chi_r(y) for a risk vector r.
using CharFnFamily =
    std::function<std::complex<double>(std::span<const double> risk, std::span<const double> y)>;
// Writes one corruption draw for risk r into out.
using NoiseSamplerFamily =
    std::function<void(std::span<const double> risk, Rng& rng, std::span<double> out)>;

struct NoiseModel {
  NoiseKind kind = NoiseKind::kGaussian;
  std::vector<double> risk;
  CharFnFamily custom_charfn;
  NoiseSamplerFamily custom_sampler;

  static NoiseModel Gaussian(std::vector<double> risk);
  static NoiseModel Cauchy(std::vector<double> risk);
  static NoiseModel Custom(std::vector<double> risk, CharFnFamily charfn,
                           NoiseSamplerFamily sampler);

  int dim() const { return static_cast<int>(risk.size()); }
  void Validate() const;

  // Same law with a different risk vector.
  NoiseModel WithRisk(std::vector<double> new_risk) const;

  std::complex<double> CharacteristicFunction(std::span<const double> y) const;
};

Tensor SampleNoise(const NoiseModel& model, Rng& rng);
void SampleNoiseInto(const NoiseModel& model, Rng& rng, std::span<double> out);

std::vector<double> PsiGaussian(std::span<const double> risk, double u);

// Closed-form Cauchy deduction at u = 1 (Psi(u, r) = u * psi(r)). Zero-risk
// coordinates are removed from the system and receive 0.
std::vector<double> PsiCauchy(std::span<const double> risk);

// The variant whose right-hand side is r^-1 (sum_j r_j^-1) + 2 r^-2. It
// coincides with PsiCauchy for D = 1 and for equal risks; kept for
// comparison only.
std::vector<double> PsiCauchyPrinted(std::span<const double> risk);

class WeightFunction {
 public:
  // exp(-0.5 s^2 |y|^2)
  static WeightFunction GaussianEnvelope(int dim, double scale = 1.0);
  // exp(-sum_j rate_j |y_j|); every rate must be positive.
  static WeightFunction Laplace(std::vector<double> rates);
  static WeightFunction Custom(int dim, std::function<double(std::span<const double>)> fn);

  int dim() const { return dim_; }
  double operator()(std::span<const double> y) const;

  // Smallest L with Omega(L e_axis) < threshold, found by doubling and
  // bisection when no closed form is available.
  double AxisExtent(int axis, double threshold) const;

  // Draws y with density proportional to Omega when that is available,
  // otherwise from a Gaussian proposal; returns Omega(y) / q(y) up to a
  // common constant.
  double ImportanceDraw(Rng& rng, std::span<double> y, std::span<const double> extents) const;

 private:
  enum class Kind { kGaussian, kLaplace, kCustom };
  Kind kind_ = Kind::kGaussian;
  int dim_ = 1;
  double scale_ = 1.0;
  std::vector<double> rates_;
  std::function<double(std::span<const double>)> fn_;
};

struct QuadratureOptions {
  // Split evenly between [-L, 0] and [0, L].
  int nodes_per_dim = 129;
  double extent_threshold = 1e-12;
  double skip_below = 1e-14;
  // Tensor-product rules up to this dimension, importance sampling beyond.
  int max_tensor_dim = 3;
  std::size_t mc_samples = 1000000;
  std::uint64_t seed = 0x5eed;
};

struct QuadratureGrid {
  int dim = 0;
  std::vector<double> nodes;    // size() x dim
  std::vector<double> weights;  // rule weight times Omega, all positive

  std::size_t size() const { return weights.size(); }
};

// Gauss-Legendre nodes and weights on [-1, 1].
void GaussLegendre(int n, std::vector<double>* nodes, std::vector<double>* weights);

QuadratureGrid BuildQuadratureGrid(const WeightFunction& omega,
                                   const QuadratureOptions& options = {});

// Throws NumericalFailure if the moment matrix has condition number above
// 1e12.
std::vector<double> PsiNumeric(const std::function<std::complex<double>(std::span<const double>)>& charfn,
                               double u, const QuadratureGrid& grid);

struct DeductionOptions {
  // Weight function for custom laws; defaults to a unit Gaussian envelope.
  std::function<WeightFunction(std::span<const double> risk)> weight;
  QuadratureOptions quadrature;
  // u nodes on [0, 1] used to tabulate custom deductions.
  int table_nodes = 33;
};

// Psi(u, r) for one risk vector, with the law-specific dependence on u.
class DeductionProfile {
 public:
  DeductionProfile() = default;
  static DeductionProfile ForNoise(const NoiseModel& noise, const DeductionOptions& options = {});

  int dim() const { return dim_; }
  bool zero() const { return zero_; }
  void Evaluate(double u, std::span<double> out) const;
  std::vector<double> Evaluate(double u) const;

 private:
  int dim_ = 0;
  bool zero_ = true;
  // Psi(u) = base * u^power for the closed forms.
  std::vector<double> base_;
  int power_ = 2;
  // Custom laws: table_[k * dim + j] at u = k / (nodes - 1).
  std::vector<double> table_;
  int table_nodes_ = 0;
};

RiskCoefficients GeneralRiskCoefficients(const SdeSpec& spec, const NoiseModel& noise, double t,
                                         const DeductionOptions& options = {});
RiskCoefficients GeneralRiskCoefficients(const SdeSpec& spec, const DeductionProfile& profile,
                                         double t);

// Least t with v0(t)^2 >= max_j Psi_j(u(t)); closed form for Gaussian laws,
// bisection otherwise.
StabilityInterval GeneralStabilityInterval(const SdeSpec& spec, const NoiseModel& noise,
                                           const DeductionOptions& options = {});
StabilityInterval GeneralStabilityInterval(const SdeSpec& spec, const DeductionProfile& profile);

}  // namespace rsde

#endif  // RSDE_NOISE_H_
