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

// Sample-based perturbation instability
//
//   S_t(r) = int Omega(y) |ln chi~_t(y | r) - ln chi_t(y)|^2 dy
//
// between the marginal of corrupted data under risk-adjusted coefficients
// (chi~) and the marginal of clean data under the base process (chi).

#ifndef RSDE_STABILITY_LAB_H_
#define RSDE_STABILITY_LAB_H_

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "rsde/datagen.h"
#include "rsde/noise.h"
#include "rsde/sde.h"
#include "rsde/tensor.h"

namespace rsde {

struct CharFnEstimate {
  Tensor points;  // P x D
  std::vector<std::complex<double>> values;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinCharFnSamples = 1000;

// (1/N) sum_n exp(i y^T x_n) at every row y of `points`. Throws
// InvalidArgument for an empty set and PreconditionViolation below
// kMinCharFnSamples rows unless `allow_small` is set.
CharFnEstimate EmpiricalCharFn(const Tensor& samples, const Tensor& points,
                               bool allow_small = false);

struct ProbeOptions {
  int directions = 32;
  int radii = 16;
  // Largest radius in whitened units.
  double max_radius = 3.0;
  std::uint64_t seed = 0;
};

// Nodes y = rho L^-T d for random unit directions d and radii rho on
// (0, max_radius], where L L^T is the sample covariance of `reference`.
// Weights are the polar volume elements, normalized to sum to 1.
struct ProbeGrid {
  Tensor points;
  std::vector<double> weights;
};

ProbeGrid MakeProbeGrid(const Tensor& reference, const ProbeOptions& options = {});

inline constexpr double kModulusFloor = 0.05;

// Sum over nodes with |chi(y)| >= floor of
//   w |chi(y)| [(ln|chi~| - ln|chi|)^2 + wrap(arg chi~ - arg chi)^2].
// Throws NumericalFailure when no node clears the floor.
double Instability(const CharFnEstimate& risky, const CharFnEstimate& clean, const ProbeGrid& grid,
                   double floor = kModulusFloor);
double Instability(const Tensor& risky, const Tensor& clean, const ProbeGrid& grid,
                   double floor = kModulusFloor);

struct NullThreshold {
  double threshold = 0.0;
  std::vector<double> replicates;
};

// Quantile of instability between random halves of `clean`.
NullThreshold BootstrapThreshold(const Tensor& clean, const ProbeGrid& grid, int replicates = 20,
                                 double quantile = 0.95, std::uint64_t seed = 0,
                                 double floor = kModulusFloor);

enum class CoefficientRule {
  // v^2 = max(v0^2 - psi, 0) from the noise law's deduction.
  kRiskSensitive,
  // v = v0 regardless of risk.
  kUnadjusted,
};

struct ScanOptions {
  std::vector<double> times = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::size_t samples = 100000;
  CoefficientRule rule = CoefficientRule::kRiskSensitive;
  ProbeOptions probe;
  int bootstrap = 20;
  double quantile = 0.95;
  std::uint64_t seed = 0;
  DeductionOptions deduction;
};

struct ScanPoint {
  double t = 0.0;
  double instability = 0.0;
  double threshold = 0.0;
  bool stable_in_theory = false;

  bool exceeds() const { return instability > threshold; }
};

// Corrupts clean mixture draws with `noise` and compares their forward
// marginal against an independent clean set pushed through the base
// process, at each scan time.
std::vector<ScanPoint> InstabilityScan(const SdeSpec& spec, const MixtureSpec& mixture,
                                       const NoiseModel& noise, const ScanOptions& options);

void WriteScanCsv(const std::vector<ScanPoint>& scan, const std::string& path);

// Forward kernel draws for every row of x0 with per-entry scale v (shared
// across rows): u x0 + v * eta.
Tensor PushForward(const Tensor& x0, double u, std::span<const double> v, Rng& rng);

}  // namespace rsde

#endif  // RSDE_STABILITY_LAB_H_
