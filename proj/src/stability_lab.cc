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

#include "rsde/stability_lab.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rsde/error.h"
#include "rsde/rng.h"
#include "rsde/simd/kernels.h"

namespace rsde {
namespace {

constexpr std::size_t kChunk = 1024;

double WrapPhase(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  return a <= -M_PI ? a + 2.0 * M_PI : a;
}

Tensor Rows(const Tensor& t, const std::vector<std::size_t>& idx, std::size_t begin,
            std::size_t end) {
  Tensor out = Tensor::Matrix(end - begin, t.cols());
  for (std::size_t i = begin; i < end; ++i) {
    std::copy_n(t.row(idx[i]).data(), t.cols(), out.row(i - begin).data());
  }
  return out;
}

}  // namespace

CharFnEstimate EmpiricalCharFn(const Tensor& samples, const Tensor& points, bool allow_small) {
  if (samples.rank() != 2 || samples.rows() == 0) {
    throw InvalidArgument("characteristic function needs a nonempty sample set");
  }
  if (!allow_small && samples.rows() < kMinCharFnSamples) {
    throw PreconditionViolation("characteristic function estimate needs at least " +
                                std::to_string(kMinCharFnSamples) + " samples");
  }
  const std::size_t d = samples.cols();
  if (points.rank() != 2 || points.cols() != d) {
    throw InvalidArgument("evaluation points must be P x D");
  }
  const std::size_t n = samples.rows();
  const std::size_t p = points.rows();
  const auto& kern = simd::Kernels();
  std::vector<double> re(p, 0.0), im(p, 0.0), phase(p * kChunk);
  for (std::size_t first = 0; first < n; first += kChunk) {
    const std::size_t m = std::min(kChunk, n - first);
    std::fill_n(phase.begin(), p * m, 0.0);
    // phase(p x m) = Y X_chunk^T
    kern.gemm_nt(p, m, d, points.data().data(), samples.data().data() + first * d, phase.data());
    for (std::size_t k = 0; k < p; ++k) {
      double c = 0.0, sn = 0.0;
      kern.sum_cos_sin(phase.data() + k * m, m, &c, &sn);
      re[k] += c;
      im[k] += sn;
    }
  }
  CharFnEstimate out;
  out.points = points;
  out.samples = n;
  out.values.resize(p);
  for (std::size_t k = 0; k < p; ++k) out.values[k] = {re[k] / n, im[k] / n};
  return out;
}

ProbeGrid MakeProbeGrid(const Tensor& reference, const ProbeOptions& options) {
  if (reference.rank() != 2 || reference.rows() < 2) {
    throw InvalidArgument("probe grid needs at least two reference samples");
  }
  if (options.directions < 1 || options.radii < 1 || !(options.max_radius > 0.0)) {
    throw InvalidArgument("probe grid needs directions, radii and a positive extent");
  }
  const std::size_t d = reference.cols();
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMat> x(reference.data().data(), reference.rows(), d);
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd c = x.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(reference.rows() - 1);
  cov += 1e-12 * std::max(cov.trace(), 1.0) * Eigen::MatrixXd::Identity(d, d);
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalFailure("reference covariance is not positive definite");
  // y = L^-T d rho gives y^T cov y = rho^2.
  const Eigen::MatrixXd lt = llt.matrixU();

  Rng rng = MakeRng(options.seed);
  ProbeGrid grid;
  grid.points = Tensor::Matrix(options.directions * options.radii, d);
  grid.weights.reserve(options.directions * options.radii);
  const double dr = options.max_radius / options.radii;
  std::size_t row = 0;
  for (int a = 0; a < options.directions; ++a) {
    Eigen::VectorXd dir(d);
    for (std::size_t j = 0; j < d; ++j) dir[j] = StandardNormal(rng);
    dir.normalize();
    const Eigen::VectorXd base = lt.triangularView<Eigen::Upper>().solve(dir);
    for (int k = 1; k <= options.radii; ++k) {
      const double rho = dr * k;
      for (std::size_t j = 0; j < d; ++j) grid.points.at(row, j) = rho * base[j];
      grid.weights.push_back(std::pow(rho, static_cast<double>(d) - 1.0) * dr);
      ++row;
    }
  }
  const double total = std::accumulate(grid.weights.begin(), grid.weights.end(), 0.0);
  for (auto& w : grid.weights) w /= total;
  return grid;
}

double Instability(const CharFnEstimate& risky, const CharFnEstimate& clean, const ProbeGrid& grid,
                   double floor) {
  const std::size_t p = grid.weights.size();
  if (risky.values.size() != p || clean.values.size() != p) {
    throw InvalidArgument("estimates were not taken on this grid");
  }
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < p; ++k) {
    const double mc = std::abs(clean.values[k]);
    if (mc < floor) continue;
    ++used;
    if (risky.values[k] == clean.values[k]) continue;
    const double mr = std::max(std::abs(risky.values[k]), 1e-12);
    const double dm = std::log(mr) - std::log(mc);
    const double dp = WrapPhase(std::arg(risky.values[k]) - std::arg(clean.values[k]));
    total += grid.weights[k] * mc * (dm * dm + dp * dp);
  }
  if (used == 0) throw NumericalFailure("no probe node clears the modulus floor");
  return total;
}

double Instability(const Tensor& risky, const Tensor& clean, const ProbeGrid& grid, double floor) {
  return Instability(EmpiricalCharFn(risky, grid.points), EmpiricalCharFn(clean, grid.points), grid,
                     floor);
}

NullThreshold BootstrapThreshold(const Tensor& clean, const ProbeGrid& grid, int replicates,
                                 double quantile, std::uint64_t seed, double floor) {
  if (replicates < 1) throw InvalidArgument("bootstrap needs at least one replicate");
  if (!(quantile > 0.0 && quantile <= 1.0)) throw InvalidArgument("quantile must lie in (0, 1]");
  const std::size_t n = clean.rows();
  const std::size_t half = n / 2;
  if (half < kMinCharFnSamples) {
    throw PreconditionViolation("bootstrap halves need at least " +
                                std::to_string(kMinCharFnSamples) + " samples each");
  }
  Rng rng = MakeRng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  NullThreshold out;
  for (int r = 0; r < replicates; ++r) {
    std::shuffle(idx.begin(), idx.end(), rng);
    out.replicates.push_back(
        Instability(Rows(clean, idx, 0, half), Rows(clean, idx, half, 2 * half), grid, floor));
  }
  std::vector<double> sorted = out.replicates;
  std::sort(sorted.begin(), sorted.end());
  const double pos = quantile * (replicates - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min<std::size_t>(lo + 1, replicates - 1);
  out.threshold = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  return out;
}

Tensor PushForward(const Tensor& x0, double u, std::span<const double> v, Rng& rng) {
  const std::size_t d = x0.cols();
  if (v.size() != d) throw InvalidArgument("scale vector and samples differ in dimension");
  Tensor out = Tensor::Matrix(x0.rows(), d);
  for (std::size_t i = 0; i < x0.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = u * x0.at(i, j) + v[j] * StandardNormal(rng);
  }
  return out;
}

std::vector<ScanPoint> InstabilityScan(const SdeSpec& spec, const MixtureSpec& mixture,
                                       const NoiseModel& noise, const ScanOptions& options) {
  spec.Validate();
  noise.Validate();
  if (noise.dim() != mixture.dim()) throw InvalidArgument("noise and mixture dimensions differ");
  if (options.times.empty()) throw InvalidArgument("scan needs at least one time");
  const Tensor x_risky = SampleMixture(mixture, options.samples, MixSeed(options.seed, 1));
  const Tensor x_clean = SampleMixture(mixture, options.samples, MixSeed(options.seed, 2));
  Tensor corrupted = x_risky;
  {
    Rng rng = MakeRng(options.seed, 3);
    for (std::size_t i = 0; i < corrupted.rows(); ++i) {
      std::vector<double> eps(corrupted.cols());
      SampleNoiseInto(noise, rng, eps);
      for (std::size_t j = 0; j < eps.size(); ++j) corrupted.at(i, j) += eps[j];
    }
  }
  const DeductionProfile profile = DeductionProfile::ForNoise(noise, options.deduction);
  const StabilityInterval interval = GeneralStabilityInterval(spec, profile);
  std::vector<ScanPoint> out;
  for (std::size_t k = 0; k < options.times.size(); ++k) {
    const double t = options.times[k];
    const BaseSchedule base = BaseSchedules(spec, t);
    std::vector<double> v(noise.dim(), std::sqrt(base.v0_sq));
    if (options.rule == CoefficientRule::kRiskSensitive) {
      v = GeneralRiskCoefficients(spec, profile, t).v;
    }
    const std::vector<double> v0(noise.dim(), std::sqrt(base.v0_sq));
    Rng rng = MakeRng(options.seed, 100 + k);
    const Tensor risky = PushForward(corrupted, base.u, v, rng);
    const Tensor clean = PushForward(x_clean, base.u, v0, rng);
    ProbeOptions probe = options.probe;
    probe.seed = MixSeed(options.probe.seed, k);
    const ProbeGrid grid = MakeProbeGrid(clean, probe);
    ScanPoint pt;
    pt.t = t;
    pt.instability = Instability(risky, clean, grid);
    pt.threshold =
        BootstrapThreshold(clean, grid, options.bootstrap, options.quantile, MixSeed(options.seed, 200 + k))
            .threshold;
    pt.stable_in_theory = interval.Contains(t);
    out.push_back(pt);
  }
  return out;
}

void WriteScanCsv(const std::vector<ScanPoint>& scan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << "t,instability,threshold,exceeds,stable_in_theory\n";
  char buf[160];
  for (const auto& p : scan) {
    std::snprintf(buf, sizeof(buf), "%.6g,%.10g,%.10g,%d,%d\n", p.t, p.instability, p.threshold,
                  p.exceeds() ? 1 : 0, p.stable_in_theory ? 1 : 0);
    out << buf;
  }
}

}  // namespace rsde
