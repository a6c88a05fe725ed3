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

#include "rsde/noise.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rsde/error.h"

namespace rsde {
namespace {

constexpr double kLogFloor = -690.7755278982137;  // ln(1e-300)

void CheckRisk(std::span<const double> risk) {
  for (double r : risk) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw InvalidArgument("risk entries must be finite and nonnegative");
    }
  }
}

std::complex<double> GaussianCharFn(std::span<const double> r, std::span<const double> y) {
  double e = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) e += r[j] * r[j] * y[j] * y[j];
  return {std::exp(-0.5 * e), 0.0};
}

std::complex<double> CauchyCharFn(std::span<const double> r, std::span<const double> y) {
  double e = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) e += r[j] * std::abs(y[j]);
  return {std::exp(-e), 0.0};
}

// Solves the Cauchy system on the positive-risk coordinates with the given
// right-hand side builder.
template <typename Rhs>
std::vector<double> SolveCauchy(std::span<const double> risk, Rhs rhs) {
  CheckRisk(risk);
  std::vector<int> active;
  for (std::size_t j = 0; j < risk.size(); ++j) {
    if (risk[j] > 0.0) active.push_back(static_cast<int>(j));
  }
  std::vector<double> out(risk.size(), 0.0);
  if (active.empty()) return out;
  const int n = static_cast<int>(active.size());
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) k[i] = risk[active[i]];
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = (i == j ? 6.0 : 1.0) / (k[i] * k[i] * k[j] * k[j]);
    }
  }
  const Eigen::VectorXd c = rhs(k);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw InternalError("Cauchy deduction system is singular");
  const Eigen::VectorXd psi = llt.solve(c);
  for (int i = 0; i < n; ++i) out[active[i]] = psi[i];
  return out;
}

double MaxOf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

}  // namespace

const char* NoiseKindName(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kGaussian:
      return "gaussian";
    case NoiseKind::kCauchy:
      return "cauchy";
    case NoiseKind::kCustom:
      return "custom";
  }
  return "?";
}

NoiseKind ParseNoiseKind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::kGaussian;
  if (name == "cauchy") return NoiseKind::kCauchy;
  if (name == "custom") return NoiseKind::kCustom;
  throw InvalidArgument("unknown noise kind '" + name + "'");
}

NoiseModel NoiseModel::Gaussian(std::vector<double> risk) {
  NoiseModel m;
  m.kind = NoiseKind::kGaussian;
  m.risk = std::move(risk);
  m.Validate();
  return m;
}

NoiseModel NoiseModel::Cauchy(std::vector<double> risk) {
  NoiseModel m;
  m.kind = NoiseKind::kCauchy;
  m.risk = std::move(risk);
  m.Validate();
  return m;
}

NoiseModel NoiseModel::Custom(std::vector<double> risk, CharFnFamily charfn,
                              NoiseSamplerFamily sampler) {
  NoiseModel m;
  m.kind = NoiseKind::kCustom;
  m.risk = std::move(risk);
  m.custom_charfn = std::move(charfn);
  m.custom_sampler = std::move(sampler);
  m.Validate();
  return m;
}

void NoiseModel::Validate() const {
  CheckRisk(risk);
  if (kind == NoiseKind::kCustom && (!custom_charfn || !custom_sampler)) {
    throw InvalidArgument("custom noise needs both a characteristic function and a sampler");
  }
}

NoiseModel NoiseModel::WithRisk(std::vector<double> new_risk) const {
  NoiseModel m = *this;
  m.risk = std::move(new_risk);
  m.Validate();
  return m;
}

std::complex<double> NoiseModel::CharacteristicFunction(std::span<const double> y) const {
  if (y.size() != risk.size()) throw InvalidArgument("characteristic function dimension mismatch");
  switch (kind) {
    case NoiseKind::kGaussian:
      return GaussianCharFn(risk, y);
    case NoiseKind::kCauchy:
      return CauchyCharFn(risk, y);
    case NoiseKind::kCustom:
      return custom_charfn(risk, y);
  }
  return {1.0, 0.0};
}

void SampleNoiseInto(const NoiseModel& model, Rng& rng, std::span<double> out) {
  if (out.size() != model.risk.size()) throw InvalidArgument("noise output dimension mismatch");
  switch (model.kind) {
    case NoiseKind::kGaussian:
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = model.risk[j] * StandardNormal(rng);
      return;
    case NoiseKind::kCauchy:
      for (std::size_t j = 0; j < out.size(); ++j) {
        const double u = Uniform01(rng);
        out[j] = model.risk[j] == 0.0 ? 0.0 : model.risk[j] * std::tan(std::numbers::pi * (u - 0.5));
      }
      return;
    case NoiseKind::kCustom:
      model.custom_sampler(model.risk, rng, out);
      return;
  }
}

Tensor SampleNoise(const NoiseModel& model, Rng& rng) {
  std::vector<double> out(model.risk.size());
  SampleNoiseInto(model, rng, out);
  return Tensor::FromVector(std::move(out));
}

std::vector<double> PsiGaussian(std::span<const double> risk, double u) {
  CheckRisk(risk);
  std::vector<double> out(risk.size());
  for (std::size_t j = 0; j < risk.size(); ++j) out[j] = (risk[j] * risk[j]) * (u * u);
  return out;
}

std::vector<double> PsiCauchy(std::span<const double> risk) {
  return SolveCauchy(risk, [](const Eigen::VectorXd& k) {
    const double d = static_cast<double>(k.size());
    Eigen::VectorXd c(k.size());
    for (Eigen::Index i = 0; i < k.size(); ++i) c[i] = (d + 2.0) / (k[i] * k[i]);
    return c;
  });
}

std::vector<double> PsiCauchyPrinted(std::span<const double> risk) {
  return SolveCauchy(risk, [](const Eigen::VectorXd& k) {
    double inv_sum = 0.0;
    for (Eigen::Index i = 0; i < k.size(); ++i) inv_sum += 1.0 / k[i];
    Eigen::VectorXd c(k.size());
    for (Eigen::Index i = 0; i < k.size(); ++i) c[i] = inv_sum / k[i] + 2.0 / (k[i] * k[i]);
    return c;
  });
}

WeightFunction WeightFunction::GaussianEnvelope(int dim, double scale) {
  if (dim <= 0 || !(scale > 0.0)) throw InvalidArgument("invalid Gaussian envelope");
  WeightFunction w;
  w.kind_ = Kind::kGaussian;
  w.dim_ = dim;
  w.scale_ = scale;
  return w;
}

WeightFunction WeightFunction::Laplace(std::vector<double> rates) {
  if (rates.empty()) throw InvalidArgument("Laplace weight needs at least one rate");
  for (double r : rates) {
    if (!(r > 0.0)) throw InvalidArgument("Laplace weight rates must be positive");
  }
  WeightFunction w;
  w.kind_ = Kind::kLaplace;
  w.dim_ = static_cast<int>(rates.size());
  w.rates_ = std::move(rates);
  return w;
}

WeightFunction WeightFunction::Custom(int dim, std::function<double(std::span<const double>)> fn) {
  if (dim <= 0 || !fn) throw InvalidArgument("invalid custom weight function");
  WeightFunction w;
  w.kind_ = Kind::kCustom;
  w.dim_ = dim;
  w.fn_ = std::move(fn);
  return w;
}

double WeightFunction::operator()(std::span<const double> y) const {
  switch (kind_) {
    case Kind::kGaussian: {
      double s = 0.0;
      for (double v : y) s += v * v;
      return std::exp(-0.5 * scale_ * scale_ * s);
    }
    case Kind::kLaplace: {
      double s = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) s += rates_[j] * std::abs(y[j]);
      return std::exp(-s);
    }
    case Kind::kCustom:
      return fn_(y);
  }
  return 0.0;
}

double WeightFunction::AxisExtent(int axis, double threshold) const {
  const double lt = -std::log(threshold);
  switch (kind_) {
    case Kind::kGaussian:
      return std::sqrt(2.0 * lt) / scale_;
    case Kind::kLaplace:
      return lt / rates_[axis];
    case Kind::kCustom:
      break;
  }
  std::vector<double> y(dim_, 0.0);
  auto at = [&](double l) {
    y[axis] = l;
    return (*this)(y);
  };
  double hi = 1.0;
  for (int i = 0; i < 200 && at(hi) >= threshold; ++i) hi *= 2.0;
  if (at(hi) >= threshold) throw NumericalFailure("weight function does not decay");
  double lo = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (at(mid) >= threshold) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double WeightFunction::ImportanceDraw(Rng& rng, std::span<double> y,
                                      std::span<const double> extents) const {
  switch (kind_) {
    case Kind::kGaussian:
      for (auto& v : y) v = StandardNormal(rng) / scale_;
      return 1.0;
    case Kind::kLaplace:
      for (std::size_t j = 0; j < y.size(); ++j) {
        const double e = -std::log(1.0 - Uniform01(rng)) / rates_[j];
        y[j] = Uniform01(rng) < 0.5 ? -e : e;
      }
      return 1.0;
    case Kind::kCustom:
      break;
  }
  // Gaussian proposal reaching the extent at about seven standard deviations.
  double log_q = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double s = extents[j] / 7.0;
    const double z = StandardNormal(rng);
    y[j] = s * z;
    log_q += -0.5 * z * z - std::log(s);
  }
  return (*this)(y) / std::exp(log_q);
}

void GaussLegendre(int n, std::vector<double>* nodes, std::vector<double>* weights) {
  if (n < 1) throw InvalidArgument("Gauss-Legendre rule needs at least one node");
  nodes->assign(n, 0.0);
  weights->assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pm = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pm) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    (*nodes)[i] = -x;
    (*nodes)[n - 1 - i] = x;
    (*weights)[i] = w;
    (*weights)[n - 1 - i] = w;
  }
  if (n % 2 == 1) (*nodes)[n / 2] = 0.0;
}

QuadratureGrid BuildQuadratureGrid(const WeightFunction& omega, const QuadratureOptions& options) {
  const int d = omega.dim();
  QuadratureGrid grid;
  grid.dim = d;
  std::vector<double> extents(d);
  for (int j = 0; j < d; ++j) extents[j] = omega.AxisExtent(j, options.extent_threshold);

  std::vector<double> y(d);
  if (d > options.max_tensor_dim) {
    Rng rng = MakeRng(options.seed);
    const double inv = 1.0 / static_cast<double>(options.mc_samples);
    grid.nodes.reserve(options.mc_samples * d);
    grid.weights.reserve(options.mc_samples);
    for (std::size_t s = 0; s < options.mc_samples; ++s) {
      const double w = omega.ImportanceDraw(rng, y, extents) * inv;
      if (!(w > 0.0) || !std::isfinite(w)) continue;
      grid.nodes.insert(grid.nodes.end(), y.begin(), y.end());
      grid.weights.push_back(w);
    }
    return grid;
  }

  // Two panels meeting at the origin, where |y|-type integrands have a kink.
  const int half = std::max((options.nodes_per_dim + 1) / 2, 1);
  std::vector<double> hx, hw;
  GaussLegendre(half, &hx, &hw);
  std::vector<double> gx, gw;
  for (int side : {-1, 1}) {
    for (int i = 0; i < half; ++i) {
      gx.push_back(side * 0.5 * (hx[i] + 1.0));
      gw.push_back(0.5 * hw[i]);
    }
  }
  const int n = static_cast<int>(gx.size());
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(n);
  std::vector<int> idx(d, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (int j = d - 1; j >= 0; --j) {
      idx[j] = static_cast<int>(rem % n);
      rem /= n;
      y[j] = extents[j] * gx[idx[j]];
      w *= extents[j] * gw[idx[j]];
    }
    const double om = omega(y);
    if (!(om >= options.skip_below)) continue;
    grid.nodes.insert(grid.nodes.end(), y.begin(), y.end());
    grid.weights.push_back(w * om);
  }
  return grid;
}

std::vector<double> PsiNumeric(
    const std::function<std::complex<double>(std::span<const double>)>& charfn, double u,
    const QuadratureGrid& grid) {
  const int d = grid.dim;
  if (d <= 0 || grid.size() == 0) throw InvalidArgument("empty quadrature grid");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  std::vector<double> uy(d);
  std::vector<double> sq(d);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const double* y = grid.nodes.data() + n * d;
    const double w = grid.weights[n];
    for (int j = 0; j < d; ++j) {
      uy[j] = u * y[j];
      sq[j] = y[j] * y[j];
    }
    const double lm = std::max(std::log(std::abs(charfn(uy))), kLogFloor);
    for (int i = 0; i < d; ++i) {
      b[i] += -2.0 * w * lm * sq[i];
      for (int j = 0; j < d; ++j) m(i, j) += w * sq[i] * sq[j];
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double cond = s[0] / s[d - 1];
  if (!(cond <= 1e12)) {
    std::ostringstream msg;
    msg << "moment matrix is ill-conditioned (condition number " << cond << ", " << grid.size()
        << " nodes)";
    throw NumericalFailure(msg.str());
  }
  const Eigen::VectorXd psi = m.ldlt().solve(b);
  return std::vector<double>(psi.data(), psi.data() + d);
}

DeductionProfile DeductionProfile::ForNoise(const NoiseModel& noise,
                                            const DeductionOptions& options) {
  noise.Validate();
  DeductionProfile p;
  p.dim_ = noise.dim();
  p.zero_ = MaxOf(noise.risk) == 0.0;
  switch (noise.kind) {
    case NoiseKind::kGaussian:
      p.power_ = 2;
      p.base_.resize(noise.risk.size());
      for (std::size_t j = 0; j < noise.risk.size(); ++j) {
        p.base_[j] = noise.risk[j] * noise.risk[j];
      }
      return p;
    case NoiseKind::kCauchy:
      p.power_ = 1;
      p.base_ = PsiCauchy(noise.risk);
      return p;
    case NoiseKind::kCustom:
      break;
  }
  if (p.zero_) {
    p.power_ = 1;
    p.base_.assign(noise.risk.size(), 0.0);
    return p;
  }
  const WeightFunction omega = options.weight ? options.weight(noise.risk)
                                              : WeightFunction::GaussianEnvelope(p.dim_);
  if (omega.dim() != p.dim_) throw InvalidArgument("weight function dimension mismatch");
  const QuadratureGrid grid = BuildQuadratureGrid(omega, options.quadrature);
  const int nodes = std::max(options.table_nodes, 2);
  p.table_nodes_ = nodes;
  p.table_.resize(static_cast<std::size_t>(nodes) * p.dim_);
  auto chi = [&noise](std::span<const double> y) { return noise.CharacteristicFunction(y); };
  for (int k = 0; k < nodes; ++k) {
    const double u = static_cast<double>(k) / (nodes - 1);
    const std::vector<double> psi = PsiNumeric(chi, u, grid);
    for (int j = 0; j < p.dim_; ++j) p.table_[k * p.dim_ + j] = std::max(psi[j], 0.0);
  }
  return p;
}

void DeductionProfile::Evaluate(double u, std::span<double> out) const {
  if (static_cast<int>(out.size()) != dim_) throw InvalidArgument("deduction dimension mismatch");
  if (table_nodes_ == 0) {
    const double f = power_ == 2 ? u * u : u;
    for (int j = 0; j < dim_; ++j) out[j] = base_[j] * f;
    return;
  }
  const double pos = std::clamp(u, 0.0, 1.0) * (table_nodes_ - 1);
  const int k = std::min(static_cast<int>(pos), table_nodes_ - 2);
  const double a = pos - k;
  for (int j = 0; j < dim_; ++j) {
    out[j] = (1.0 - a) * table_[k * dim_ + j] + a * table_[(k + 1) * dim_ + j];
  }
}

std::vector<double> DeductionProfile::Evaluate(double u) const {
  std::vector<double> out(dim_);
  Evaluate(u, out);
  return out;
}

RiskCoefficients GeneralRiskCoefficients(const SdeSpec& spec, const DeductionProfile& profile,
                                         double t) {
  const BaseSchedule base = BaseSchedules(spec, t);
  return CoefficientsFromDeduction(spec, t, profile.Evaluate(base.u));
}

RiskCoefficients GeneralRiskCoefficients(const SdeSpec& spec, const NoiseModel& noise, double t,
                                         const DeductionOptions& options) {
  if (noise.kind == NoiseKind::kGaussian) return ComputeRiskCoefficients(spec, noise.risk, t);
  return GeneralRiskCoefficients(spec, DeductionProfile::ForNoise(noise, options), t);
}

StabilityInterval GeneralStabilityInterval(const SdeSpec& spec, const DeductionProfile& profile) {
  if (profile.zero()) return {0.0, spec.horizon, false};
  std::vector<double> psi(profile.dim());
  return SolveStabilityInterval(spec, [&](double t) {
    const BaseSchedule base = BaseSchedules(spec, t);
    profile.Evaluate(base.u, psi);
    return base.v0_sq >= MaxOf(psi);
  });
}

StabilityInterval GeneralStabilityInterval(const SdeSpec& spec, const NoiseModel& noise,
                                           const DeductionOptions& options) {
  if (noise.kind == NoiseKind::kGaussian) return ComputeStabilityInterval(spec, noise.risk);
  return GeneralStabilityInterval(spec, DeductionProfile::ForNoise(noise, options));
}

}  // namespace rsde
