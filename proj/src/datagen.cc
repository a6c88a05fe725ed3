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

#include "rsde/datagen.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rsde/error.h"

namespace rsde {
namespace {

std::vector<Eigen::MatrixXd> Cholesky(const MixtureSpec& spec) {
  std::vector<Eigen::MatrixXd> out;
  const int d = spec.dim();
  for (const Tensor& c : spec.covariances) {
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = c.at(i, j);
    }
    out.push_back(Eigen::LLT<Eigen::MatrixXd>(m).matrixL());
  }
  return out;
}

int DrawComponent(const std::vector<double>& weights, Rng& rng) {
  const double u = Uniform01(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size()) - 1;
}

void DrawClean(const MixtureSpec& spec, const std::vector<Eigen::MatrixXd>& chol, Rng& rng,
               std::span<double> out, int* component) {
  const int k = DrawComponent(spec.weights, rng);
  const int d = spec.dim();
  Eigen::VectorXd z(d);
  for (int j = 0; j < d; ++j) z[j] = StandardNormal(rng);
  const Eigen::VectorXd x = chol[k] * z;
  for (int j = 0; j < d; ++j) out[j] = spec.means[k][j] + x[j];
  *component = k;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void MixtureSpec::Validate() const {
  const std::size_t k = means.size();
  if (k == 0) throw InvalidArgument("mixture needs at least one component");
  if (covariances.size() != k || weights.size() != k || corruption.size() != k) {
    throw InvalidArgument("mixture component lists have different lengths");
  }
  const int d = dim();
  if (d <= 0) throw InvalidArgument("mixture dimension must be positive");
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (static_cast<int>(means[c].size()) != d) throw InvalidArgument("mean dimension mismatch");
    if (!(weights[c] >= 0.0)) throw InvalidArgument("mixture weights must be nonnegative");
    if (!(corruption[c] >= 0.0 && corruption[c] <= 1.0)) {
      throw InvalidArgument("corruption fractions must lie in [0, 1]");
    }
    total += weights[c];
    const Tensor& cov = covariances[c];
    if (cov.rank() != 2 || cov.rows() != static_cast<std::size_t>(d) ||
        cov.cols() != static_cast<std::size_t>(d)) {
      throw InvalidArgument("covariance must be D x D");
    }
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        m(i, j) = cov.at(i, j);
        if (std::abs(cov.at(i, j) - cov.at(j, i)) > 1e-12 * (1.0 + std::abs(cov.at(i, j)))) {
          throw InvalidArgument("covariance must be symmetric");
        }
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw InvalidArgument("covariance must be positive definite");
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("mixture weights must sum to 1");
  if (!(risk_low >= 0.0 && risk_high >= risk_low)) {
    throw InvalidArgument("risk range must satisfy 0 <= low <= high");
  }
}

MixtureSpec DefaultMixture(NoiseKind noise) {
  MixtureSpec s;
  s.means = {{4.0, 4.0}, {-4.0, 4.0}, {-4.0, -4.0}, {4.0, -4.0}};
  for (int k = 0; k < 4; ++k) s.covariances.push_back(Tensor::Matrix(2, 2, {0.5, 0.0, 0.0, 0.5}));
  s.weights = {0.25, 0.25, 0.25, 0.25};
  s.corruption = {0.95, 0.1, 0.1, 0.1};
  s.noise = noise;
  return s;
}

Tensor SampleMixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed,
                     std::vector<int>* component) {
  spec.Validate();
  const auto chol = Cholesky(spec);
  Rng rng = MakeRng(seed, 0);
  Tensor x = Tensor::Matrix(n, spec.dim());
  if (component) component->assign(n, 0);
  int k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    DrawClean(spec, chol, rng, x.row(i), &k);
    if (component) (*component)[i] = k;
  }
  return x;
}

MixtureDraw GenerateMixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample count must be positive");
  MixtureDraw draw;
  draw.clean = SampleMixture(spec, n, seed, &draw.component);
  const int d = spec.dim();
  Rng rng = MakeRng(seed, 1);
  Tensor x = draw.clean;
  Tensor r = Tensor::Matrix(n, d);
  NoiseModel noise;
  noise.kind = spec.noise;
  noise.risk.assign(d, 0.0);
  std::vector<double> eps(d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(Uniform01(rng) < spec.corruption[draw.component[i]])) continue;
    const double level = spec.risk_low == spec.risk_high
                             ? spec.risk_low
                             : UniformRange(rng, spec.risk_low, spec.risk_high);
    std::fill(noise.risk.begin(), noise.risk.end(), level);
    SampleNoiseInto(noise, rng, eps);
    for (int j = 0; j < d; ++j) {
      x.at(i, j) += eps[j];
      r.at(i, j) = level;
    }
  }
  draw.data = Dataset(std::move(x), std::move(r));
  return draw;
}

std::size_t MaskedTable::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), 1));
}

MaskedTable MaskTable(const Tensor& table, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("mask fraction must be in (0, 1)");
  MaskedTable out;
  out.values = table;
  out.missing.resize(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) out.missing[i] = Uniform01(rng) < fraction;
  return out;
}

Dataset KnnImputeWithRisk(const MaskedTable& table, const TabularPipelineSpec& spec) {
  if (spec.neighbors < 1) throw InvalidArgument("neighbor count must be at least 1");
  const std::size_t n = table.values.rows();
  const std::size_t d = table.values.cols();
  if (table.missing.size() != n * d) throw InvalidArgument("mask shape differs from the table");
  auto miss = [&](std::size_t i, std::size_t j) { return table.missing[i * d + j] != 0; };

  for (std::size_t j = 0; j < d; ++j) {
    bool observed = false;
    for (std::size_t i = 0; i < n && !observed; ++i) observed = !miss(i, j);
    if (!observed) {
      throw ConfigurationError("column " + std::to_string(j + 1) + " has no observed entries");
    }
  }

  Tensor x = table.values;
  Tensor r = Tensor::Matrix(n, d);
  std::vector<std::pair<double, std::size_t>> cand;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    bool any_missing = false;
    bool any_observed = false;
    for (std::size_t j = 0; j < d; ++j) {
      any_missing = any_missing || miss(i, j);
      any_observed = any_observed || !miss(i, j);
    }
    if (!any_missing) continue;
    if (!any_observed) {
      throw PreconditionViolation("row " + std::to_string(i + 1) + " has no observed entries");
    }
    // Distances to every other row over mutually observed columns.
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    for (std::size_t o = 0; o < n; ++o) {
      if (o == i) continue;
      double s = 0.0;
      std::size_t count = 0;
      for (std::size_t j = 0; j < d; ++j) {
        if (miss(i, j) || miss(o, j)) continue;
        const double diff = table.values.at(i, j) - table.values.at(o, j);
        s += diff * diff;
        ++count;
      }
      if (count > 0) dist[o] = std::sqrt(s * static_cast<double>(d) / count);
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (!miss(i, j)) continue;
      cand.clear();
      for (std::size_t o = 0; o < n; ++o) {
        if (o != i && !miss(o, j) && std::isfinite(dist[o])) cand.emplace_back(dist[o], o);
      }
      if (cand.empty()) {
        throw PreconditionViolation("no comparable neighbors for row " + std::to_string(i + 1) +
                                    ", column " + std::to_string(j + 1));
      }
      const std::size_t k = std::min<std::size_t>(spec.neighbors, cand.size());
      std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
      vals.clear();
      for (std::size_t c = 0; c < k; ++c) vals.push_back(table.values.at(cand[c].second, j));
      const double med = Median(vals);
      for (auto& v : vals) v = std::abs(v - med);
      x.at(i, j) = med;
      r.at(i, j) = Median(vals);
    }
  }
  return Dataset(std::move(x), std::move(r));
}

}  // namespace rsde
