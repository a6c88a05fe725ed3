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

#include "rsde/metrics.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rsde/error.h"
#include "rsde/rng.h"
#include "rsde/simd/kernels.h"

namespace rsde {
namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

RowMap AsMatrix(const Tensor& t) { return RowMap(t.data().data(), t.rows(), t.cols()); }

void CheckSamples(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.rows() == 0) {
    throw InvalidArgument(std::string(what) + " must be a nonempty n x D matrix");
  }
}

void MeanAndCovariance(const Tensor& t, Vector* mean, Matrix* cov) {
  const RowMap x = AsMatrix(t);
  *mean = x.colwise().mean().transpose();
  const Matrix c = x.rowwise() - mean->transpose();
  *cov = (c.transpose() * c) / static_cast<double>(t.rows() - 1);
}

// Symmetric square root; reports whether clamping removed more than
// round-off.
Matrix SqrtPsd(const Matrix& m, bool* clamped) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Vector ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10 * scale) *clamped = true;
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Inverse covariances of the mixture components.
struct MixtureGeometry {
  std::vector<Vector> means;
  std::vector<Matrix> precisions;

  explicit MixtureGeometry(const MixtureSpec& mixture) {
    mixture.Validate();
    const int d = mixture.dim();
    for (int k = 0; k < static_cast<int>(mixture.components()); ++k) {
      Vector mu(d);
      Matrix cov(d, d);
      for (int i = 0; i < d; ++i) {
        mu[i] = mixture.means[k][i];
        for (int j = 0; j < d; ++j) cov(i, j) = mixture.covariances[k].at(i, j);
      }
      means.push_back(mu);
      precisions.push_back(cov.llt().solve(Matrix::Identity(d, d)));
    }
  }

  double MinDistance(std::span<const double> x, int* nearest) const {
    const Eigen::Index d = means[0].size();
    if (static_cast<Eigen::Index>(x.size()) != d) throw InvalidArgument("sample dimension differs");
    const Eigen::Map<const Vector> xv(x.data(), d);
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t k = 0; k < means.size(); ++k) {
      const Vector diff = xv - means[k];
      const double d2 = diff.dot(precisions[k] * diff);
      if (d2 < best) {
        best = d2;
        arg = static_cast<int>(k);
      }
    }
    if (nearest) *nearest = arg;
    return std::sqrt(best);
  }
};

double SquaredDistance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

// k-means++ seeding followed by Lloyd iterations; returns inertia.
double LloydRun(const Tensor& points, int k, int max_iterations, Rng& rng,
                std::vector<int>* labels, std::vector<double>* centers) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  const double* p = points.data().data();
  centers->assign(k * d, 0.0);
  std::vector<double> closest(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::copy_n(p + first * d, d, centers->data());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], SquaredDistance(p + i * d, centers->data() + (c - 1) * d, d));
      total += closest[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = Uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= closest[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    std::copy_n(p + pick * d, d, centers->data() + c * d);
  }

  const auto& kern = simd::Kernels();
  std::vector<double> dist(n * k);
  labels->assign(n, -1);
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);
  for (int it = 0; it < max_iterations; ++it) {
    kern.distances(p, n, centers->data(), k, d, dist.data());
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = dist.data() + i * k;
      const int arg = static_cast<int>(std::min_element(row, row + k) - row);
      if (arg != (*labels)[i]) {
        (*labels)[i] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = (*labels)[i];
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += p[i * d + j];
    }
    for (int c = 0; c < k; ++c) {
      // An emptied cluster keeps its previous center.
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) (*centers)[c * d + j] = sums[c * d + j] / counts[c];
    }
  }
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    inertia += SquaredDistance(p + i * d, centers->data() + (*labels)[i] * d, d);
  }
  return inertia;
}

std::vector<double> Histogram(const std::vector<int>& labels, std::size_t begin, std::size_t end,
                              int k, double epsilon) {
  std::vector<double> h(k, epsilon);
  for (std::size_t i = begin; i < end; ++i) h[labels[i]] += 1.0;
  const double total = std::accumulate(h.begin(), h.end(), 0.0);
  for (auto& v : h) v /= total;
  return h;
}

Tensor Subsample(const Tensor& t, std::size_t m, Rng& rng) {
  const std::size_t n = t.rows();
  if (n <= m) return t;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, n - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  Tensor out = Tensor::Matrix(m, t.cols());
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(t.row(idx[i]).data(), t.cols(), out.row(i).data());
  }
  return out;
}

std::string Fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

FrechetResult FrechetDistance(const Tensor& generated, const Tensor& reference) {
  CheckSamples(generated, "generated set");
  CheckSamples(reference, "reference set");
  const std::size_t d = generated.cols();
  if (reference.cols() != d) throw InvalidArgument("sample sets differ in dimension");
  if (generated.rows() < d + 1 || reference.rows() < d + 1) {
    throw InvalidArgument("Frechet distance needs at least D + 1 samples per set");
  }
  Vector mg, mr;
  Matrix sg, sr;
  MeanAndCovariance(generated, &mg, &sg);
  MeanAndCovariance(reference, &mr, &sr);
  FrechetResult res;
  const Matrix root_r = SqrtPsd(sr, &res.rank_deficient);
  const Matrix inner = root_r * sg * root_r;
  const Matrix cross = SqrtPsd(0.5 * (inner + inner.transpose()), &res.rank_deficient);
  const double value = (mg - mr).squaredNorm() + sg.trace() + sr.trace() - 2.0 * cross.trace();
  res.distance = std::max(value, 0.0);
  return res;
}

std::vector<int> KMeans(const Tensor& points, int clusters, int restarts, int max_iterations,
                        std::uint64_t seed, Tensor* centers) {
  CheckSamples(points, "point set");
  if (clusters < 1) throw InvalidArgument("cluster count must be positive");
  if (restarts < 1 || max_iterations < 1) throw InvalidArgument("k-means needs restarts and iterations");
  const int k = static_cast<int>(std::min<std::size_t>(clusters, points.rows()));
  std::vector<int> best_labels, labels;
  std::vector<double> best_centers, c;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng = MakeRng(seed, r);
    const double inertia = LloydRun(points, k, max_iterations, rng, &labels, &c);
    if (inertia < best) {
      best = inertia;
      best_labels = labels;
      best_centers = c;
    }
  }
  if (centers) *centers = Tensor::Matrix(k, points.cols(), best_centers);
  return best_labels;
}

std::vector<PrdPoint> PrdFromHistograms(const std::vector<double>& generated,
                                        const std::vector<double>& reference, int angles,
                                        double epsilon) {
  if (generated.size() != reference.size() || generated.empty()) {
    throw InvalidArgument("histograms must be nonempty and of equal length");
  }
  if (angles < 2) throw InvalidArgument("PRD needs at least two angles");
  std::vector<PrdPoint> curve(angles);
  const double lo = epsilon;
  const double hi = M_PI / 2.0 - epsilon;
  for (int a = 0; a < angles; ++a) {
    const double slope = std::tan(lo + (hi - lo) * a / (angles - 1));
    double precision = 0.0;
    for (std::size_t i = 0; i < generated.size(); ++i) {
      precision += std::min(reference[i] * slope, generated[i]);
    }
    const double recall = precision / slope;
    curve[a] = {std::clamp(precision, 0.0, 1.0), std::clamp(recall, 0.0, 1.0)};
  }
  std::sort(curve.begin(), curve.end(), [](const PrdPoint& x, const PrdPoint& y) {
    return x.recall != y.recall ? x.recall < y.recall : x.precision > y.precision;
  });
  for (int i = angles - 2; i >= 0; --i) {
    curve[i].precision = std::max(curve[i].precision, curve[i + 1].precision);
  }
  return curve;
}

std::vector<PrdPoint> PrdCurve(const Tensor& generated, const Tensor& reference,
                               const PrdOptions& options) {
  CheckSamples(generated, "generated set");
  CheckSamples(reference, "reference set");
  if (generated.cols() != reference.cols()) throw InvalidArgument("sample sets differ in dimension");
  if (options.clusters < 2) throw InvalidArgument("PRD needs at least two clusters");
  const std::size_t ng = generated.rows();
  const std::size_t n = ng + reference.rows();
  Tensor all = Tensor::Matrix(n, generated.cols());
  std::copy(generated.values().begin(), generated.values().end(), all.values().begin());
  std::copy(reference.values().begin(), reference.values().end(),
            all.values().begin() + generated.size());
  const auto labels =
      KMeans(all, options.clusters, options.restarts, options.max_iterations, options.seed);
  const int k = static_cast<int>(std::min<std::size_t>(options.clusters, n));
  return PrdFromHistograms(Histogram(labels, 0, ng, k, options.epsilon),
                           Histogram(labels, ng, n, k, options.epsilon), options.angles,
                           options.epsilon);
}

std::vector<double> RecallAtPrecision(const std::vector<PrdPoint>& curve, int grid) {
  if (grid < 2) throw InvalidArgument("precision grid needs at least two points");
  std::vector<double> out(grid, 0.0);
  for (int g = 0; g < grid; ++g) {
    const double p = static_cast<double>(g) / (grid - 1);
    for (const auto& pt : curve) {
      if (pt.precision >= p - 1e-12) out[g] = std::max(out[g], pt.recall);
    }
  }
  return out;
}

double MinMahalanobis(const MixtureSpec& mixture, std::span<const double> x, int* nearest) {
  return MixtureGeometry(mixture).MinDistance(x, nearest);
}

double ThreeSigmaCoverage(const Tensor& samples, const MixtureSpec& mixture, double radius) {
  CheckSamples(samples, "sample set");
  const MixtureGeometry geo(mixture);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    if (geo.MinDistance(samples.row(i), nullptr) <= radius) ++inside;
  }
  return static_cast<double>(inside) / samples.rows();
}

double FarFraction(const Tensor& samples, const MixtureSpec& mixture, double radius) {
  return 1.0 - ThreeSigmaCoverage(samples, mixture, radius);
}

ComponentBalance ComputeComponentBalance(const Tensor& samples, const MixtureSpec& mixture) {
  CheckSamples(samples, "sample set");
  const MixtureGeometry geo(mixture);
  ComponentBalance out;
  out.weights.assign(mixture.components(), 0.0);
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    int k = 0;
    geo.MinDistance(samples.row(i), &k);
    out.weights[k] += 1.0;
  }
  const double total = std::accumulate(mixture.weights.begin(), mixture.weights.end(), 0.0);
  for (int k = 0; k < static_cast<int>(mixture.components()); ++k) {
    out.weights[k] /= samples.rows();
    const double dev = mixture.weights[k] / total - out.weights[k];
    out.deficit.push_back(dev);
    out.max_deviation = std::max(out.max_deviation, std::abs(dev));
  }
  return out;
}

EnergyTestResult EnergyTest(const Tensor& a, const Tensor& b, const EnergyTestOptions& options) {
  CheckSamples(a, "first set");
  CheckSamples(b, "second set");
  if (a.cols() != b.cols()) throw InvalidArgument("sample sets differ in dimension");
  if (options.permutations < 1 || options.max_rows < 2) {
    throw InvalidArgument("energy test needs permutations and at least two rows");
  }
  Rng rng = MakeRng(options.seed);
  const Tensor sa = Subsample(a, options.max_rows, rng);
  const Tensor sb = Subsample(b, options.max_rows, rng);
  const std::size_t na = sa.rows();
  const std::size_t nb = sb.rows();
  const std::size_t n = na + nb;
  const std::size_t d = a.cols();
  std::vector<double> pooled(n * d);
  std::copy(sa.values().begin(), sa.values().end(), pooled.begin());
  std::copy(sb.values().begin(), sb.values().end(), pooled.begin() + na * d);
  std::vector<double> dist(n * n);
  const auto& kern = simd::Kernels();
  kern.distances(pooled.data(), n, pooled.data(), n, d, dist.data());
  double total = 0.0;
  for (double v : dist) total += v;

  std::vector<double> in_a(n), in_b(n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto statistic = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      in_a[perm[i]] = i < na ? 1.0 : 0.0;
      in_b[perm[i]] = i < na ? 0.0 : 1.0;
    }
    double saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = dist.data() + i * n;
      if (in_a[i] != 0.0) {
        saa += kern.dot(row, in_a.data(), n);
      } else {
        sbb += kern.dot(row, in_b.data(), n);
      }
    }
    const double sab = 0.5 * (total - saa - sbb);
    const double fa = static_cast<double>(na), fb = static_cast<double>(nb);
    const double e = 2.0 * sab / (fa * fb) - saa / (fa * fa) - sbb / (fb * fb);
    return e * fa * fb / (fa + fb);
  };
  EnergyTestResult res;
  res.statistic = statistic();
  int exceed = 0;
  for (int p = 0; p < options.permutations; ++p) {
    std::shuffle(perm.begin(), perm.end(), rng);
    if (statistic() >= res.statistic) ++exceed;
  }
  res.p_value = (1.0 + exceed) / (1.0 + options.permutations);
  return res;
}

MomentComparison CompareMoments(const Tensor& a, const Tensor& b) {
  CheckSamples(a, "first set");
  CheckSamples(b, "second set");
  if (a.cols() != b.cols()) throw InvalidArgument("sample sets differ in dimension");
  if (a.rows() < 2 || b.rows() < 2) throw InvalidArgument("moment comparison needs two rows per set");
  const std::size_t d = a.cols();
  struct Stats {
    Vector mean, mean_se2;
    Matrix cov, cov_se2;
  };
  auto stats = [d](const Tensor& t) {
    const RowMap x = AsMatrix(t);
    const double n = static_cast<double>(t.rows());
    Stats s;
    s.mean = x.colwise().mean().transpose();
    const Matrix c = x.rowwise() - s.mean.transpose();
    s.mean_se2 = (c.array().square().colwise().sum() / (n - 1.0) / n).transpose();
    s.cov.resize(d, d);
    s.cov_se2.resize(d, d);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < d; ++k) {
        const Vector prod = c.col(j).cwiseProduct(c.col(k));
        const double m = prod.mean();
        s.cov(j, k) = m;
        s.cov_se2(j, k) = (prod.array() - m).square().sum() / (n - 1.0) / n;
      }
    }
    return s;
  };
  const Stats sa = stats(a);
  const Stats sb = stats(b);
  MomentComparison out;
  for (std::size_t j = 0; j < d; ++j) {
    const double se = std::sqrt(sa.mean_se2[j] + sb.mean_se2[j]);
    out.max_mean_z = std::max(out.max_mean_z, std::abs(sa.mean[j] - sb.mean[j]) / se);
    for (std::size_t k = 0; k < d; ++k) {
      const double cse = std::sqrt(sa.cov_se2(j, k) + sb.cov_se2(j, k));
      out.max_cov_z = std::max(out.max_cov_z, std::abs(sa.cov(j, k) - sb.cov(j, k)) / cse);
    }
  }
  return out;
}

std::string EvalReport::ToJson() const {
  nlohmann::json j;
  j["frechet"] = frechet;
  j["frechet_rank_deficient"] = frechet_rank_deficient;
  nlohmann::json prd_json = nlohmann::json::array();
  for (const auto& p : prd) prd_json.push_back({p.precision, p.recall});
  j["prd"] = prd_json;
  if (has_mixture) {
    j["three_sigma_coverage"] = three_sigma_coverage;
    j["coverage_ceiling"] = coverage_ceiling;
    j["far_fraction"] = far_fraction;
    j["component_balance"] = {{"weights", balance.weights},
                              {"deficit", balance.deficit},
                              {"max_deviation", balance.max_deviation}};
  }
  return j.dump(2);
}

EvalReport Evaluate(const Tensor& generated, const Tensor& reference, const MixtureSpec* mixture,
                    const EvalOptions& options) {
  EvalReport r;
  const FrechetResult f = FrechetDistance(generated, reference);
  r.frechet = f.distance;
  r.frechet_rank_deficient = f.rank_deficient;
  r.prd = PrdCurve(generated, reference, options.prd);
  if (mixture) {
    r.has_mixture = true;
    r.three_sigma_coverage = ThreeSigmaCoverage(generated, *mixture);
    r.coverage_ceiling = ThreeSigmaCoverage(reference, *mixture);
    r.far_fraction = FarFraction(generated, *mixture, options.far_radius);
    r.balance = ComputeComponentBalance(generated, *mixture);
  }
  return r;
}

void WritePrdCsv(const std::vector<PrdPoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << "precision,recall\n";
  for (const auto& p : curve) out << Fmt(p.precision, "%.6f") << ',' << Fmt(p.recall, "%.6f") << '\n';
}

std::string ScatterSvg(const Tensor& samples, const MixtureSpec* mixture, const std::string& title) {
  CheckSamples(samples, "sample set");
  if (samples.cols() < 2) throw InvalidArgument("scatter plot needs two columns");
  const double size = 480.0, pad = 30.0;
  double xmin, xmax, ymin, ymax;
  if (mixture) {
    xmin = ymin = std::numeric_limits<double>::infinity();
    xmax = ymax = -xmin;
    for (int k = 0; k < static_cast<int>(mixture->components()); ++k) {
      const double sx = 5.0 * std::sqrt(mixture->covariances[k].at(0, 0));
      const double sy = 5.0 * std::sqrt(mixture->covariances[k].at(1, 1));
      xmin = std::min(xmin, mixture->means[k][0] - sx);
      xmax = std::max(xmax, mixture->means[k][0] + sx);
      ymin = std::min(ymin, mixture->means[k][1] - sy);
      ymax = std::max(ymax, mixture->means[k][1] + sy);
    }
  } else {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
      xs.push_back(samples.at(i, 0));
      ys.push_back(samples.at(i, 1));
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const std::size_t lo = xs.size() / 100, hi = xs.size() - 1 - xs.size() / 100;
    xmin = xs[lo];
    xmax = xs[hi];
    ymin = ys[lo];
    ymax = ys[hi];
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
  auto px = [&](double x) { return pad + (x - cx + 0.5 * span) / span * size; };
  auto py = [&](double y) { return pad + (cy + 0.5 * span - y) / span * size; };
  const double scale = size / span;

  std::ostringstream s;
  const double w = size + 2 * pad;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << w + 10
    << "\" viewBox=\"0 0 " << w << ' ' << w + 10 << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
    << "</text>\n";
  s << "<g fill=\"#1f77b4\" fill-opacity=\"0.45\">\n";
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const double x = px(samples.at(i, 0)), y = py(samples.at(i, 1));
    if (x < pad || x > pad + size || y < pad || y > pad + size) continue;
    s << "<circle cx=\"" << Fmt(x) << "\" cy=\"" << Fmt(y) << "\" r=\"1.5\"/>\n";
  }
  s << "</g>\n";
  if (mixture) {
    s << "<g fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\">\n";
    for (int k = 0; k < static_cast<int>(mixture->components()); ++k) {
      Eigen::Matrix2d cov;
      const Tensor& c = mixture->covariances[k];
      cov << c.at(0, 0), c.at(0, 1), c.at(1, 0), c.at(1, 1);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
      const Eigen::Vector2d ev = es.eigenvalues();
      const Eigen::Vector2d major = es.eigenvectors().col(1);
      // SVG y points down, so the rotation flips sign.
      const double angle = -std::atan2(major[1], major[0]) * 180.0 / M_PI;
      const double ex = px(mixture->means[k][0]), ey = py(mixture->means[k][1]);
      s << "<ellipse cx=\"" << Fmt(ex) << "\" cy=\"" << Fmt(ey) << "\" rx=\""
        << Fmt(3.0 * std::sqrt(std::max(ev[1], 0.0)) * scale) << "\" ry=\""
        << Fmt(3.0 * std::sqrt(std::max(ev[0], 0.0)) * scale) << "\" transform=\"rotate("
        << Fmt(angle) << ' ' << Fmt(ex) << ' ' << Fmt(ey) << ")\"/>\n";
    }
    s << "</g>\n";
  }
  s << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << size << "\" height=\"" << size
    << "\" fill=\"none\" stroke=\"#444\"/>\n</svg>\n";
  return s.str();
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

}  // namespace rsde
