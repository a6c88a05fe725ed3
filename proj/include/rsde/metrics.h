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

// Sample-quality metrics. Sample sets are n x D tensors.

#ifndef RSDE_METRICS_H_
#define RSDE_METRICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "rsde/datagen.h"
#include "rsde/tensor.h"

namespace rsde {

struct FrechetResult {
  double distance = 0.0;
  // Set when a covariance needed eigenvalue clamping beyond round-off.
  bool rank_deficient = false;
};

// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_b^1/2 S_a S_b^1/2)^1/2).
// Requires at least D + 1 rows in each set.
FrechetResult FrechetDistance(const Tensor& generated, const Tensor& reference);

struct PrdPoint {
  double precision;
  double recall;
};

struct PrdOptions {
  int clusters = 20;
  int restarts = 10;
  int max_iterations = 100;
  int angles = 1001;
  double epsilon = 1e-10;
  std::uint64_t seed = 0;
};

// Lloyd's k-means with k-means++ seeding; the restart with the lowest
// inertia wins. Returns one label per row.
std::vector<int> KMeans(const Tensor& points, int clusters, int restarts, int max_iterations,
                        std::uint64_t seed, Tensor* centers = nullptr);

// Precision/recall pairs from per-cluster histograms of the union,
// sorted by recall.
std::vector<PrdPoint> PrdCurve(const Tensor& generated, const Tensor& reference,
                               const PrdOptions& options = {});

// Same, from histograms directly (each summing to 1).
std::vector<PrdPoint> PrdFromHistograms(const std::vector<double>& generated,
                                        const std::vector<double>& reference, int angles,
                                        double epsilon);

// Highest recall among points with precision >= p, for p on a uniform grid
// of `grid` points in [0, 1]; 0 where no point qualifies.
std::vector<double> RecallAtPrecision(const std::vector<PrdPoint>& curve, int grid = 21);

// Minimum Mahalanobis distance from x to any component of the mixture.
double MinMahalanobis(const MixtureSpec& mixture, std::span<const double> x, int* nearest = nullptr);

// Fraction of rows within Mahalanobis distance `radius` (default 3) of the
// nearest component.
double ThreeSigmaCoverage(const Tensor& samples, const MixtureSpec& mixture, double radius = 3.0);

// Fraction of rows farther than `radius` from every component.
double FarFraction(const Tensor& samples, const MixtureSpec& mixture, double radius);

struct ComponentBalance {
  std::vector<double> weights;
  double max_deviation = 0.0;
  // target - observed for each component; positive means under-represented.
  std::vector<double> deficit;
};

ComponentBalance ComputeComponentBalance(const Tensor& samples, const MixtureSpec& mixture);

struct EnergyTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

struct EnergyTestOptions {
  // Each set is randomly subsampled to at most this many rows.
  std::size_t max_rows = 1000;
  int permutations = 500;
  std::uint64_t seed = 0;
};

// Two-sample energy-distance permutation test.
EnergyTestResult EnergyTest(const Tensor& a, const Tensor& b, const EnergyTestOptions& options = {});

struct MomentComparison {
  // Largest |difference| / standard error over mean entries and over
  // covariance entries.
  double max_mean_z = 0.0;
  double max_cov_z = 0.0;
};

// Compares sample means and covariances of two independent sets.
MomentComparison CompareMoments(const Tensor& a, const Tensor& b);

struct EvalReport {
  double frechet = 0.0;
  bool frechet_rank_deficient = false;
  std::vector<PrdPoint> prd;
  bool has_mixture = false;
  double three_sigma_coverage = 0.0;
  double coverage_ceiling = 0.0;
  double far_fraction = 0.0;
  ComponentBalance balance;

  std::string ToJson() const;
};

struct EvalOptions {
  PrdOptions prd;
  double far_radius = 6.0;
};

// `reference` is the clean data. When `mixture` is non-null the coverage,
// far-outlier fraction and component balance are filled in and the
// coverage ceiling is measured on the reference set.
EvalReport Evaluate(const Tensor& generated, const Tensor& reference, const MixtureSpec* mixture,
                    const EvalOptions& options = {});

void WritePrdCsv(const std::vector<PrdPoint>& curve, const std::string& path);

// Scatter plot of the first two columns, with three-sigma ellipses when a
// mixture is given.
std::string ScatterSvg(const Tensor& samples, const MixtureSpec* mixture, const std::string& title);
void WriteTextFile(const std::string& path, const std::string& text);

}  // namespace rsde

#endif  // RSDE_METRICS_H_
