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

// Synthetic benchmarks (corrupted Gaussian mixtures) and the tabular
// missing-value pipeline that turns a masked table into (sample, risk) pairs.

#ifndef RSDE_DATAGEN_H_
#define RSDE_DATAGEN_H_

#include <cstdint>
#include <vector>

#include "rsde/dataset.h"
#include "rsde/noise.h"
#include "rsde/rng.h"
#include "rsde/tensor.h"

namespace rsde {

struct MixtureSpec {
  std::vector<std::vector<double>> means;
  std::vector<Tensor> covariances;  // D x D, symmetric positive definite
  std::vector<double> weights;
  // Probability that a draw from component k is corrupted.
  std::vector<double> corruption;
  NoiseKind noise = NoiseKind::kGaussian;
  // Risk of a corrupted draw is uniform on [risk_low, risk_high] (equal
  // bounds give a constant) and is applied to every coordinate.
  double risk_low = 1.0;
  double risk_high = 1.0;

  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
  std::size_t components() const { return means.size(); }
  // Throws InvalidArgument when the invariants fail.
  void Validate() const;
};

// Four equal-weight isotropic components at (+-4, +-4) with covariance 0.5 I;
// the (+4, +4) component is corrupted with probability 0.95 and the others
// with probability 0.1, at constant risk 1.
MixtureSpec DefaultMixture(NoiseKind noise = NoiseKind::kGaussian);

struct MixtureDraw {
  Dataset data;
  Tensor clean;                 // draws before corruption
  std::vector<int> component;   // source component per row
};

// Clean draws use stream MixSeed(seed, 0) and corruption uses
// MixSeed(seed, 1), so the clean part is shared with SampleMixture.
MixtureDraw GenerateMixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);

// n clean draws (N x D) from the mixture.
Tensor SampleMixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed,
                     std::vector<int>* component = nullptr);

struct TabularPipelineSpec {
  double mask_fraction = 0.05;
  int neighbors = 10;
};

struct MaskedTable {
  Tensor values;               // N x D; masked cells hold unspecified values
  std::vector<char> missing;   // N x D, 1 = missing

  std::size_t missing_count() const;
};

// Independent Bernoulli(fraction) masking of every cell.
MaskedTable MaskTable(const Tensor& table, double fraction, Rng& rng);

// Replaces each missing cell by the median of that column over its k nearest
// rows (distance over mutually observed columns, scaled by D / count) and
// sets the cell's risk to the median absolute deviation of those neighbor
// values from the imputed median. Observed cells get zero risk.
Dataset KnnImputeWithRisk(const MaskedTable& table, const TabularPipelineSpec& spec);

}  // namespace rsde

#endif  // RSDE_DATAGEN_H_
