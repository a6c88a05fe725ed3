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

#ifndef RSDE_CONFIG_H_
#define RSDE_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "rsde/baselines.h"
#include "rsde/datagen.h"
#include "rsde/sde.h"
#include "rsde/training.h"

namespace rsde {

struct DataSection {
  std::string source = "mixture";  // "mixture" or "csv"
  std::string path;                // dataset CSV when source = "csv"
  std::size_t count = 10000;
  std::vector<double> corruption = {0.95, 0.1, 0.1, 0.1};
  double risk_low = 1.0;
  double risk_high = 1.0;
  bool operator==(const DataSection&) const = default;
};

struct ModelSection {
  std::vector<int> hidden = {128, 128};
  std::string activation = "silu";
  int time_frequencies = 4;
  bool precondition = true;
  double data_scale = 1.0;
  bool operator==(const ModelSection&) const = default;
};

struct TrainSection {
  std::vector<std::string> methods = {"standard", "risk-sensitive"};
  int steps = 20000;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::string weighting = "risk-variance";
  double p_force = 0.0;
  double guard = 1e-4;
  double v_floor = 1e-5;
  double mask_probability = 0.1;
  bool operator==(const TrainSection&) const = default;
};

struct SampleSection {
  std::size_t count = 5000;
  int steps = 1000;
  double guidance_scale = 1.0;
  bool operator==(const SampleSection&) const = default;
};

struct EvalSection {
  std::size_t reference_count = 5000;
  int prd_clusters = 20;
  int prd_restarts = 10;
  int prd_angles = 1001;
  double far_radius = 6.0;
  bool operator==(const EvalSection&) const = default;
};

struct StabilitySection {
  std::vector<double> risks = {0.0, 0.5, 1.0, 2.0};
  std::vector<double> times = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::size_t samples = 100000;
  int bootstrap = 20;
  double quantile = 0.95;
  bool operator==(const StabilitySection&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output = "artifacts";
  SdeSpec sde;
  NoiseKind noise = NoiseKind::kGaussian;
  DataSection data;
  ModelSection model;
  TrainSection train;
  SampleSection sample;
  EvalSection eval;
  StabilitySection stability;

  // Semantic checks; referenced files must exist.
  void Validate() const;

  MixtureSpec Mixture() const;
  ModelConfig BaseModel() const;
  TrainConfig Training() const;
  std::vector<Method> Methods() const;
};

bool operator==(const SdeSpec& a, const SdeSpec& b);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

// Strict: unknown sections or keys and mistyped values raise ConfigurationError
// carrying "name:line:column: message". Missing keys keep their defaults.
ExperimentConfig ParseConfig(const std::string& text, const std::string& source_name = "<config>");
ExperimentConfig LoadConfig(const std::string& path);

// Every field is written, so ParseConfig(SerializeConfig(c)) == c.
std::string SerializeConfig(const ExperimentConfig& config);

// 64-bit FNV-1a over the serialized form.
std::uint64_t ConfigHash(const ExperimentConfig& config);
std::string HexHash(std::uint64_t hash);

}  // namespace rsde

#endif  // RSDE_CONFIG_H_
