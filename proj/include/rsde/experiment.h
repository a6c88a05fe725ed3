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

#ifndef RSDE_EXPERIMENT_H_
#define RSDE_EXPERIMENT_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rsde/baselines.h"
#include "rsde/config.h"
#include "rsde/metrics.h"
#include "rsde/stability_lab.h"

namespace rsde {

struct RunOptions {
  int threads = 1;
  // Forces single-threaded sampling.
  bool deterministic = false;
  std::function<void(const std::string&)> log;
};

// Checkpoint metadata carries the method and the SDE so `sample` needs no config.
std::map<std::string, std::string> CheckpointMetadata(Method method, const SdeSpec& spec,
                                                      NoiseKind noise);
SdeSpec SdeFromMetadata(const std::map<std::string, std::string>& metadata);
Method MethodFromMetadata(const std::map<std::string, std::string>& metadata);

// Models trained for one method. Guided methods keep what their sampler needs.
struct TrainedMethod {
  Method method = Method::kStandard;
  ScoreModel model;            // score network; joint or conditional for baselines
  RiskRegressor regressor;     // risk-regressor only
  ScoreModel base;             // unconditional score used with the regressor
  TrainingTrace trace;
};

Dataset LoadOrGenerateData(const ExperimentConfig& config, Tensor* clean_reference = nullptr);

// `standard` is reused as the regressor's base when given.
TrainedMethod TrainMethod(Method method, const Dataset& data, const ExperimentConfig& config,
                          const ScoreModel* standard = nullptr);

Tensor SampleMethod(const TrainedMethod& trained, const ExperimentConfig& config,
                    const RunOptions& options, std::size_t count);

struct RunSummary {
  std::string directory;
  std::string config_hash;
  std::map<std::string, EvalReport> reports;  // by method name
};

// Writes data/, checkpoints/, samples/, metrics/, plots/ and manifest.json.
RunSummary RunExperiment(const ExperimentConfig& config, const RunOptions& options = {});

struct TStarRow {
  double risk = 0.0;
  StabilityInterval interval;
};

struct StabilityReportResult {
  std::vector<TStarRow> t_star;
  std::map<double, std::vector<ScanPoint>> scans;  // nonzero risks only
};

// t* over the risk grid and instability scans; writes t_star.csv, scan.csv, t_star.svg.
StabilityReportResult StabilityReport(const ExperimentConfig& config, const std::string& directory,
                                      bool run_scans = true);

std::vector<TStarRow> TStarGrid(const SdeSpec& spec, NoiseKind noise, const std::vector<double>& risks,
                                int dim);

std::string LinePlotSvg(const std::vector<double>& x, const std::vector<double>& y,
                        const std::string& title, const std::string& x_label,
                        const std::string& y_label);

}  // namespace rsde

#endif  // RSDE_EXPERIMENT_H_
