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

// Command-line front end. Exit status: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "rsde/config.h"
#include "rsde/datagen.h"
#include "rsde/dataset.h"
#include "rsde/error.h"
#include "rsde/experiment.h"
#include "rsde/metrics.h"
#include "rsde/rng.h"
#include "rsde/stability_lab.h"

namespace rsde {
namespace {

namespace fs = std::filesystem;

constexpr int kUsageError = 2;

struct Globals {
  int threads = 0;  // 0: take RSDE_THREADS, else 1
  bool deterministic = false;
  bool quiet = false;
};

RunOptions Options(const Globals& g) {
  RunOptions o;
  o.threads = g.threads;
  if (o.threads <= 0) {
    o.threads = 1;
    if (const char* env = std::getenv("RSDE_THREADS")) {
      try {
        o.threads = std::stoi(env);
      } catch (const std::exception&) {
        throw ConfigurationError(std::string("RSDE_THREADS must be a positive integer, got '") + env + "'");
      }
      if (o.threads < 1) throw ConfigurationError("RSDE_THREADS must be a positive integer");
    }
  }
  o.deterministic = g.deterministic;
  if (!g.quiet) o.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
  return o;
}

void Parent(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  if (!p.empty()) fs::create_directories(p);
}

ExperimentConfig ConfigOrDefault(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : LoadConfig(path);
}

// "<stem>-base.ckpt" next to the regressor checkpoint.
std::string BasePath(const std::string& checkpoint) {
  fs::path p(checkpoint);
  return (p.parent_path() / (p.stem().string() + "-base" + p.extension().string())).string();
}

void Say(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

struct GenerateArgs {
  std::string config, out, clean;
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
};

void GenerateData(const GenerateArgs& a, const Globals& g) {
  ExperimentConfig c = ConfigOrDefault(a.config);
  if (a.count) c.data.count = *a.count;
  if (a.seed) c.seed = *a.seed;
  if (c.data.source != "mixture") throw ConfigurationError("generate-data needs data.source = \"mixture\"");
  c.Validate();
  Tensor reference;
  const Dataset data = LoadOrGenerateData(c, a.clean.empty() ? nullptr : &reference);
  Parent(a.out);
  WriteDatasetCsv(a.out, data);
  if (!a.clean.empty()) {
    Parent(a.clean);
    WriteSamplesCsv(a.clean, reference);
  }
  Say(g, "wrote " + std::to_string(data.size()) + " rows (" +
             std::to_string(data.size() - data.clean_count()) + " risky) to " + a.out);
}

struct ImputeArgs {
  std::string input, out;
  double mask_fraction = 0.05;
  int neighbors = 10;
  std::uint64_t seed = 0;
  bool mask = true;
};

void Impute(const ImputeArgs& a, const Globals& g) {
  const CsvTable table = ReadCsv(a.input);
  MaskedTable masked;
  if (table.any_missing() || !a.mask) {
    masked.values = table.values;
    masked.missing = table.missing;
    if (masked.missing.empty()) masked.missing.assign(table.values.size(), 0);
  } else {
    Rng rng = MakeRng(a.seed);
    masked = MaskTable(table.values, a.mask_fraction, rng);
  }
  TabularPipelineSpec spec;
  spec.mask_fraction = a.mask_fraction;
  spec.neighbors = a.neighbors;
  const Dataset data = KnnImputeWithRisk(masked, spec);
  Parent(a.out);
  WriteDatasetCsv(a.out, data);
  Say(g, "imputed " + std::to_string(masked.missing_count()) + " cells; wrote " + a.out);
}

struct TrainArgs {
  std::string config, method, data, out, loss;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
};

void TrainCommand(const TrainArgs& a, const Globals& g) {
  ExperimentConfig c = ConfigOrDefault(a.config);
  if (a.steps) c.train.steps = *a.steps;
  if (a.seed) c.seed = *a.seed;
  c.Validate();
  const Method method = ParseMethod(a.method);
  const Dataset data = a.data.empty() ? LoadOrGenerateData(c) : ReadDatasetCsv(a.data);
  SdeSpec spec = c.sde;
  spec.dim = data.dim();
  Say(g, "training " + a.method + " on " + std::to_string(data.size()) + " rows for " +
             std::to_string(c.train.steps) + " steps");
  const TrainedMethod trained = TrainMethod(method, data, c);
  Parent(a.out);
  const auto meta = CheckpointMetadata(method, spec, c.noise);
  if (method == Method::kRiskRegressor) {
    SaveCheckpoint(a.out, trained.regressor.net, meta);
    SaveCheckpoint(BasePath(a.out), trained.base, CheckpointMetadata(Method::kStandard, spec, c.noise));
  } else {
    SaveCheckpoint(a.out, trained.model, meta);
  }
  if (!a.loss.empty()) {
    Parent(a.loss);
    trained.trace.WriteCsv(a.loss);
  }
  Say(g, "wrote " + a.out);
}

struct SampleArgs {
  std::string checkpoint, out;
  std::size_t count = 5000;
  int steps = 1000;
  std::uint64_t seed = 0;
  double guidance_scale = 1.0;
};

void SampleCommand(const SampleArgs& a, const Globals& g) {
  const Checkpoint ckpt = LoadCheckpoint(a.checkpoint);
  TrainedMethod trained;
  trained.method = MethodFromMetadata(ckpt.metadata);
  if (trained.method == Method::kRiskRegressor) {
    trained.regressor = RiskRegressor{ckpt.model, true};
    trained.base = LoadCheckpoint(BasePath(a.checkpoint)).model;
  } else {
    trained.model = ckpt.model;
  }
  ExperimentConfig c;
  c.sde = SdeFromMetadata(ckpt.metadata);
  c.seed = a.seed;
  c.sample.steps = a.steps;
  c.sample.guidance_scale = a.guidance_scale;
  if (a.steps < 1) throw ConfigurationError("--steps must be at least 1");
  if (!(a.guidance_scale >= 0.0)) throw ConfigurationError("--guidance-scale must be nonnegative");
  const Tensor samples = SampleMethod(trained, c, Options(g), a.count);
  Parent(a.out);
  WriteSamplesCsv(a.out, samples);
  Say(g, "wrote " + std::to_string(samples.rows()) + " samples to " + a.out);
}

struct EvaluateArgs {
  std::string samples, reference, config, out, prd, plot;
  bool mixture = false;
};

void EvaluateCommand(const EvaluateArgs& a, const Globals& g) {
  const ExperimentConfig c = ConfigOrDefault(a.config);
  const Tensor samples = ReadSamplesCsv(a.samples);
  const Tensor reference = ReadSamplesCsv(a.reference);
  const MixtureSpec mixture = c.Mixture();
  const bool use_mixture = (a.mixture || !a.config.empty()) && c.data.source == "mixture" &&
                           samples.cols() == static_cast<std::size_t>(mixture.dim());
  EvalOptions eo;
  eo.prd.clusters = c.eval.prd_clusters;
  eo.prd.restarts = c.eval.prd_restarts;
  eo.prd.angles = c.eval.prd_angles;
  eo.prd.seed = MixSeed(c.seed, 3);
  eo.far_radius = c.eval.far_radius;
  const EvalReport report = Evaluate(samples, reference, use_mixture ? &mixture : nullptr, eo);
  if (a.out.empty()) {
    std::cout << report.ToJson();
  } else {
    Parent(a.out);
    WriteTextFile(a.out, report.ToJson());
  }
  if (!a.prd.empty()) {
    Parent(a.prd);
    WritePrdCsv(report.prd, a.prd);
  }
  if (!a.plot.empty()) {
    Parent(a.plot);
    WriteTextFile(a.plot, ScatterSvg(samples, use_mixture ? &mixture : nullptr,
                                     fs::path(a.samples).stem().string()));
  }
  Say(g, "frechet distance " + std::to_string(report.frechet));
}

struct ScanArgs {
  std::string config, out, coefficients = "risk-sensitive";
  double risk = 1.0;
};

void ScanCommand(const ScanArgs& a, const Globals& g) {
  const ExperimentConfig c = ConfigOrDefault(a.config);
  const MixtureSpec mixture = c.Mixture();
  SdeSpec spec = c.sde;
  spec.dim = mixture.dim();
  if (!(a.risk > 0.0)) throw ConfigurationError("--risk must be positive");
  const std::vector<double> rv(spec.dim, a.risk);
  const NoiseModel noise = c.noise == NoiseKind::kCauchy ? NoiseModel::Cauchy(rv) : NoiseModel::Gaussian(rv);
  ScanOptions so;
  so.times = c.stability.times;
  so.samples = c.stability.samples;
  so.bootstrap = c.stability.bootstrap;
  so.quantile = c.stability.quantile;
  so.seed = MixSeed(c.seed, 40);
  if (a.coefficients == "risk-sensitive") {
    so.rule = CoefficientRule::kRiskSensitive;
  } else if (a.coefficients == "unadjusted") {
    so.rule = CoefficientRule::kUnadjusted;
  } else {
    throw ConfigurationError("--coefficients must be risk-sensitive or unadjusted");
  }
  const auto scan = InstabilityScan(spec, mixture, noise, so);
  Parent(a.out);
  WriteScanCsv(scan, a.out);
  for (const auto& p : scan) {
    char line[160];
    std::snprintf(line, sizeof(line), "t=%.3f instability=%.5f threshold=%.5f %s%s", p.t, p.instability,
                  p.threshold, p.exceeds() ? "exceeds" : "within", p.stable_in_theory ? "" : " (unstable)");
    Say(g, line);
  }
}

struct ReportArgs {
  std::string config, out;
  bool scans = true;
};

void ReportCommand(const ReportArgs& a, const Globals& g) {
  const ExperimentConfig c = ConfigOrDefault(a.config);
  const std::string dir = a.out.empty() ? c.output : a.out;
  const auto result = StabilityReport(c, dir, a.scans);
  for (const auto& row : result.t_star) {
    char line[128];
    if (row.interval.empty) {
      std::snprintf(line, sizeof(line), "r=%g: empty stability interval", row.risk);
    } else {
      std::snprintf(line, sizeof(line), "r=%g: t* = %.6f", row.risk, row.interval.t_star);
    }
    Say(g, line);
  }
  Say(g, "wrote " + dir);
}

struct RunArgs {
  std::string config, output;
};

void RunCommand(const RunArgs& a, const Globals& g) {
  ExperimentConfig c = LoadConfig(a.config);
  if (!a.output.empty()) c.output = a.output;
  const RunSummary s = RunExperiment(c, Options(g));
  Say(g, "run " + s.config_hash + " written to " + s.directory);
}

int Main(int argc, char** argv) {
  CLI::App app{"Risk-sensitive diffusion models: training, sampling and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "Sampler threads (default: $RSDE_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", g.deterministic, "Single-threaded, bit-reproducible execution");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate-data", "Draw a corrupted mixture dataset");
  generate->add_option("--config", gen.config, "Experiment config (TOML)")->check(CLI::ExistingFile);
  generate->add_option("--out", gen.out, "Dataset CSV (x_*, r_*)")->required();
  generate->add_option("--clean-out", gen.clean, "Also write clean reference draws here");
  generate->add_option("--count", gen.count, "Rows to draw");
  generate->add_option("--seed", gen.seed, "Seed");

  ImputeArgs imp;
  auto* impute = app.add_subcommand("impute", "KNN imputation of a numeric table with risk");
  impute->add_option("--input", imp.input, "Numeric CSV with header; empty fields are missing")
      ->required()
      ->check(CLI::ExistingFile);
  impute->add_option("--out", imp.out, "Dataset CSV (x_*, r_*)")->required();
  impute->add_option("--mask-fraction", imp.mask_fraction, "Cells masked when the table is complete")
      ->check(CLI::Range(0.0, 1.0));
  impute->add_option("--neighbors", imp.neighbors, "Neighbor count")->check(CLI::PositiveNumber);
  impute->add_option("--seed", imp.seed, "Masking seed");
  impute->add_flag("!--no-mask", imp.mask, "Only impute cells that are already missing");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one method and write a checkpoint");
  train->add_option("--config", tr.config, "Experiment config (TOML)")->check(CLI::ExistingFile);
  train->add_option("--method", tr.method, "Training method")
      ->required()
      ->check(CLI::IsMember(
          {"standard", "risk-variable", "classifier-free", "risk-regressor", "risk-sensitive"}));
  train->add_option("--data", tr.data, "Dataset CSV; generated from the config when absent")
      ->check(CLI::ExistingFile);
  train->add_option("--out", tr.out, "Checkpoint path")->required();
  train->add_option("--loss", tr.loss, "Per-step loss CSV");
  train->add_option("--steps", tr.steps, "Override train.steps")->check(CLI::PositiveNumber);
  train->add_option("--seed", tr.seed, "Override the seed");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw samples from a checkpoint");
  sample->add_option("--checkpoint", sa.checkpoint, "Checkpoint from `train`")
      ->required()
      ->check(CLI::ExistingFile);
  sample->add_option("--out", sa.out, "Samples CSV")->required();
  sample->add_option("--count", sa.count, "Number of samples")->check(CLI::PositiveNumber);
  sample->add_option("--steps", sa.steps, "Reverse-time steps")->check(CLI::PositiveNumber);
  sample->add_option("--seed", sa.seed, "Seed");
  sample->add_option("--guidance-scale", sa.guidance_scale, "Guidance strength for conditional methods")
      ->check(CLI::NonNegativeNumber);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score samples against a reference set");
  evaluate->add_option("--samples", ev.samples, "Samples CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--reference", ev.reference, "Clean reference CSV")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--config", ev.config, "Config whose mixture and PRD settings to use")
      ->check(CLI::ExistingFile);
  evaluate->add_flag("--mixture", ev.mixture, "Report mixture coverage for the default mixture");
  evaluate->add_option("--out", ev.out, "Report JSON (stdout when absent)");
  evaluate->add_option("--prd", ev.prd, "PRD curve CSV");
  evaluate->add_option("--plot", ev.plot, "Scatter SVG");

  ScanArgs sc;
  auto* scan = app.add_subcommand("instability-scan", "Measure perturbation instability over time");
  scan->add_option("--config", sc.config, "Experiment config (TOML)")->check(CLI::ExistingFile);
  scan->add_option("--risk", sc.risk, "Risk applied to every coordinate");
  scan->add_option("--coefficients", sc.coefficients, "risk-sensitive or unadjusted");
  scan->add_option("--out", sc.out, "Scan CSV")->required();

  ReportArgs rep;
  auto* report = app.add_subcommand("stability-report", "Stability thresholds over a risk grid");
  report->add_option("--config", rep.config, "Experiment config (TOML)")->check(CLI::ExistingFile);
  report->add_option("--out", rep.out, "Output directory (default: config output)");
  report->add_flag("!--no-scan", rep.scans, "Skip the Monte Carlo instability scans");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Full pipeline: data, training, sampling, metrics");
  run_cmd->add_option("--config", run.config, "Experiment config (TOML)")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--output", run.output, "Override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    (void)Options(g);  // rejects a malformed RSDE_THREADS up front
    if (*generate) GenerateData(gen, g);
    if (*impute) Impute(imp, g);
    if (*train) TrainCommand(tr, g);
    if (*sample) SampleCommand(sa, g);
    if (*evaluate) EvaluateCommand(ev, g);
    if (*scan) ScanCommand(sc, g);
    if (*report) ReportCommand(rep, g);
    if (*run_cmd) RunCommand(run, g);
  } catch (const ConfigurationError& e) {
    std::cerr << "rsde: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidArgument& e) {
    std::cerr << "rsde: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "rsde: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace rsde

int main(int argc, char** argv) { return rsde::Main(argc, argv); }
