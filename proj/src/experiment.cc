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

#include "rsde/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <optional>
#include <sstream>

#include "rsde/error.h"
#include "rsde/noise.h"
#include "rsde/rng.h"

namespace rsde {
namespace {

namespace fs = std::filesystem;

// Seed streams per artifact.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kReferenceStream = 2;
constexpr std::uint64_t kPrdStream = 3;
constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kTrainStream = 20;
constexpr std::uint64_t kSampleStream = 30;
constexpr std::uint64_t kScanStream = 40;

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double MetaNumber(const std::map<std::string, std::string>& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw InvalidArgument("checkpoint metadata lacks '" + key + "'");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw InvalidArgument("checkpoint metadata '" + key + "' is not a number");
  }
}

SdeSpec SpecFor(const ExperimentConfig& config, int dim) {
  SdeSpec spec = config.sde;
  spec.dim = dim;
  return spec;
}

std::uint64_t FileHash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void Log(const RunOptions& options, const std::string& msg) {
  if (options.log) options.log(msg);
}

}  // namespace

std::map<std::string, std::string> CheckpointMetadata(Method method, const SdeSpec& spec,
                                                      NoiseKind noise) {
  return {{"method", MethodName(method)},
          {"noise", NoiseKindName(noise)},
          {"sde.family", SdeFamilyName(spec.family)},
          {"sde.horizon", Fmt(spec.horizon)},
          {"sde.beta_min", Fmt(spec.beta_min)},
          {"sde.beta_max", Fmt(spec.beta_max)},
          {"sde.sigma_min", Fmt(spec.sigma_min)},
          {"sde.sigma_max", Fmt(spec.sigma_max)},
          {"sde.dim", std::to_string(spec.dim)}};
}

SdeSpec SdeFromMetadata(const std::map<std::string, std::string>& m) {
  SdeSpec spec;
  auto it = m.find("sde.family");
  if (it == m.end()) throw InvalidArgument("checkpoint metadata lacks 'sde.family'");
  spec.family = ParseSdeFamily(it->second);
  spec.horizon = MetaNumber(m, "sde.horizon");
  spec.beta_min = MetaNumber(m, "sde.beta_min");
  spec.beta_max = MetaNumber(m, "sde.beta_max");
  spec.sigma_min = MetaNumber(m, "sde.sigma_min");
  spec.sigma_max = MetaNumber(m, "sde.sigma_max");
  spec.dim = static_cast<int>(MetaNumber(m, "sde.dim"));
  spec.Validate();
  return spec;
}

Method MethodFromMetadata(const std::map<std::string, std::string>& m) {
  auto it = m.find("method");
  if (it == m.end()) throw InvalidArgument("checkpoint metadata lacks 'method'");
  return ParseMethod(it->second);
}

Dataset LoadOrGenerateData(const ExperimentConfig& config, Tensor* clean_reference) {
  if (config.data.source == "csv") {
    Dataset data = ReadDatasetCsv(config.data.path);
    if (clean_reference) {
      std::vector<double> rows;
      std::size_t n = 0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.clean(i)) continue;
        const auto row = data.x_row(i);
        rows.insert(rows.end(), row.begin(), row.end());
        ++n;
      }
      *clean_reference = n >= 3 ? Tensor::Matrix(n, data.dim(), rows) : data.x();
    }
    return data;
  }
  const MixtureSpec mixture = config.Mixture();
  MixtureDraw draw = GenerateMixture(mixture, config.data.count, MixSeed(config.seed, kDataStream));
  if (clean_reference) {
    *clean_reference =
        SampleMixture(mixture, config.eval.reference_count, MixSeed(config.seed, kReferenceStream));
  }
  return std::move(draw.data);
}

TrainedMethod TrainMethod(Method method, const Dataset& data, const ExperimentConfig& config,
                          const ScoreModel* standard) {
  const SdeSpec spec = SpecFor(config, data.dim());
  const auto id = static_cast<std::uint64_t>(method);
  TrainConfig tc = config.Training();
  tc.seed = MixSeed(config.seed, kTrainStream + id);
  const ScoreModel init =
      ScoreModel::Create(ModelConfigFor(method, data.dim(), config.BaseModel()), MixSeed(config.seed, kInitStream + id));

  TrainedMethod out;
  out.method = method;
  switch (method) {
    case Method::kStandard: {
      TrainResult r = TrainStandard(init, data, spec, tc);
      out.model = std::move(r.model);
      out.trace = std::move(r.trace);
      break;
    }
    case Method::kRiskSensitive: {
      TrainOptions opts;
      opts.objective = Objective::kRiskSensitive;
      opts.noise = config.noise;
      TrainResult r = Train(init, data, spec, tc, opts);
      out.model = std::move(r.model);
      out.trace = std::move(r.trace);
      break;
    }
    case Method::kRiskVariable: {
      TrainResult r = TrainRiskVariable(init, data, spec, tc);
      out.model = std::move(r.model);
      out.trace = std::move(r.trace);
      break;
    }
    case Method::kClassifierFree: {
      TrainResult r = TrainClassifierFree(init, data, spec, tc, config.train.mask_probability);
      out.model = std::move(r.model);
      out.trace = std::move(r.trace);
      break;
    }
    case Method::kRiskRegressor: {
      out.regressor = TrainRiskRegressor(init, data, spec, tc, &out.trace);
      if (standard) {
        out.base = *standard;
      } else {
        out.base = TrainMethod(Method::kStandard, data, config).model;
      }
      break;
    }
  }
  return out;
}

Tensor SampleMethod(const TrainedMethod& trained, const ExperimentConfig& config,
                    const RunOptions& options, std::size_t count) {
  const int dim = trained.method == Method::kRiskRegressor ? trained.base.config().data_dim
                  : trained.method == Method::kRiskVariable ? trained.model.config().data_dim / 2
                                                            : trained.model.config().data_dim;
  const SdeSpec spec = SpecFor(config, dim);
  SamplerConfig sc;
  sc.steps = config.sample.steps;
  sc.seed = MixSeed(config.seed, kSampleStream + static_cast<std::uint64_t>(trained.method));
  sc.threads = options.deterministic ? 1 : std::max(1, options.threads);
  GuidanceRule rule;
  rule.scale = config.sample.guidance_scale;
  switch (trained.method) {
    case Method::kStandard:
    case Method::kRiskSensitive:
      return ReverseSample(trained.model, spec, sc, count);
    case Method::kRiskVariable:
      rule.kind = GuidanceKind::kRiskVariable;
      rule.model = &trained.model;
      return DataBlock(GuidedReverseSample(rule, spec, sc, count), dim);
    case Method::kClassifierFree:
      rule.kind = GuidanceKind::kClassifierFree;
      rule.model = &trained.model;
      return GuidedReverseSample(rule, spec, sc, count);
    case Method::kRiskRegressor:
      rule.kind = GuidanceKind::kRiskRegressor;
      rule.model = &trained.base;
      rule.regressor = &trained.regressor;
      return GuidedReverseSample(rule, spec, sc, count);
  }
  throw InternalError("unhandled method");
}

RunSummary RunExperiment(const ExperimentConfig& config, const RunOptions& options) {
  config.Validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1fs",
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return std::string(buf);
  };

  const fs::path root(config.output);
  for (const char* sub : {"data", "checkpoints", "loss", "samples", "metrics", "plots"}) {
    fs::create_directories(root / sub);
  }
  RunSummary summary;
  summary.directory = root.string();
  summary.config_hash = HexHash(ConfigHash(config));
  WriteTextFile((root / "config.toml").string(), SerializeConfig(config));

  Tensor reference;
  const Dataset data = LoadOrGenerateData(config, &reference);
  const bool mixture_data = config.data.source == "mixture";
  const MixtureSpec mixture = config.Mixture();
  const MixtureSpec* mix = mixture_data && data.dim() == 2 ? &mixture : nullptr;
  WriteDatasetCsv((root / "data" / "data.csv").string(), data);
  WriteSamplesCsv((root / "data" / "reference.csv").string(), reference);
  if (data.dim() >= 2) {
    WriteTextFile((root / "plots" / "data.svg").string(), ScatterSvg(data.x(), mix, "data"));
  }
  Log(options, "data: " + std::to_string(data.size()) + " rows, " +
                   std::to_string(data.size() - data.clean_count()) + " risky");

  EvalOptions eo;
  eo.prd.clusters = config.eval.prd_clusters;
  eo.prd.restarts = config.eval.prd_restarts;
  eo.prd.angles = config.eval.prd_angles;
  eo.prd.seed = MixSeed(config.seed, kPrdStream);
  eo.far_radius = config.eval.far_radius;

  const SdeSpec spec = SpecFor(config, data.dim());
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  std::optional<ScoreModel> standard;
  for (Method method : config.Methods()) {
    const std::string name = MethodName(method);
    TrainedMethod trained = TrainMethod(method, data, config, standard ? &*standard : nullptr);
    Log(options, name + ": trained (" + elapsed() + ")");
    if (method == Method::kStandard) standard = trained.model;
    const auto meta = CheckpointMetadata(method, spec, config.noise);
    if (method == Method::kRiskRegressor) {
      SaveCheckpoint((root / "checkpoints" / (name + ".ckpt")).string(), trained.regressor.net, meta);
      SaveCheckpoint((root / "checkpoints" / (name + "-base.ckpt")).string(), trained.base,
                     CheckpointMetadata(Method::kStandard, spec, config.noise));
    } else {
      SaveCheckpoint((root / "checkpoints" / (name + ".ckpt")).string(), trained.model, meta);
    }
    trained.trace.WriteCsv((root / "loss" / (name + ".csv")).string());

    const Tensor samples = SampleMethod(trained, config, options, config.sample.count);
    Log(options, name + ": sampled (" + elapsed() + ")");
    WriteSamplesCsv((root / "samples" / (name + ".csv")).string(), samples);
    const EvalReport report = Evaluate(samples, reference, mix, eo);
    WriteTextFile((root / "metrics" / (name + ".json")).string(), report.ToJson());
    WritePrdCsv(report.prd, (root / "metrics" / (name + "_prd.csv")).string());
    if (samples.cols() >= 2) {
      WriteTextFile((root / "plots" / (name + ".svg")).string(), ScatterSvg(samples, mix, name));
    }
    metrics[name] = nlohmann::ordered_json::parse(report.ToJson());
    summary.reports[name] = report;
  }
  WriteTextFile((root / "metrics.json").string(), metrics.dump(2) + "\n");

  nlohmann::ordered_json manifest;
  manifest["config_hash"] = summary.config_hash;
  manifest["seed"] = config.seed;
  manifest["methods"] = config.train.methods;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  nlohmann::ordered_json listing = nlohmann::ordered_json::object();
  for (const auto& f : files) listing[fs::relative(f, root).generic_string()] = HexHash(FileHash(f));
  manifest["files"] = listing;
  WriteTextFile((root / "manifest.json").string(), manifest.dump(2) + "\n");
  Log(options, "done (" + elapsed() + ")");
  return summary;
}

std::vector<TStarRow> TStarGrid(const SdeSpec& spec, NoiseKind noise, const std::vector<double>& risks,
                                int dim) {
  std::vector<TStarRow> rows;
  for (double r : risks) {
    const std::vector<double> rv(dim, r);
    TStarRow row;
    row.risk = r;
    if (noise == NoiseKind::kCauchy && r > 0.0) {
      row.interval = GeneralStabilityInterval(spec, NoiseModel::Cauchy(rv));
    } else {
      row.interval = ComputeStabilityInterval(spec, rv);
    }
    rows.push_back(row);
  }
  return rows;
}

StabilityReportResult StabilityReport(const ExperimentConfig& config, const std::string& directory,
                                      bool run_scans) {
  config.Validate();
  const fs::path root(directory);
  fs::create_directories(root);
  const MixtureSpec mixture = config.Mixture();
  const SdeSpec spec = SpecFor(config, mixture.dim());

  StabilityReportResult out;
  out.t_star = TStarGrid(spec, config.noise, config.stability.risks, spec.dim);
  {
    std::ostringstream csv;
    csv << "risk,t_star,upper,empty\n";
    for (const auto& row : out.t_star) {
      csv << Fmt(row.risk) << ',' << Fmt(row.interval.t_star) << ',' << Fmt(row.interval.upper) << ','
          << (row.interval.empty ? 1 : 0) << '\n';
    }
    WriteTextFile((root / "t_star.csv").string(), csv.str());
  }
  std::vector<double> xs, ys;
  for (const auto& row : out.t_star) {
    if (row.interval.empty) continue;
    xs.push_back(row.risk);
    ys.push_back(row.interval.t_star);
  }
  WriteTextFile((root / "t_star.svg").string(),
                LinePlotSvg(xs, ys, std::string("stability threshold, ") + SdeFamilyName(spec.family) + " " +
                                        NoiseKindName(config.noise),
                            "risk r", "t*"));
  if (!run_scans) return out;

  std::ostringstream csv;
  csv << "risk,t,instability,threshold,stable_in_theory,exceeds\n";
  std::uint64_t k = 0;
  for (double r : config.stability.risks) {
    ++k;
    if (r <= 0.0) continue;
    const std::vector<double> rv(spec.dim, r);
    const NoiseModel noise =
        config.noise == NoiseKind::kCauchy ? NoiseModel::Cauchy(rv) : NoiseModel::Gaussian(rv);
    ScanOptions so;
    so.times = config.stability.times;
    so.samples = config.stability.samples;
    so.bootstrap = config.stability.bootstrap;
    so.quantile = config.stability.quantile;
    so.seed = MixSeed(config.seed, kScanStream + k);
    std::vector<ScanPoint> scan = InstabilityScan(spec, mixture, noise, so);
    for (const auto& p : scan) {
      csv << Fmt(r) << ',' << Fmt(p.t) << ',' << Fmt(p.instability) << ',' << Fmt(p.threshold) << ','
          << (p.stable_in_theory ? 1 : 0) << ',' << (p.exceeds() ? 1 : 0) << '\n';
    }
    out.scans[r] = std::move(scan);
  }
  WriteTextFile((root / "scan.csv").string(), csv.str());
  return out;
}

std::string LinePlotSvg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                        const std::string& x_label, const std::string& y_label) {
  if (x.size() != y.size()) throw InvalidArgument("line plot needs matching x and y");
  const double w = 480.0, h = 320.0, pad = 48.0;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (!x.empty()) {
    xmin = *std::min_element(x.begin(), x.end());
    xmax = *std::max_element(x.begin(), x.end());
    ymin = std::min(0.0, *std::min_element(y.begin(), y.end()));
    ymax = *std::max_element(y.begin(), y.end());
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  auto px = [&](double v) { return pad + (v - xmin) / (xmax - xmin) * (w - 2 * pad); };
  auto py = [&](double v) { return h - pad - (v - ymin) / (ymax - ymin) * (h - 2 * pad); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
    << w << ' ' << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label
    << "</text>\n";
  s << "<text x=\"12\" y=\"" << h / 2 << "\" font-size=\"12\">" << y_label << "</text>\n";
  char buf[64];
  for (double v : {xmin, xmax}) {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    s << "<text x=\"" << px(v) << "\" y=\"" << h - pad + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
      << buf << "</text>\n";
  }
  for (double v : {ymin, ymax}) {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    s << "<text x=\"" << pad - 4 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << buf
      << "</text>\n";
  }
  if (!x.empty()) {
    s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) s << px(x[i]) << ',' << py(y[i]) << ' ';
    s << "\"/>\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
      s << "<circle cx=\"" << px(x[i]) << "\" cy=\"" << py(y[i]) << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace rsde
