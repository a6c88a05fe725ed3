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

#include "rsde/mlp.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "rsde/error.h"
#include "rsde/rng.h"
#include "rsde/simd/kernels.h"

namespace rsde {
namespace {

constexpr char kCheckpointMagic[] = "RSDE-CKPT-1";

void ApplyActivation(Activation activation, std::vector<double>* z,
                     std::vector<double>* deriv) {
  deriv->resize(z->size());
  double* zp = z->data();
  double* dp = deriv->data();
  const std::size_t n = z->size();
  switch (activation) {
    case Activation::kSilu:
      simd::Kernels().silu(zp, n, zp, dp);
      return;
    case Activation::kSoftplus:
      for (std::size_t i = 0; i < n; ++i) {
        const double x = zp[i];
        dp[i] = 1.0 / (1.0 + std::exp(-x));
        zp[i] = x > 30.0 ? x : std::log1p(std::exp(x));
      }
      return;
    case Activation::kTanh:
      for (std::size_t i = 0; i < n; ++i) {
        const double y = std::tanh(zp[i]);
        zp[i] = y;
        dp[i] = 1.0 - y * y;
      }
      return;
  }
}

void CheckBatchShapes(const ModelConfig& config, std::span<const double> x,
                      std::span<const double> t, std::span<const double> cond,
                      std::size_t batch) {
  if (x.size() != batch * static_cast<std::size_t>(config.data_dim)) {
    throw InvalidArgument("input has " + std::to_string(x.size()) +
                          " values, expected batch x " +
                          std::to_string(config.data_dim));
  }
  if (t.size() != batch) {
    throw InvalidArgument("time vector length differs from batch size");
  }
  if (cond.size() != batch * static_cast<std::size_t>(config.cond_dim)) {
    throw InvalidArgument("conditioning input has wrong size for cond_dim " +
                          std::to_string(config.cond_dim));
  }
}

std::string FormatHex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace

const char* ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kSilu:
      return "silu";
    case Activation::kSoftplus:
      return "softplus";
    case Activation::kTanh:
      return "tanh";
  }
  return "unknown";
}

Activation ParseActivation(const std::string& name) {
  if (name == "silu") return Activation::kSilu;
  if (name == "softplus") return Activation::kSoftplus;
  if (name == "tanh") return Activation::kTanh;
  throw InvalidArgument("unknown activation '" + name + "'");
}

void TimeEmbedding::Write(double t, double* out) const {
  if (!enabled) return;
  out[0] = t;
  double freq = std::numbers::pi;
  for (int k = 0; k < frequencies; ++k) {
    out[1 + 2 * k] = std::sin(freq * t);
    out[2 + 2 * k] = std::cos(freq * t);
    freq *= 2.0;
  }
}

// Keeps c_out finite at t = 0.
constexpr double kMinNoiseVariance = 1e-6;

void Preconditioning::Scales(double t, double* c_in, double* c_out) const {
  if (!enabled) {
    *c_in = *c_out = 1.0;
    return;
  }
  const BaseSchedule b = BaseSchedules(schedule, std::clamp(t, 0.0, schedule.horizon));
  const double v0_sq = std::max(b.v0_sq, kMinNoiseVariance);
  *c_in = 1.0 / std::sqrt(b.u * b.u * data_scale * data_scale + v0_sq);
  *c_out = 1.0 / std::sqrt(v0_sq);
}

bool Preconditioning::operator==(const Preconditioning& o) const {
  if (enabled != o.enabled) return false;
  if (!enabled) return true;
  const SdeSpec& a = schedule;
  const SdeSpec& b = o.schedule;
  return data_scale == o.data_scale && a.family == b.family && a.horizon == b.horizon &&
         a.beta_min == b.beta_min && a.beta_max == b.beta_max && a.sigma_min == b.sigma_min &&
         a.sigma_max == b.sigma_max;
}

void ParameterSet::SetZero() {
  for (auto& layer : layers) {
    std::fill(layer.weight.values().begin(), layer.weight.values().end(), 0.0);
    std::fill(layer.bias.values().begin(), layer.bias.values().end(), 0.0);
  }
}

std::size_t ParameterSet::size() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

ScoreModel ScoreModel::Create(const ModelConfig& config, std::uint64_t seed) {
  if (config.data_dim <= 0 || config.cond_dim < 0 || config.out_width() <= 0) {
    throw InvalidArgument("model dimensions must be positive");
  }
  for (int w : config.hidden) {
    if (w <= 0) throw InvalidArgument("hidden widths must be positive");
  }
  ScoreModel model;
  model.config_ = config;
  Rng rng = MakeRng(seed, 0x6d6c70);
  const std::vector<int> widths = model.widths();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto fan_in = static_cast<std::size_t>(widths[l]);
    const auto fan_out = static_cast<std::size_t>(widths[l + 1]);
    DenseLayer layer{Tensor::Matrix(fan_in, fan_out), Tensor({fan_out})};
    const bool is_output = l + 2 == widths.size();
    if (!is_output) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (double& w : layer.weight.values()) w = UniformRange(rng, -limit, limit);
    }
    model.layers_.push_back(std::move(layer));
  }
  return model;
}

std::vector<int> ScoreModel::widths() const {
  std::vector<int> w;
  w.push_back(config_.input_width());
  for (int h : config_.hidden) w.push_back(h);
  w.push_back(config_.out_width());
  return w;
}

std::size_t ScoreModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

ParameterSet ScoreModel::ZeroLike() const {
  ParameterSet set;
  for (const auto& layer : layers_) {
    set.layers.push_back(
        DenseLayer{Tensor(layer.weight.shape()), Tensor(layer.bias.shape())});
  }
  return set;
}

Tensor ScoreModel::Forward(const Tensor& x, double t) const {
  return Forward(x, t, Tensor({0}));
}

Tensor ScoreModel::Forward(const Tensor& x, double t, const Tensor& cond) const {
  if (x.size() != static_cast<std::size_t>(config_.data_dim)) {
    throw InvalidArgument("input dimension " + std::to_string(x.size()) +
                          " does not match model dimension " +
                          std::to_string(config_.data_dim));
  }
  if (cond.size() != static_cast<std::size_t>(config_.cond_dim)) {
    throw InvalidArgument("conditioning dimension mismatch");
  }
  const double tv[1] = {t};
  std::vector<double> out;
  ForwardBatch(x.data(), tv, cond.data(), 1, &out);
  return Tensor::FromVector(std::move(out));
}

void ScoreModel::ForwardBatch(std::span<const double> x, std::span<const double> t,
                              std::span<const double> cond, std::size_t batch,
                              std::vector<double>* out) const {
  ForwardPass pass(*this, x, t, cond, batch);
  const auto result = pass.output();
  out->assign(result.begin(), result.end());
}

bool ScoreModel::operator==(const ScoreModel& other) const {
  if (widths() != other.widths() || layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (!(layers_[l].weight == other.layers_[l].weight) ||
        !(layers_[l].bias == other.layers_[l].bias)) {
      return false;
    }
  }
  return config_.activation == other.config_.activation &&
         config_.time.enabled == other.config_.time.enabled &&
         config_.time.frequencies == other.config_.time.frequencies &&
         config_.precondition == other.config_.precondition;
}

ForwardPass::ForwardPass(const ScoreModel& model, std::span<const double> x,
                         std::span<const double> t, std::span<const double> cond,
                         std::size_t batch)
    : model_(model), batch_(batch) {
  const ModelConfig& config = model.config();
  CheckBatchShapes(config, x, t, cond, batch);
  const auto in_width = static_cast<std::size_t>(config.input_width());
  const auto d = static_cast<std::size_t>(config.data_dim);
  const auto c = static_cast<std::size_t>(config.cond_dim);
  const auto tw = static_cast<std::size_t>(config.time.width());

  const auto& layers = model.layers();
  activations_.resize(layers.size() + 1);
  derivs_.resize(layers.size());

  std::vector<double>& input = activations_[0];
  input.resize(batch * in_width);
  c_in_.resize(batch);
  c_out_.resize(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    double* row = input.data() + i * in_width;
    config.precondition.Scales(t[i], &c_in_[i], &c_out_[i]);
    for (std::size_t j = 0; j < d; ++j) row[j] = c_in_[i] * x[i * d + j];
    config.time.Write(t[i], row + d);
    if (c > 0) std::copy_n(cond.data() + i * c, c, row + d + tw);
  }

  const simd::KernelTable& k = simd::Kernels();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    const std::size_t fan_in = layer.weight.rows();
    const std::size_t fan_out = layer.weight.cols();
    std::vector<double>& z = activations_[l + 1];
    z.resize(batch * fan_out);
    for (std::size_t i = 0; i < batch; ++i) {
      std::copy_n(layer.bias.values().data(), fan_out, z.data() + i * fan_out);
    }
    k.gemm_nn(batch, fan_out, fan_in, activations_[l].data(), layer.weight.values().data(),
              z.data());
    if (l + 1 < layers.size()) ApplyActivation(config.activation, &z, &derivs_[l]);
  }
  if (config.precondition.enabled) {
    std::vector<double>& z = activations_.back();
    const std::size_t w = z.size() / batch;
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t j = 0; j < w; ++j) z[i * w + j] *= c_out_[i];
    }
  }
}

void ForwardPass::Backward(std::span<const double> d_out, ParameterSet* grads,
                           std::vector<double>* d_x) const {
  const auto& layers = model_.layers();
  const std::size_t out_width = layers.back().weight.cols();
  if (d_out.size() != batch_ * out_width) {
    throw InvalidArgument("upstream gradient has wrong size");
  }
  if (grads != nullptr && grads->layers.size() != layers.size()) {
    throw InvalidArgument("gradient container does not match model");
  }
  const simd::KernelTable& k = simd::Kernels();
  std::vector<double> dz(d_out.begin(), d_out.end());
  if (model_.config().precondition.enabled) {
    for (std::size_t i = 0; i < batch_; ++i) {
      for (std::size_t j = 0; j < out_width; ++j) dz[i * out_width + j] *= c_out_[i];
    }
  }
  std::vector<double> dh;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    const std::size_t fan_in = layer.weight.rows();
    const std::size_t fan_out = layer.weight.cols();
    if (grads != nullptr) {
      DenseLayer& g = grads->layers[l];
      k.gemm_tn(fan_in, fan_out, batch_, activations_[l].data(), dz.data(),
                g.weight.values().data());
      double* gb = g.bias.values().data();
      for (std::size_t i = 0; i < batch_; ++i) {
        const double* row = dz.data() + i * fan_out;
        for (std::size_t j = 0; j < fan_out; ++j) gb[j] += row[j];
      }
    }
    if (l == 0 && d_x == nullptr) break;
    dh.assign(batch_ * fan_in, 0.0);
    k.gemm_nt(batch_, fan_in, fan_out, dz.data(), layer.weight.values().data(), dh.data());
    if (l == 0) {
      const auto d = static_cast<std::size_t>(model_.config().data_dim);
      d_x->resize(batch_ * d);
      for (std::size_t i = 0; i < batch_; ++i) {
        for (std::size_t j = 0; j < d; ++j) (*d_x)[i * d + j] = c_in_[i] * dh[i * fan_in + j];
      }
      break;
    }
    const std::vector<double>& deriv = derivs_[l - 1];
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= deriv[i];
    dz.swap(dh);
  }
}

double LossAndGrads(const ScoreModel& model, const Batch& batch, ParameterSet* grads) {
  if (batch.size == 0) throw InvalidArgument("empty batch");
  const auto out_width = static_cast<std::size_t>(model.config().out_width());
  if (batch.target.size() != batch.size * out_width) {
    throw InvalidArgument("target shape does not match model output");
  }
  if (batch.weight.size() != batch.size) {
    throw InvalidArgument("weight vector length differs from batch size");
  }
  if (!batch.entry_weight.empty() && batch.entry_weight.size() != batch.target.size()) {
    throw InvalidArgument("entry weights must match the target shape");
  }
  for (double w : batch.weight) {
    if (!(w >= 0.0)) throw InvalidArgument("sample weights must be nonnegative");
  }
  ForwardPass pass(model, batch.x, batch.t, batch.cond, batch.size);
  const auto out = pass.output();
  const double inv_n = 1.0 / static_cast<double>(batch.size);
  std::vector<double> d_out(out.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size; ++i) {
    for (std::size_t j = 0; j < out_width; ++j) {
      const std::size_t idx = i * out_width + j;
      double w = batch.weight[i];
      if (!batch.entry_weight.empty()) w *= batch.entry_weight[idx];
      const double r = out[idx] - batch.target[idx];
      loss += w * r * r;
      d_out[idx] = 2.0 * w * r * inv_n;
    }
  }
  if (grads != nullptr) {
    if (grads->layers.size() != model.layers().size()) *grads = model.ZeroLike();
    grads->SetZero();
    pass.Backward(d_out, grads, nullptr);
  }
  return loss * inv_n;
}

OptimizerState OptimizerState::Create(const ScoreModel& model, const AdamOptions& options) {
  OptimizerState state;
  state.options = options;
  state.first_moment = model.ZeroLike();
  state.second_moment = model.ZeroLike();
  return state;
}

void AdamStep(ScoreModel* model, const ParameterSet& grads, OptimizerState* state) {
  auto& layers = model->layers();
  if (grads.layers.size() != layers.size() ||
      state->first_moment.layers.size() != layers.size() ||
      state->second_moment.layers.size() != layers.size()) {
    throw InvalidArgument("optimizer shapes do not match the model");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads.layers[l].weight.shape() != layers[l].weight.shape() ||
        grads.layers[l].bias.shape() != layers[l].bias.shape() ||
        state->first_moment.layers[l].weight.shape() != layers[l].weight.shape()) {
      throw InvalidArgument("optimizer shapes do not match the model");
    }
  }
  const AdamOptions& o = state->options;
  state->step += 1;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state->step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state->step));
  auto update = [&](std::vector<double>& param, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      param[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight.values(), grads.layers[l].weight.values(),
           state->first_moment.layers[l].weight.values(),
           state->second_moment.layers[l].weight.values());
    update(layers[l].bias.values(), grads.layers[l].bias.values(),
           state->first_moment.layers[l].bias.values(),
           state->second_moment.layers[l].bias.values());
  }
}

void WriteCheckpoint(std::ostream& out, const ScoreModel& model,
                     const std::map<std::string, std::string>& metadata) {
  const ModelConfig& c = model.config();
  out << kCheckpointMagic << "\n";
  out << "data_dim " << c.data_dim << "\n";
  out << "cond_dim " << c.cond_dim << "\n";
  out << "output_dim " << c.out_width() << "\n";
  out << "hidden " << c.hidden.size();
  for (int h : c.hidden) out << " " << h;
  out << "\n";
  out << "activation " << ActivationName(c.activation) << "\n";
  out << "time_embedding " << (c.time.enabled ? 1 : 0) << " " << c.time.frequencies << "\n";
  if (c.precondition.enabled) {
    const SdeSpec& s = c.precondition.schedule;
    out << "precondition " << SdeFamilyName(s.family) << " " << FormatHex(s.horizon) << " "
        << FormatHex(s.beta_min) << " " << FormatHex(s.beta_max) << " " << FormatHex(s.sigma_min)
        << " " << FormatHex(s.sigma_max) << " " << FormatHex(c.precondition.data_scale) << "\n";
  }
  for (const auto& [key, value] : metadata) {
    if (key.find_first_of(" \n") != std::string::npos ||
        value.find('\n') != std::string::npos) {
      throw InvalidArgument("checkpoint metadata must be single-line and key space-free");
    }
    out << "meta " << key << " " << value << "\n";
  }
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out << "layer " << l << " " << layers[l].weight.rows() << " "
        << layers[l].weight.cols() << "\n";
    out << "weight";
    for (double w : layers[l].weight.values()) out << " " << FormatHex(w);
    out << "\nbias";
    for (double b : layers[l].bias.values()) out << " " << FormatHex(b);
    out << "\n";
  }
  out << "end\n";
  if (!out) throw Error("failed writing checkpoint");
}

Checkpoint ReadCheckpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw InvalidArgument("not an RSDE-CKPT-1 checkpoint");
  }
  ModelConfig config;
  Checkpoint ckpt;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  auto parse_values = [](std::istringstream& ss) {
    std::vector<double> values;
    std::string token;
    while (ss >> token) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') {
        throw InvalidArgument("malformed checkpoint value '" + token + "'");
      }
      values.push_back(v);
    }
    return values;
  };
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "data_dim") {
      ss >> config.data_dim;
    } else if (key == "cond_dim") {
      ss >> config.cond_dim;
    } else if (key == "output_dim") {
      ss >> config.output_dim;
    } else if (key == "hidden") {
      std::size_t n = 0;
      ss >> n;
      config.hidden.assign(n, 0);
      for (auto& h : config.hidden) ss >> h;
    } else if (key == "activation") {
      std::string name;
      ss >> name;
      config.activation = ParseActivation(name);
    } else if (key == "time_embedding") {
      int enabled = 0;
      ss >> enabled >> config.time.frequencies;
      config.time.enabled = enabled != 0;
    } else if (key == "precondition") {
      std::string family;
      ss >> family;
      const std::vector<double> v = parse_values(ss);
      if (v.size() != 6) throw InvalidArgument("malformed precondition line in checkpoint");
      Preconditioning& p = config.precondition;
      p.enabled = true;
      p.schedule.family = ParseSdeFamily(family);
      p.schedule.horizon = v[0];
      p.schedule.beta_min = v[1];
      p.schedule.beta_max = v[2];
      p.schedule.sigma_min = v[3];
      p.schedule.sigma_max = v[4];
      p.data_scale = v[5];
    } else if (key == "meta") {
      std::string mkey;
      ss >> mkey;
      std::string rest;
      std::getline(ss, rest);
      if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
      ckpt.metadata[mkey] = rest;
    } else if (key == "layer") {
      // Shapes are re-derived from the header; the line is informational.
    } else if (key == "weight") {
      weights.push_back(parse_values(ss));
    } else if (key == "bias") {
      biases.push_back(parse_values(ss));
    } else if (key == "end") {
      ended = true;
      break;
    } else if (!key.empty()) {
      throw InvalidArgument("unknown checkpoint record '" + key + "'");
    }
    if (ss.fail() && key != "weight" && key != "bias" && key != "meta" && key != "precondition") {
      throw InvalidArgument("malformed checkpoint line: " + line);
    }
  }
  if (!ended) throw InvalidArgument("truncated checkpoint");
  ScoreModel model = ScoreModel::Create(config, 0);
  auto& layers = model.layers();
  if (weights.size() != layers.size() || biases.size() != layers.size()) {
    throw InvalidArgument("checkpoint layer count does not match its header");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (weights[l].size() != layers[l].weight.size() ||
        biases[l].size() != layers[l].bias.size()) {
      throw InvalidArgument("checkpoint layer " + std::to_string(l) + " has wrong size");
    }
    layers[l].weight.values() = std::move(weights[l]);
    layers[l].bias.values() = std::move(biases[l]);
  }
  ckpt.model = std::move(model);
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const ScoreModel& model,
                    const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  WriteCheckpoint(out, model, metadata);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path);
  return ReadCheckpoint(in);
}

}  // namespace rsde
