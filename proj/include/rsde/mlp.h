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

// Small multilayer perceptron used as the score network s(x, t) and as the
// risk regressor. Inputs are the concatenation [x | time features | cond].
// Hidden layers use a smooth activation; the output layer is linear and is
// zero-initialized so a fresh model predicts a zero score.

#ifndef RSDE_MLP_H_
#define RSDE_MLP_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rsde/sde.h"
#include "rsde/tensor.h"

namespace rsde {

enum class Activation { kSilu, kSoftplus, kTanh };

const char* ActivationName(Activation activation);
Activation ParseActivation(const std::string& name);

// [t, sin(2^k pi t), cos(2^k pi t) for k < frequencies]
struct TimeEmbedding {
  bool enabled = true;
  int frequencies = 4;

  int width() const { return enabled ? 1 + 2 * frequencies : 0; }
  void Write(double t, double* out) const;
};

// s(x, t) = c_out(t) * net(c_in(t) * x, t) with c_in = 1 / sqrt(u^2 s^2 + v0^2)
// and c_out = 1 / sqrt(v0^2), where (u, v0^2) come from the schedule and s is
// the data scale.
struct Preconditioning {
  bool enabled = false;
  SdeSpec schedule;
  double data_scale = 1.0;

  void Scales(double t, double* c_in, double* c_out) const;
  bool operator==(const Preconditioning& other) const;
};

struct ModelConfig {
  int data_dim = 2;
  // Extra conditioning inputs appended after the time features.
  int cond_dim = 0;
  // Defaults to data_dim when negative.
  int output_dim = -1;
  std::vector<int> hidden = {128, 128};
  Activation activation = Activation::kSilu;
  TimeEmbedding time;
  Preconditioning precondition;

  int input_width() const { return data_dim + time.width() + cond_dim; }
  int out_width() const { return output_dim < 0 ? data_dim : output_dim; }
};

struct DenseLayer {
  Tensor weight;  // fan_in x fan_out
  Tensor bias;    // fan_out
};

// Parameter-shaped container used for gradients and optimizer moments.
struct ParameterSet {
  std::vector<DenseLayer> layers;

  void SetZero();
  std::size_t size() const;
};

class ScoreModel {
 public:
  ScoreModel() = default;

  // Glorot-uniform hidden layers, zero output layer, zero biases.
  static ScoreModel Create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  // Layer widths from input to output.
  std::vector<int> widths() const;
  std::size_t parameter_count() const;

  ParameterSet ZeroLike() const;

  // Single-sample evaluation. Throws InvalidArgument on dimension mismatch.
  Tensor Forward(const Tensor& x, double t) const;
  Tensor Forward(const Tensor& x, double t, const Tensor& cond) const;

  // Batched evaluation; x is batch x data_dim, t has one entry per row,
  // cond is batch x cond_dim (empty when cond_dim == 0). out is resized to
  // batch x out_width.
  void ForwardBatch(std::span<const double> x, std::span<const double> t,
                    std::span<const double> cond, std::size_t batch,
                    std::vector<double>* out) const;

  bool operator==(const ScoreModel& other) const;

 private:
  ModelConfig config_;
  std::vector<DenseLayer> layers_;
};

// Forward activations retained for back-propagation.
class ForwardPass {
 public:
  ForwardPass(const ScoreModel& model, std::span<const double> x,
              std::span<const double> t, std::span<const double> cond,
              std::size_t batch);

  std::size_t batch() const { return batch_; }
  std::span<const double> output() const { return activations_.back(); }

  // Propagates d(loss)/d(output). Parameter gradients are accumulated into
  // grads when non-null; d(loss)/d(x) (data columns only) is written to d_x
  // when non-null.
  void Backward(std::span<const double> d_out, ParameterSet* grads,
                std::vector<double>* d_x) const;

 private:
  const ScoreModel& model_;
  std::size_t batch_;
  // activations_[0] is the assembled input; activations_[l + 1] is the
  // output of layer l.
  std::vector<std::vector<double>> activations_;
  std::vector<double> c_in_;
  std::vector<double> c_out_;
  // Activation derivative at each hidden layer's pre-activation.
  std::vector<std::vector<double>> derivs_;
};

// One minibatch for weighted squared-error regression.
struct Batch {
  std::size_t size = 0;
  std::vector<double> x;       // size x data_dim
  std::vector<double> t;       // size
  std::vector<double> cond;    // size x cond_dim
  std::vector<double> target;  // size x out_width
  std::vector<double> weight;  // size; per-sample weights >= 0
  // Optional size x out_width per-entry weights (empty means all ones).
  std::vector<double> entry_weight;
};

// loss = (1/size) sum_i weight_i sum_j entry_weight_ij (out_ij - target_ij)^2.
// grads is reset before accumulation. Throws InvalidArgument on an empty
// batch, negative weights, or shape mismatch.
double LossAndGrads(const ScoreModel& model, const Batch& batch, ParameterSet* grads);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamOptions options;
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::int64_t step = 0;

  static OptimizerState Create(const ScoreModel& model, const AdamOptions& options);
};

// Bias-corrected adaptive-moment update. Throws InvalidArgument if the
// gradient or state shapes differ from the model.
void AdamStep(ScoreModel* model, const ParameterSet& grads, OptimizerState* state);

// Checkpoint container. Text format, first line "RSDE-CKPT-1"; weights are
// written as hexadecimal floats so a save/load cycle is bit-exact.
struct Checkpoint {
  ScoreModel model;
  std::map<std::string, std::string> metadata;
};

void WriteCheckpoint(std::ostream& out, const ScoreModel& model,
                     const std::map<std::string, std::string>& metadata = {});
Checkpoint ReadCheckpoint(std::istream& in);
void SaveCheckpoint(const std::string& path, const ScoreModel& model,
                    const std::map<std::string, std::string>& metadata = {});
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace rsde

#endif  // RSDE_MLP_H_
