// Copyright 2026 The RoE Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "roe/gridenv.hpp"
#include "roe/rng.hpp"

namespace roe {

struct ConvLayerSpec {
  int filters = 16;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Shared body (optional convolutions, then fully connected ReLU layers)
/// feeding a softmax policy head over combined actions and a scalar value head.
struct NetConfig {
  ObservationShape input;
  std::vector<ConvLayerSpec> conv;
  std::vector<int> hidden{128};
  int action_count = 16;

  /// Two 3x3 convolutions (16, 32 filters, same padding) and a 128-unit layer.
  static NetConfig compact(ObservationShape input, int action_count);
  /// Three convolutions [32, 64, 32] with kernels [8, 4, 3], strides [4, 2, 1]
  /// and a 512-unit layer, for single-channel 80x80 frames.
  static NetConfig pixel80(int action_count);
  /// Fully connected body only.
  static NetConfig mlp(ObservationShape input, int action_count, std::vector<int> hidden = {128});

  void validate() const;
  std::size_t parameter_count() const;
  /// Spatial size (height, width) after each convolution.
  std::vector<std::pair<int, int>> conv_output_sizes() const;

  nlohmann::json to_json() const;
  static NetConfig from_json(const nlohmann::json& j);
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct LossCoefficients {
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  double learning_rate = 7e-4;

  void validate() const;
};

struct RmsPropConfig {
  double alpha = 0.99;
  double eps = 1e-5;

  void validate() const;
};

struct ForwardResult {
  Eigen::MatrixXd probs;   // action_count x batch
  Eigen::VectorXd values;  // batch
};

/// One training batch; observations hold one sample per column.
struct Batch {
  const Eigen::MatrixXd& observations;
  std::span<const int> actions;
  std::span<const double> returns;
};

struct LossDiagnostics {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct LossResult {
  LossDiagnostics diagnostics;
  Eigen::VectorXd gradient;
};

class PolicyValueNet {
 public:
  PolicyValueNet() = default;
  PolicyValueNet(NetConfig config, std::uint64_t init_seed);

  const NetConfig& config() const { return config_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& rmsprop_state() { return square_avg_; }
  const Eigen::VectorXd& rmsprop_state() const { return square_avg_; }

  /// Zeroes the policy and value heads (uniform policy, zero value).
  void zero_heads();

  /// Policy probabilities and values for a batch. Read-only; safe to call concurrently.
  ForwardResult forward(const Eigen::MatrixXd& observations) const;

  /// Loss = -mean[log pi(a|s) A] + value_coef mean[(R - V)^2 / 2] - entropy_coef mean[H(pi)]
  /// with A = R - V held constant in the policy term; the gradient is exact.
  LossResult loss_and_gradients(const Batch& batch, const LossCoefficients& coefs) const;

 private:
  struct Workspace;
  void forward_pass(const Eigen::MatrixXd& observations, Workspace& ws) const;

  NetConfig config_;
  Eigen::VectorXd params_;
  Eigen::VectorXd square_avg_;
};

/// Categorical draw from a probability row; deterministic given the engine state.
int sample_action(std::span<const double> probs, Rng& rng);

/// Rescales `gradient` in place when its L2 norm exceeds max_norm; returns the pre-clip norm.
double clip_grad_norm(Eigen::Ref<Eigen::VectorXd> gradient, double max_norm);

/// s <- alpha s + (1 - alpha) g^2;  p <- p - lr g / (sqrt(s) + eps)
void rmsprop_step(PolicyValueNet& net, const Eigen::VectorXd& gradient, double lr, double alpha, double eps);

}  // namespace roe
