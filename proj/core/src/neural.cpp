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
#include "roe/neural.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "roe/errors.hpp"

namespace roe {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LayerView {
  Index w = 0;  // offset of the row-count x col-count weight block (column-major)
  Index b = 0;  // offset of the bias vector
  Index rows = 0;
  Index cols = 0;
};

struct ParamLayout {
  std::vector<LayerView> conv;
  std::vector<LayerView> fc;
  LayerView policy;
  LayerView value;
  Index total = 0;
};

struct ConvGeometry {
  int channels, height, width;  // input
  int out_h, out_w;
};

ParamLayout make_layout(const NetConfig& cfg) {
  ParamLayout layout;
  Index offset = 0;
  auto add = [&](Index rows, Index cols) {
    LayerView v{offset, offset + rows * cols, rows, cols};
    offset += rows * cols + rows;
    return v;
  };
  int channels = cfg.input.channels;
  const auto sizes = cfg.conv_output_sizes();
  for (const auto& c : cfg.conv) {
    layout.conv.push_back(add(c.filters, static_cast<Index>(channels) * c.kernel * c.kernel));
    channels = c.filters;
  }
  Index features = cfg.conv.empty() ? cfg.input.size()
                                    : static_cast<Index>(channels) * sizes.back().first * sizes.back().second;
  for (int h : cfg.hidden) {
    layout.fc.push_back(add(h, features));
    features = h;
  }
  layout.policy = add(cfg.action_count, features);
  layout.value = add(1, features);
  layout.total = offset;
  return layout;
}

std::vector<ConvGeometry> conv_geometry(const NetConfig& cfg) {
  std::vector<ConvGeometry> out;
  int c = cfg.input.channels;
  int h = cfg.input.height;
  int w = cfg.input.width;
  for (const auto& l : cfg.conv) {
    const int oh = (h + 2 * l.padding - l.kernel) / l.stride + 1;
    const int ow = (w + 2 * l.padding - l.kernel) / l.stride + 1;
    out.push_back({c, h, w, oh, ow});
    c = l.filters;
    h = oh;
    w = ow;
  }
  return out;
}

// Tensors are addressed as base[c * channel_stride + (y * width + x) * position_stride].
void im2col(const double* in, const ConvGeometry& g, Index channel_stride, Index position_stride,
            const ConvLayerSpec& l, MatrixXd& cols) {
  const int k = l.kernel;
  cols.resize(static_cast<Index>(g.channels) * k * k, static_cast<Index>(g.out_h) * g.out_w);
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      double* col = cols.col(oy * g.out_w + ox).data();
      Index r = 0;
      for (int c = 0; c < g.channels; ++c) {
        for (int ky = 0; ky < k; ++ky) {
          const int y = oy * l.stride + ky - l.padding;
          for (int kx = 0; kx < k; ++kx, ++r) {
            const int x = ox * l.stride + kx - l.padding;
            col[r] = (y < 0 || x < 0 || y >= g.height || x >= g.width)
                         ? 0.0
                         : in[c * channel_stride + (static_cast<Index>(y) * g.width + x) * position_stride];
          }
        }
      }
    }
  }
}

void col2im(const MatrixXd& dcols, const ConvGeometry& g, Index channel_stride, Index position_stride,
            const ConvLayerSpec& l, double* din) {
  const int k = l.kernel;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const double* col = dcols.col(oy * g.out_w + ox).data();
      Index r = 0;
      for (int c = 0; c < g.channels; ++c) {
        for (int ky = 0; ky < k; ++ky) {
          const int y = oy * l.stride + ky - l.padding;
          for (int kx = 0; kx < k; ++kx, ++r) {
            const int x = ox * l.stride + kx - l.padding;
            if (y < 0 || x < 0 || y >= g.height || x >= g.width) continue;
            din[c * channel_stride + (static_cast<Index>(y) * g.width + x) * position_stride] += col[r];
          }
        }
      }
    }
  }
}

Eigen::Map<const MatrixXd> weights(const VectorXd& p, const LayerView& v) {
  return {p.data() + v.w, v.rows, v.cols};
}
Eigen::Map<const VectorXd> bias(const VectorXd& p, const LayerView& v) { return {p.data() + v.b, v.rows}; }
Eigen::Map<MatrixXd> weights(VectorXd& p, const LayerView& v) { return {p.data() + v.w, v.rows, v.cols}; }
Eigen::Map<VectorXd> bias(VectorXd& p, const LayerView& v) { return {p.data() + v.b, v.rows}; }

void orthogonal_init(Eigen::Map<MatrixXd> w, double gain, Rng& rng) {
  const Index rows = w.rows();
  const Index cols = w.cols();
  const Index big = std::max(rows, cols);
  const Index small = std::min(rows, cols);
  MatrixXd a(big, small);
  for (Index j = 0; j < small; ++j) {
    for (Index i = 0; i < big; ++i) a(i, j) = standard_normal(rng);
  }
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(big, small);
  const MatrixXd r = qr.matrixQR().topLeftCorner(small, small);
  for (Index j = 0; j < small; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  if (rows >= cols) {
    w = gain * q;
  } else {
    w = gain * q.transpose();
  }
}

int check_positive(int v, const char* what) {
  if (v < 1) throw ConfigError(std::string("net config: ") + what + " must be positive");
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

NetConfig NetConfig::compact(ObservationShape input, int action_count) {
  NetConfig cfg;
  cfg.input = input;
  cfg.conv = {{16, 3, 1, 1}, {32, 3, 1, 1}};
  cfg.hidden = {128};
  cfg.action_count = action_count;
  return cfg;
}

NetConfig NetConfig::pixel80(int action_count) {
  NetConfig cfg;
  cfg.input = {1, 80, 80};
  cfg.conv = {{32, 8, 4, 0}, {64, 4, 2, 0}, {32, 3, 1, 0}};
  cfg.hidden = {512};
  cfg.action_count = action_count;
  return cfg;
}

NetConfig NetConfig::mlp(ObservationShape input, int action_count, std::vector<int> hidden) {
  NetConfig cfg;
  cfg.input = input;
  cfg.hidden = std::move(hidden);
  cfg.action_count = action_count;
  return cfg;
}

std::vector<std::pair<int, int>> NetConfig::conv_output_sizes() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& g : conv_geometry(*this)) out.emplace_back(g.out_h, g.out_w);
  return out;
}

void NetConfig::validate() const {
  check_positive(input.channels, "input channels");
  check_positive(input.height, "input height");
  check_positive(input.width, "input width");
  if (action_count != 8 && action_count != 16) {
    throw ConfigError("net config: action_count must be 8 or 16 (2^enabled atomic actions)");
  }
  for (const auto& l : conv) {
    check_positive(l.filters, "conv filters");
    check_positive(l.kernel, "conv kernel");
    check_positive(l.stride, "conv stride");
    if (l.padding < 0) throw ConfigError("net config: conv padding must be >= 0");
  }
  for (const auto& [h, w] : conv_output_sizes()) {
    if (h < 1 || w < 1) throw ConfigError("net config: convolution stack shrinks the input below 1x1");
  }
  for (int h : hidden) check_positive(h, "hidden width");
}

std::size_t NetConfig::parameter_count() const { return static_cast<std::size_t>(make_layout(*this).total); }

nlohmann::json NetConfig::to_json() const {
  nlohmann::json conv_json = nlohmann::json::array();
  for (const auto& l : conv) {
    conv_json.push_back({{"filters", l.filters}, {"kernel", l.kernel}, {"stride", l.stride}, {"padding", l.padding}});
  }
  return {{"input", {input.channels, input.height, input.width}},
          {"conv", conv_json},
          {"hidden", hidden},
          {"action_count", action_count}};
}

NetConfig NetConfig::from_json(const nlohmann::json& j) {
  try {
    NetConfig cfg;
    const auto& in = j.at("input");
    cfg.input = {in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()};
    cfg.conv.clear();
    for (const auto& l : j.at("conv")) {
      cfg.conv.push_back({l.at("filters").get<int>(), l.at("kernel").get<int>(), l.at("stride").get<int>(),
                          l.at("padding").get<int>()});
    }
    cfg.hidden = j.at("hidden").get<std::vector<int>>();
    cfg.action_count = j.at("action_count").get<int>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("net config: malformed JSON: ") + e.what());
  }
}

void LossCoefficients::validate() const {
  if (!(value_coef > 0) || !(entropy_coef > 0) || !(max_grad_norm > 0) || !(learning_rate > 0)) {
    throw ConfigError("loss coefficients must all be positive");
  }
}

void RmsPropConfig::validate() const {
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("rmsprop: alpha must lie in (0, 1)");
  if (!(eps > 0)) throw ConfigError("rmsprop: eps must be positive");
}

// ---------------------------------------------------------------------------

struct PolicyValueNet::Workspace {
  std::vector<std::vector<MatrixXd>> cols;  // [conv layer][sample]
  std::vector<MatrixXd> conv_out;           // [conv layer], (filters * positions) x batch, post-ReLU
  std::vector<MatrixXd> fc_out;             // [fc layer], post-ReLU
  MatrixXd log_probs;
  MatrixXd probs;
  VectorXd values;
};

PolicyValueNet::PolicyValueNet(NetConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  const ParamLayout layout = make_layout(config_);
  params_ = VectorXd::Zero(layout.total);
  square_avg_ = VectorXd::Zero(layout.total);
  Rng rng(init_seed);
  const double relu_gain = std::sqrt(2.0);
  for (const auto& v : layout.conv) orthogonal_init(weights(params_, v), relu_gain, rng);
  for (const auto& v : layout.fc) orthogonal_init(weights(params_, v), relu_gain, rng);
  orthogonal_init(weights(params_, layout.policy), 0.01, rng);
  orthogonal_init(weights(params_, layout.value), 1.0, rng);
}

void PolicyValueNet::zero_heads() {
  const ParamLayout layout = make_layout(config_);
  for (const auto& v : {layout.policy, layout.value}) {
    weights(params_, v).setZero();
    bias(params_, v).setZero();
  }
}

void PolicyValueNet::forward_pass(const MatrixXd& observations, Workspace& ws) const {
  if (observations.rows() != config_.input.size()) {
    throw ContractError("policy net: observation has " + std::to_string(observations.rows()) +
                        " features, network expects " + std::to_string(config_.input.size()));
  }
  const ParamLayout layout = make_layout(config_);
  const auto geometry = conv_geometry(config_);
  const Index batch = observations.cols();

  ws.cols.assign(config_.conv.size(), std::vector<MatrixXd>(static_cast<std::size_t>(batch)));
  ws.conv_out.resize(config_.conv.size());
  const MatrixXd* input = &observations;
  Index channel_stride = config_.input.height * config_.input.width;
  Index position_stride = 1;
  for (std::size_t l = 0; l < config_.conv.size(); ++l) {
    const auto& spec = config_.conv[l];
    const auto& g = geometry[l];
    const Index positions = static_cast<Index>(g.out_h) * g.out_w;
    const auto w = weights(params_, layout.conv[l]);
    const auto b = bias(params_, layout.conv[l]);
    MatrixXd& out = ws.conv_out[l];
    out.resize(spec.filters * positions, batch);
    for (Index s = 0; s < batch; ++s) {
      MatrixXd& cols = ws.cols[l][static_cast<std::size_t>(s)];
      im2col(input->col(s).data(), g, channel_stride, position_stride, spec, cols);
      Eigen::Map<MatrixXd> o(out.col(s).data(), spec.filters, positions);
      o.noalias() = w * cols;
      o.colwise() += b;
    }
    out = out.cwiseMax(0.0);
    input = &out;
    channel_stride = 1;
    position_stride = spec.filters;
  }

  ws.fc_out.resize(config_.hidden.size());
  for (std::size_t l = 0; l < config_.hidden.size(); ++l) {
    MatrixXd& out = ws.fc_out[l];
    out.noalias() = weights(params_, layout.fc[l]) * *input;
    out.colwise() += bias(params_, layout.fc[l]);
    out = out.cwiseMax(0.0);
    input = &out;
  }

  MatrixXd logits = weights(params_, layout.policy) * *input;
  logits.colwise() += bias(params_, layout.policy);
  ws.values = (weights(params_, layout.value) * *input).transpose();
  ws.values.array() += params_[layout.value.b];

  ws.log_probs.resize(logits.rows(), batch);
  for (Index s = 0; s < batch; ++s) {
    const double m = logits.col(s).maxCoeff();
    const double lse = m + std::log((logits.col(s).array() - m).exp().sum());
    ws.log_probs.col(s) = logits.col(s).array() - lse;
  }
  ws.probs = ws.log_probs.array().exp();
}

ForwardResult PolicyValueNet::forward(const MatrixXd& observations) const {
  Workspace ws;
  forward_pass(observations, ws);
  return {std::move(ws.probs), std::move(ws.values)};
}

LossResult PolicyValueNet::loss_and_gradients(const Batch& batch, const LossCoefficients& coefs) const {
  const Index n = batch.observations.cols();
  if (static_cast<Index>(batch.actions.size()) != n || static_cast<Index>(batch.returns.size()) != n || n == 0) {
    throw ContractError("loss: observations, actions and returns must be non-empty and aligned");
  }
  Workspace ws;
  forward_pass(batch.observations, ws);
  const ParamLayout layout = make_layout(config_);
  const auto geometry = conv_geometry(config_);
  const double inv_n = 1.0 / static_cast<double>(n);

  LossDiagnostics diag;
  MatrixXd d_logits(config_.action_count, n);
  VectorXd d_values(n);
  for (Index s = 0; s < n; ++s) {
    const int a = batch.actions[static_cast<std::size_t>(s)];
    if (a < 0 || a >= config_.action_count) throw ContractError("loss: action index out of range");
    const double ret = batch.returns[static_cast<std::size_t>(s)];
    const double v = ws.values[s];
    const double advantage = ret - v;
    const auto logp = ws.log_probs.col(s);
    const auto p = ws.probs.col(s);
    const double entropy = -(p.array() * logp.array()).sum();
    diag.policy_loss -= advantage * logp[a] * inv_n;
    diag.value_loss += 0.5 * advantage * advantage * inv_n;
    diag.entropy += entropy * inv_n;

    d_logits.col(s) = (advantage * inv_n) * p + (coefs.entropy_coef * inv_n) * (p.array() * (logp.array() + entropy)).matrix();
    d_logits(a, s) -= advantage * inv_n;
    d_values[s] = coefs.value_coef * inv_n * (v - ret);
  }
  diag.loss = diag.policy_loss + coefs.value_coef * diag.value_loss - coefs.entropy_coef * diag.entropy;
  if (!std::isfinite(diag.loss)) {
    throw NumericError("loss: non-finite value (policy " + std::to_string(diag.policy_loss) + ", value " +
                       std::to_string(diag.value_loss) + ", entropy " + std::to_string(diag.entropy) + ")");
  }

  VectorXd grad = VectorXd::Zero(params_.size());
  const MatrixXd& head_in = config_.hidden.empty()
                                ? (config_.conv.empty() ? batch.observations : ws.conv_out.back())
                                : ws.fc_out.back();
  weights(grad, layout.policy).noalias() = d_logits * head_in.transpose();
  bias(grad, layout.policy) = d_logits.rowwise().sum();
  weights(grad, layout.value).noalias() = d_values.transpose() * head_in.transpose();
  grad[layout.value.b] = d_values.sum();

  MatrixXd d_hidden = weights(params_, layout.policy).transpose() * d_logits;
  d_hidden.noalias() += weights(params_, layout.value).transpose() * d_values.transpose();

  for (std::size_t l = config_.hidden.size(); l-- > 0;) {
    const MatrixXd& in = l > 0 ? ws.fc_out[l - 1] : (config_.conv.empty() ? batch.observations : ws.conv_out.back());
    MatrixXd dz = (ws.fc_out[l].array() > 0.0).select(d_hidden, 0.0);
    weights(grad, layout.fc[l]).noalias() = dz * in.transpose();
    bias(grad, layout.fc[l]) = dz.rowwise().sum();
    if (l > 0 || !config_.conv.empty()) d_hidden.noalias() = weights(params_, layout.fc[l]).transpose() * dz;
  }

  for (std::size_t l = config_.conv.size(); l-- > 0;) {
    const auto& spec = config_.conv[l];
    const auto& g = geometry[l];
    const Index positions = static_cast<Index>(g.out_h) * g.out_w;
    MatrixXd dz = (ws.conv_out[l].array() > 0.0).select(d_hidden, 0.0);
    auto dw = weights(grad, layout.conv[l]);
    auto db = bias(grad, layout.conv[l]);
    const auto w = weights(params_, layout.conv[l]);
    MatrixXd d_input;
    if (l > 0) d_input = MatrixXd::Zero(static_cast<Index>(g.channels) * g.height * g.width, n);
    MatrixXd dcols;
    for (Index s = 0; s < n; ++s) {
      Eigen::Map<const MatrixXd> d_out(dz.col(s).data(), spec.filters, positions);
      const MatrixXd& cols = ws.cols[l][static_cast<std::size_t>(s)];
      dw.noalias() += d_out * cols.transpose();
      db += d_out.rowwise().sum();
      if (l > 0) {
        dcols.noalias() = w.transpose() * d_out;
        col2im(dcols, g, 1, g.channels, spec, d_input.col(s).data());
      }
    }
    if (l > 0) d_hidden = std::move(d_input);
  }

  if (!grad.allFinite()) throw NumericError("loss: non-finite gradient");
  return {diag, std::move(grad)};
}

// ---------------------------------------------------------------------------

int sample_action(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw ContractError("sample_action: empty probability row");
  const double u = uniform01(rng);
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = static_cast<int>(i);
    if (u < cumulative) return last_positive;
  }
  return last_positive;  // u landed in the rounding slack above the final cumulative sum
}

double clip_grad_norm(Eigen::Ref<VectorXd> gradient, double max_norm) {
  if (!(max_norm > 0)) throw ContractError("clip_grad_norm: max_norm must be positive");
  const double norm = gradient.norm();
  if (norm > max_norm) gradient *= max_norm / norm;
  return norm;
}

void rmsprop_step(PolicyValueNet& net, const VectorXd& gradient, double lr, double alpha, double eps) {
  VectorXd& p = net.parameters();
  VectorXd& s = net.rmsprop_state();
  if (gradient.size() != p.size()) throw ContractError("rmsprop_step: gradient/parameter size mismatch");
  s = alpha * s + (1.0 - alpha) * gradient.cwiseAbs2();
  p.array() -= lr * gradient.array() / (s.array().sqrt() + eps);
}

}  // namespace roe
