/* Copyright 2026 The GradDiv Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "gdl/stochastic_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gdl::net {
namespace {

struct LinearSlots {
  std::size_t layer;        // index into arch.layers
  std::size_t first_param;  // index of weight (mean) in params
  bool stochastic;
};

std::vector<LinearSlots> linear_slots(const Architecture& arch) {
  std::vector<LinearSlots> slots;
  std::size_t param = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    if (!l.is_linear()) continue;
    const bool stochastic = l.kind == LayerKind::kStochasticLinear;
    slots.push_back({i, param, stochastic});
    param += stochastic ? 4 : 2;
  }
  return slots;
}

double sampled_value(double mu, double logsigma, double eps) {
  return mu + std::exp(std::clamp(logsigma, kLogSigmaMin, kLogSigmaMax)) * eps;
}

Tensor sample_tensor(const Tensor& mu, const Tensor& logsigma, const Tensor& eps) {
  Tensor out(mu.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sampled_value(mu[i], logsigma[i], eps[i]);
  return out;
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kStochasticLinear: return "stochastic_linear";
    case LayerKind::kLinear: return "linear";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kLeakyRelu: return "leaky_relu";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
  if (name == "stochastic_linear") return LayerKind::kStochasticLinear;
  if (name == "linear") return LayerKind::kLinear;
  if (name == "relu") return LayerKind::kRelu;
  if (name == "leaky_relu") return LayerKind::kLeakyRelu;
  throw std::invalid_argument("unknown layer kind '" + name + "'");
}

std::size_t Architecture::input_dim() const {
  for (const LayerSpec& l : layers)
    if (l.is_linear()) return l.in;
  return 0;
}

std::size_t Architecture::num_classes() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (it->is_linear()) return it->out;
  return 0;
}

std::size_t Architecture::num_linear() const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.is_linear(); }));
}

void Architecture::validate() const {
  if (num_linear() == 0) throw std::invalid_argument("architecture has no linear layer");
  std::size_t width = input_dim();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (!l.is_linear()) continue;
    if (l.in == 0 || l.out == 0) {
      throw std::invalid_argument("layer " + std::to_string(i) + " has a zero dimension");
    }
    if (l.in != width) {
      throw std::invalid_argument("layer " + std::to_string(i) + " expects " + std::to_string(l.in) +
                                  " inputs but receives " + std::to_string(width));
    }
    width = l.out;
  }
}

Architecture Architecture::mlp(const std::vector<std::size_t>& widths, bool stochastic,
                               LayerKind activation, double slope) {
  if (widths.size() < 2) throw std::invalid_argument("mlp needs at least input and output widths");
  Architecture arch;
  const LayerKind linear = stochastic ? LayerKind::kStochasticLinear : LayerKind::kLinear;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    arch.layers.push_back({linear, widths[i], widths[i + 1], 0.0});
    if (i + 2 < widths.size()) arch.layers.push_back({activation, 0, 0, slope});
  }
  arch.validate();
  return arch;
}

SampleModel::SampleModel(Architecture arch, std::vector<Tensor> weights,
                         std::vector<Tensor> biases, NoiseDraw noise)
    : arch_(std::move(arch)),
      weights_(std::move(weights)),
      biases_(std::move(biases)),
      noise_(std::move(noise)) {
  for (const Tensor& w : weights_) weight_vars_.emplace_back(w);
  for (const Tensor& b : biases_) bias_vars_.emplace_back(b);
}

ad::Var SampleModel::forward(const ad::Var& x) const {
  return forward_layers(arch_, weight_vars_, bias_vars_, x);
}

Tensor SampleModel::logits(const Tensor& x) const {
  ad::GradModeGuard no_grad(false);
  return forward(ad::Var(x)).value();
}

Tensor SampleModel::probabilities(const Tensor& x) const {
  ad::GradModeGuard no_grad(false);
  return ad::softmax_rows(forward(ad::Var(x))).value();
}

SampleModel::LossGrad SampleModel::loss_and_input_gradient(const Tensor& x,
                                                           std::span<const int> labels) const {
  ad::Tape tape;
  ad::Var input = tape.leaf(x);
  ad::Var losses = ad::cross_entropy_rows(forward(input), labels);
  ad::Var g = ad::grad(ad::sum(losses), input);
  return {losses.value(), g.value()};
}

StochasticNet::StochasticNet(Architecture arch, double prior_sigma)
    : arch_(std::move(arch)), prior_sigma_(prior_sigma) {
  arch_.validate();
  if (!(prior_sigma_ > 0.0)) {
    throw std::invalid_argument("prior sigma must be positive, got " + std::to_string(prior_sigma_));
  }
  for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
    const LayerSpec& l = arch_.layers[i];
    if (!l.is_linear()) continue;
    const std::string prefix = "l" + std::to_string(i) + ".";
    const Shape w{l.out, l.in};
    const Shape b{1, l.out};
    if (l.kind == LayerKind::kStochasticLinear) {
      params_.push_back({prefix + "weight_mean", Tensor(w)});
      params_.push_back({prefix + "weight_logsigma", Tensor(w)});
      params_.push_back({prefix + "bias_mean", Tensor(b)});
      params_.push_back({prefix + "bias_logsigma", Tensor(b)});
    } else {
      params_.push_back({prefix + "weight", Tensor(w)});
      params_.push_back({prefix + "bias", Tensor(b)});
    }
  }
  set_logsigma(std::log(prior_sigma_ / 2.0));
}

void StochasticNet::initialize(RngStream& rng) {
  for (const LinearSlots& s : linear_slots(arch_)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch_.layers[s.layer].in));
    Tensor& w = params_[s.first_param].value;
    Tensor& b = params_[s.first_param + (s.stochastic ? 2 : 1)].value;
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    for (double& v : b.data()) v = rng.uniform(-bound, bound);
  }
  set_logsigma(std::log(prior_sigma_ / 2.0));
}

Parameter& StochasticNet::parameter(const std::string& name) {
  for (Parameter& p : params_)
    if (p.name == name) return p;
  throw std::out_of_range("no parameter named '" + name + "'");
}

std::size_t StochasticNet::num_stochastic_tensors() const {
  std::size_t count = 0;
  for (const LinearSlots& s : linear_slots(arch_)) count += s.stochastic ? 2 : 0;
  return count;
}

void StochasticNet::set_logsigma(double value) {
  const double v = std::clamp(value, kLogSigmaMin, kLogSigmaMax);
  for (const LinearSlots& s : linear_slots(arch_)) {
    if (!s.stochastic) continue;
    for (double& x : params_[s.first_param + 1].value.data()) x = v;
    for (double& x : params_[s.first_param + 3].value.data()) x = v;
  }
}

void StochasticNet::clamp_logsigma() {
  for (const LinearSlots& s : linear_slots(arch_)) {
    if (!s.stochastic) continue;
    for (std::size_t k : {s.first_param + 1, s.first_param + 3}) {
      for (double& x : params_[k].value.data()) x = std::clamp(x, kLogSigmaMin, kLogSigmaMax);
    }
  }
}

NoiseDraw StochasticNet::draw_noise(RngStream& rng) const {
  NoiseDraw draw;
  for (const LinearSlots& s : linear_slots(arch_)) {
    if (!s.stochastic) continue;
    for (std::size_t k : {s.first_param, s.first_param + 2}) {
      Tensor eps(params_[k].value.shape());
      for (double& v : eps.data()) v = rng.normal();
      draw.eps.push_back(std::move(eps));
    }
  }
  return draw;
}

BoundNet::BoundNet(const StochasticNet& net, ad::Tape& tape) : net_(net), tape_(tape) {
  for (const Parameter& p : net.params_) params_.push_back(tape.leaf(p.value));
}

ad::Var BoundNet::logits(const ad::Var& x, const NoiseDraw& noise) const {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
  std::size_t eps = 0;
  auto reparam = [&](const ad::Var& mu, const ad::Var& logsigma) {
    ad::Var sigma = ad::exp(ad::clamp(logsigma, kLogSigmaMin, kLogSigmaMax));
    return ad::add(mu, ad::mul(sigma, ad::Var(noise.eps.at(eps++))));
  };
  for (const LinearSlots& s : linear_slots(net_.arch_)) {
    const std::size_t k = s.first_param;
    if (s.stochastic) {
      weights.push_back(reparam(params_[k], params_[k + 1]));
      biases.push_back(reparam(params_[k + 2], params_[k + 3]));
    } else {
      weights.push_back(params_[k]);
      biases.push_back(params_[k + 1]);
    }
  }
  return forward_layers(net_.arch_, weights, biases, x);
}

ad::Var BoundNet::kl_to_prior() const {
  const double s0 = net_.prior_sigma_;
  ad::Var total(Tensor::scalar(0.0));
  for (const LinearSlots& s : linear_slots(net_.arch_)) {
    if (!s.stochastic) continue;
    for (std::size_t k : {s.first_param, s.first_param + 2}) {
      const ad::Var& mu = params_[k];
      ad::Var ls = ad::clamp(params_[k + 1], kLogSigmaMin, kLogSigmaMax);
      // log(s0) - ls + (exp(2 ls) + mu^2) / (2 s0^2) - 1/2
      ad::Var terms = ad::scale(ad::add(ad::exp(ad::scale(ls, 2.0)), ad::mul(mu, mu)),
                                1.0 / (2.0 * s0 * s0));
      terms = ad::add_scalar(ad::sub(terms, ls), std::log(s0) - 0.5);
      total = ad::add(total, ad::sum(terms));
    }
  }
  return total;
}

ad::Var forward_layers(const Architecture& arch, std::span<const ad::Var> weights,
                       std::span<const ad::Var> biases, const ad::Var& x) {
  if (x.value().rank() != 2 || x.value().cols() != arch.input_dim()) {
    throw ShapeError("forward", x.shape(), Shape{0, arch.input_dim()});
  }
  ad::Var h = x;
  std::size_t linear = 0;
  for (const LayerSpec& l : arch.layers) {
    switch (l.kind) {
      case LayerKind::kStochasticLinear:
      case LayerKind::kLinear:
        h = ad::add_row(ad::matmul(h, weights[linear], ad::Trans::kNo, ad::Trans::kYes), biases[linear]);
        ++linear;
        break;
      case LayerKind::kRelu:
        h = ad::relu(h);
        break;
      case LayerKind::kLeakyRelu:
        h = ad::leaky_relu(h, l.slope);
        break;
    }
  }
  return h;
}

SampleModel sample_model(const StochasticNet& net, const NoiseDraw& noise) {
  const auto& params = net.parameters();
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  std::size_t eps = 0;
  for (const LinearSlots& s : linear_slots(net.architecture())) {
    const std::size_t k = s.first_param;
    if (s.stochastic) {
      weights.push_back(sample_tensor(params[k].value, params[k + 1].value, noise.eps.at(eps)));
      biases.push_back(sample_tensor(params[k + 2].value, params[k + 3].value, noise.eps.at(eps + 1)));
      eps += 2;
    } else {
      weights.push_back(params[k].value);
      biases.push_back(params[k + 1].value);
    }
  }
  return SampleModel(net.architecture(), std::move(weights), std::move(biases), noise);
}

SampleModel sample_model(const StochasticNet& net, RngStream& rng) {
  return sample_model(net, net.draw_noise(rng));
}

Tensor ensemble_predict(const StochasticNet& net, const Tensor& x, std::size_t n_ensemble,
                        RngStream& rng) {
  if (n_ensemble == 0) throw std::invalid_argument("ensemble_predict: n_ensemble must be >= 1");
  std::vector<RngStream> streams;
  streams.reserve(n_ensemble);
  for (std::size_t k = 0; k < n_ensemble; ++k) streams.push_back(rng.fork());
  std::vector<Tensor> probs(n_ensemble);
#pragma omp parallel for schedule(dynamic) if (n_ensemble > 1)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n_ensemble); ++k) {
    probs[k] = sample_model(net, streams[k]).probabilities(x);
  }
  Tensor mean = probs[0];
  for (std::size_t k = 1; k < n_ensemble; ++k)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += probs[k][i];
  const double inv = 1.0 / static_cast<double>(n_ensemble);
  for (double& v : mean.data()) v *= inv;
  return mean;
}

std::vector<int> argmax_rows(const Tensor& probabilities) {
  std::vector<int> out(probabilities.rows());
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    auto row = probabilities.row_span(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double kl_to_prior(const StochasticNet& net) {
  ad::GradModeGuard no_grad(false);
  ad::Tape tape;
  return BoundNet(net, tape).kl_to_prior().item();
}

}  // namespace gdl::net
