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
#ifndef GDL_STOCHASTIC_NET_HPP_
#define GDL_STOCHASTIC_NET_HPP_

// Randomized fully connected classifiers with Gaussian-reparameterized
// weights (W = mu + exp(logsigma) * eps), their concrete sample models, and
// ensemble inference.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gdl/autodiff.hpp"
#include "gdl/rng.hpp"
#include "gdl/tensor.hpp"

namespace gdl::net {

inline constexpr double kLogSigmaMin = -10.0;
inline constexpr double kLogSigmaMax = 3.0;

enum class LayerKind { kStochasticLinear, kLinear, kRelu, kLeakyRelu };

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t in = 0;
  std::size_t out = 0;
  double slope = 0.0;  // leaky ReLU only

  bool is_linear() const { return kind == LayerKind::kStochasticLinear || kind == LayerKind::kLinear; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct Architecture {
  std::vector<LayerSpec> layers;

  std::size_t input_dim() const;
  std::size_t num_classes() const;
  std::size_t num_linear() const;
  /// Throws std::invalid_argument unless linear layer dimensions chain.
  void validate() const;

  /// widths = {p, h1, ..., c}; an activation follows every hidden linear layer.
  static Architecture mlp(const std::vector<std::size_t>& widths, bool stochastic,
                          LayerKind activation = LayerKind::kRelu, double slope = 0.0);

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct Parameter {
  std::string name;
  Tensor value;
};

/// The eps draws behind one sample model, one tensor per stochastic weight
/// or bias, in parameter order.
struct NoiseDraw {
  std::vector<Tensor> eps;
};

class StochasticNet;

/// A concrete network f drawn from the randomized classifier.
class SampleModel {
 public:
  SampleModel(Architecture arch, std::vector<Tensor> weights, std::vector<Tensor> biases,
              NoiseDraw noise);

  const Architecture& architecture() const { return arch_; }
  const NoiseDraw& noise() const { return noise_; }
  const std::vector<Tensor>& weights() const { return weights_; }
  const std::vector<Tensor>& biases() const { return biases_; }

  /// Logits [batch, c]; differentiable w.r.t. x when x is on a tape.
  ad::Var forward(const ad::Var& x) const;
  Tensor logits(const Tensor& x) const;
  Tensor probabilities(const Tensor& x) const;

  /// Per-row cross-entropy losses and their input gradients.
  struct LossGrad {
    Tensor losses;     // [batch, 1]
    Tensor gradients;  // [batch, p]
  };
  LossGrad loss_and_input_gradient(const Tensor& x, std::span<const int> labels) const;

 private:
  Architecture arch_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
  std::vector<ad::Var> weight_vars_;
  std::vector<ad::Var> bias_vars_;
  NoiseDraw noise_;
};

/// Randomized classifier q_theta(F). Linear layers of kind kStochasticLinear
/// own (weight_mean, weight_logsigma, bias_mean, bias_logsigma); kLinear
/// layers own (weight, bias). Weights are [out, in], biases [1, out].
class StochasticNet {
 public:
  StochasticNet(Architecture arch, double prior_sigma);

  /// mu ~ U(-1/sqrt(in), 1/sqrt(in)), logsigma = log(prior_sigma / 2).
  void initialize(RngStream& rng);

  const Architecture& architecture() const { return arch_; }
  double prior_sigma() const { return prior_sigma_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(const std::string& name);
  std::size_t num_stochastic_tensors() const;
  bool is_deterministic() const { return num_stochastic_tensors() == 0; }

  /// Fills every logsigma tensor with `value` (clamped).
  void set_logsigma(double value);
  void clamp_logsigma();

  NoiseDraw draw_noise(RngStream& rng) const;

 private:
  Architecture arch_;
  double prior_sigma_;
  std::vector<Parameter> params_;

  friend class BoundNet;
};

/// Parameters of a net registered as leaves of a tape, for training.
class BoundNet {
 public:
  BoundNet(const StochasticNet& net, ad::Tape& tape);

  const StochasticNet& net() const { return net_; }
  ad::Tape& tape() const { return tape_; }
  std::span<const ad::Var> params() const { return params_; }

  /// Logits of the sample model given by `noise`, differentiable w.r.t. the
  /// parameters (reparameterization) and x.
  ad::Var logits(const ad::Var& x, const NoiseDraw& noise) const;

  /// Closed-form KL(q || prior) as a differentiable scalar.
  ad::Var kl_to_prior() const;

 private:
  const StochasticNet& net_;
  ad::Tape& tape_;
  std::vector<ad::Var> params_;
};

/// Shared forward pass: linear layers take weights[i] [out, in], biases[i] [1, out].
ad::Var forward_layers(const Architecture& arch, std::span<const ad::Var> weights,
                       std::span<const ad::Var> biases, const ad::Var& x);

SampleModel sample_model(const StochasticNet& net, RngStream& rng);
SampleModel sample_model(const StochasticNet& net, const NoiseDraw& noise);

/// Mean of n_ensemble per-model softmax outputs, each from a fresh sample.
Tensor ensemble_predict(const StochasticNet& net, const Tensor& x, std::size_t n_ensemble,
                        RngStream& rng);
std::vector<int> argmax_rows(const Tensor& probabilities);

/// sum_i [log(s0/s_i) + (s_i^2 + mu_i^2) / (2 s0^2) - 1/2] over stochastic tensors.
double kl_to_prior(const StochasticNet& net);

}  // namespace gdl::net

#endif  // GDL_STOCHASTIC_NET_HPP_
