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
#ifndef GDL_ATTACKS_HPP_
#define GDL_ATTACKS_HPP_

// Gradient and proxy-gradient attacks on randomized classifiers. Every
// perturbation is taken per example (row) of the batch: each row has its own
// eps-ball around its clean input, intersected with the [0, 1] input box.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gdl/rng.hpp"
#include "gdl/stochastic_net.hpp"
#include "gdl/tensor.hpp"

namespace gdl::attacks {

enum class Norm { kLinf, kL2 };
enum class Family { kFgm, kPgd, kEot1Pgd, kEotPgd, kRotatedPgd, kRandomSearch };
/// Where the attack gradient comes from at each iteration.
enum class SamplingMode { kFixed, kEot1, kEot };

std::string to_string(Norm norm);
std::string to_string(Family family);
std::string to_string(SamplingMode mode);
Norm norm_from_string(const std::string& name);
Family family_from_string(const std::string& name);
SamplingMode sampling_mode_from_string(const std::string& name);

struct AttackSpec {
  Family family = Family::kPgd;
  Norm norm = Norm::kLinf;
  double epsilon = 0.3;
  double step = 0.075;          // alpha, 0 < alpha <= epsilon
  std::size_t iterations = 10;  // m
  std::size_t eot_samples = 10;
  /// Gradient source for fgm and rotated_pgd; the pgd families imply theirs.
  SamplingMode mode = SamplingMode::kEot;
  double rotation_deg = 0.0;
  std::size_t trials = 100000;
  bool random_start = false;
  /// Models in the ensemble that decides success.
  std::size_t ensemble = 20;

  /// Sampling mode actually used by this family.
  SamplingMode effective_mode() const;
  /// Throws std::invalid_argument on eps < 0, step outside (0, eps], m = 0,
  /// n = 0, rotation outside [0, 180] or trials = 0.
  void validate() const;
  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

struct AttackResult {
  Tensor adversarial;          // [batch, p]
  std::vector<char> success;   // ensemble prediction != label
  std::vector<double> losses;  // -log of the ensemble probability of the label
  std::size_t iterations = 0;

  double success_rate() const;
};

/// Per-row projection onto the norm ball of `radius`.
Tensor project_ball(const Tensor& delta, Norm norm, double radius);

/// Per-row argmax of g.d over the alpha-ball: alpha sign(g) (l_inf) or
/// alpha g / |g|_2 (l_2). Zero gradient rows give a zero step.
Tensor steepest_step(const Tensor& grad, Norm norm, double alpha);

/// x0 + project(x - x0), then clamped to [0, 1].
Tensor project_feasible(const Tensor& x, const Tensor& x0, Norm norm, double radius);

/// Gradient of the summed cross-entropy at x, one row per example.
using GradientSource = std::function<Tensor(const Tensor& x, std::span<const int> labels)>;

/// Gradients of one fixed sample model.
GradientSource model_source(net::SampleModel model);
/// One sample model drawn now and reused for every call.
GradientSource fixed_source(const net::StochasticNet& net, RngStream& rng);
/// A fresh sample model per call.
GradientSource eot1_source(const net::StochasticNet& net, RngStream rng);
/// Mean of n fresh sample-model gradients per call.
GradientSource eot_source(const net::StochasticNet& net, std::size_t n, RngStream rng);
/// Each row of the inner gradient rotated by theta about a random axis.
/// Zero rows are passed through unchanged.
GradientSource rotated_source(GradientSource inner, double theta_deg, RngStream rng);
GradientSource make_source(const net::StochasticNet& net, const AttackSpec& spec, RngStream& rng);

/// Arithmetic mean of n fresh sample-model input gradients at x.
Tensor eot_gradient(const net::StochasticNet& net, const Tensor& x, std::span<const int> labels,
                    std::size_t n, RngStream& rng);

/// g' = |g| (cos theta g_hat + sin theta r_hat), r_hat uniform and orthogonal
/// to g. Throws std::invalid_argument for a zero gradient, p < 2 or theta
/// outside [0, 180].
std::vector<double> rotate_gradient(std::span<const double> grad, double theta_deg, RngStream& rng);

/// Class probabilities used to score candidates.
using Scorer = std::function<Tensor(const Tensor& x)>;
Scorer ensemble_scorer(const net::StochasticNet& net, std::size_t n_ensemble, RngStream rng);
Scorer model_scorer(net::SampleModel model);

/// Fills success and losses of `result` from scorer(result.adversarial).
void score(AttackResult& result, std::span<const int> labels, const Scorer& scorer);

/// One steepest step of size eps.
AttackResult fgm(const GradientSource& source, const Tensor& x0, std::span<const int> labels,
                 Norm norm, double epsilon);

/// m iterations of steepest_step, ball projection and box clamp, starting at
/// x0 or (random_start) at a uniform point of the feasible set.
AttackResult pgd(const GradientSource& source, const Tensor& x0, std::span<const int> labels,
                 const AttackSpec& spec, RngStream& rng);

/// Uniform candidates in the eps-ball within the box. Candidates are screened
/// in chunks against one fresh sample model per chunk; anything the screen
/// misclassifies, and each chunk's highest-loss candidate, is confirmed with
/// the ensemble. Returns the first confirmed adversarial candidate or else the
/// highest-loss confirmed one.
AttackResult random_search(const net::StochasticNet& net, const Tensor& x0,
                           std::span<const int> labels, const AttackSpec& spec, RngStream& rng,
                           const Scorer& confirm);
AttackResult random_search(const net::StochasticNet& net, const Tensor& x0,
                           std::span<const int> labels, const AttackSpec& spec, RngStream& rng);

/// Dispatches on spec.family and scores with an ensemble of spec.ensemble.
AttackResult run_attack(const net::StochasticNet& net, const Tensor& x0, std::span<const int> labels,
                        const AttackSpec& spec, RngStream& rng);

}  // namespace gdl::attacks

#endif  // GDL_ATTACKS_HPP_
