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
#ifndef GDL_EVAL_HPP_
#define GDL_EVAL_HPP_

// Evaluation of trained randomized classifiers: robust accuracy over seeds,
// the first-order loss-increase law and its upper bound, per-input kappa_hat,
// transfer among sample models, the obfuscation checklist and decision grids.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gdl/attacks.hpp"
#include "gdl/data.hpp"
#include "gdl/stochastic_net.hpp"

namespace gdl::eval {

/// Fraction of rows whose ensemble prediction equals the label.
double clean_accuracy(const net::StochasticNet& net, const data::Dataset& test, std::size_t ensemble,
                      RngStream& rng);

/// Per-example outcome of one attack under one evaluation seed.
struct AttackOutcome {
  attacks::AttackSpec spec;
  std::uint64_t seed = 0;
  std::vector<char> robust;  // ensemble still correct on the adversarial input
  double accuracy() const;
};

/// Runs `spec` once per seed, each from RngStream::for_purpose(seed,
/// "eval-attack"). epsilon 0 scores the clean inputs with the same stream.
std::vector<AttackOutcome> attack_outcomes(const net::StochasticNet& net, const data::Dataset& test,
                                           const attacks::AttackSpec& spec,
                                           std::span<const std::uint64_t> seeds);

struct RobustnessRow {
  std::string attack;
  std::string mode;
  std::string norm;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

std::vector<RobustnessRow> robust_accuracy(const net::StochasticNet& net, const data::Dataset& test,
                                           const attacks::AttackSpec& spec,
                                           std::span<const std::uint64_t> seeds);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one value
};
MeanStd mean_std(std::span<const double> values);

/// Per-example worst case across attacks: an example counts as robust only
/// if every outcome in the group keeps it. All outcomes must cover the same
/// examples; grouped by seed, then averaged.
MeanStd worst_case_total(std::span<const AttackOutcome> outcomes);

/// The default evaluation seeds 1..count.
std::vector<std::uint64_t> default_seeds(std::size_t count = 5);

/// Sample models shared by the loss-increase measurements (common random
/// numbers: every direction is scored on the same draws).
std::vector<net::SampleModel> draw_models(const net::StochasticNet& net, std::size_t n, RngStream& rng);

/// Mean over models of the per-row input gradient.
Tensor expected_gradient(std::span<const net::SampleModel> models, const Tensor& x,
                         std::span<const int> labels);

/// Delta(alpha g) per row: the mean over models of l(x + alpha g) - l(x).
/// `direction` is [batch, p]. Inputs are not clamped to the box.
std::vector<double> loss_increase(std::span<const net::SampleModel> models, const Tensor& x,
                                  std::span<const int> labels, const Tensor& direction, double alpha);

/// |Delta(alpha g) - alpha g_hat . g| / (alpha |g_hat| |g|) per row, with
/// g the unit expected gradient.
std::vector<double> first_order_residual(std::span<const net::SampleModel> models, const Tensor& x,
                                         std::span<const int> labels, double alpha);

struct RotationPoint {
  double theta_deg = 0.0;
  double delta = 0.0;   // mean over rows of Delta(alpha g_rot)
  double cosine = 0.0;  // cos theta
};

/// Delta along the expected gradient rotated by each angle about a random
/// axis per row, with unit step direction.
std::vector<RotationPoint> rotation_sweep(std::span<const net::SampleModel> models, const Tensor& x,
                                          std::span<const int> labels, std::span<const double> degrees,
                                          double alpha, RngStream& rng);

double pearson(std::span<const double> a, std::span<const double> b);

struct BoundCheck {
  double delta_max = 0.0;  // worst observed Delta over the tried directions
  double bound = 0.0;      // alpha * M_X * rho_q
  double m_x = 0.0;
  double rho_q = 0.0;
  double slack() const { return bound - delta_max; }
};

/// For each row: Delta over the steepest direction of the expected gradient
/// and `random_directions` random directions on the unit ball of `ball`,
/// against alpha * M_X * rho_q with q dual to the ball norm (q = 1 for l_inf,
/// q = 2 for l_2), M_X the largest sampled gradient norm and rho_q the l_q
/// length of the mean unit gradient from the same models.
std::vector<BoundCheck> loss_bound_check(std::span<const net::SampleModel> models, const Tensor& x,
                                       std::span<const int> labels, attacks::Norm ball, double alpha,
                                       std::size_t random_directions, RngStream& rng);

struct KappaRow {
  std::size_t input_id = 0;
  double kappa_hat = 0.0;
  double rho_hat = 0.0;
};

/// kappa_hat per input from n_grads fresh gradient samples. Inputs whose
/// gradients all vanish are skipped with a warning.
std::vector<KappaRow> kappa_density(const net::StochasticNet& net, const data::Dataset& test,
                                    std::size_t n_grads, RngStream& rng);

double median(std::vector<double> values);

/// Entry (i, j): accuracy of sample model j on fixed-sample pgd examples
/// crafted against sample model i. Returns [k, k].
Tensor transfer_matrix(const net::StochasticNet& net, const data::Dataset& test, std::size_t k,
                       const attacks::AttackSpec& spec, RngStream& rng);
Tensor transfer_matrix(std::span<const net::SampleModel> models, const data::Dataset& test,
                       const attacks::AttackSpec& spec, RngStream& rng);

/// Mean of the entries off the diagonal.
double off_diagonal_mean(const Tensor& matrix);

struct ChecklistSettings {
  double epsilon = 0.3;
  std::vector<double> epsilon_grid{0.1, 0.2, 0.3, 0.4};
  std::size_t iterations = 20;
  std::size_t eot_samples = 10;
  std::size_t ensemble = 20;
  /// Random-search budget per point for the black-box comparison.
  std::size_t blackbox_trials = 1000;
  /// Budget and point cap for the brute-force check.
  std::size_t brute_force_trials = 100000;
  std::size_t brute_force_points = 50;
  double full_box_success = 0.99;
  std::uint64_t seed = 1;
  friend bool operator==(const ChecklistSettings&, const ChecklistSettings&) = default;
};

struct ChecklistItem {
  std::string name;
  bool pass = false;
  std::string evidence;
};

struct ChecklistReport {
  std::vector<ChecklistItem> items;
  bool all_pass() const;
};

ChecklistReport obfuscation_checklist(const net::StochasticNet& net, const data::Dataset& test,
                                      const ChecklistSettings& settings);

/// Class labels of each model over center + a d1 + b d2 for a, b on a
/// resolution x resolution grid spanning [-extent, extent]; row-major in
/// (a, b). Throws std::invalid_argument for parallel directions or
/// resolution < 2.
struct DecisionGrid {
  std::vector<double> a;  // per cell
  std::vector<double> b;
  std::vector<std::vector<int>> labels;  // per model, resolution^2 entries
  double extent = 0.0;
  std::size_t resolution = 0;
};
DecisionGrid decision_grid(std::span<const net::SampleModel> models, std::span<const double> center,
                           std::span<const double> d1, std::span<const double> d2, double extent,
                           std::size_t resolution);

/// Fraction of grid cells where two models disagree.
double disagreement(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace gdl::eval

#endif  // GDL_EVAL_HPP_
