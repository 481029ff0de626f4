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
#ifndef GDL_GRADDIV_HPP_
#define GDL_GRADDIV_HPP_

// Gradient-diversity regularizers over n sampled input gradients.
//
// For a batch X and n sample models f_1..f_n, g_i = grad_X L(f_i(X), Y) is
// taken with retain_graph so every regularizer stays differentiable w.r.t. the
// network parameters. Statistics are computed per input row and averaged over
// the rows whose n gradients are all nonzero.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gdl/autodiff.hpp"
#include "gdl/rng.hpp"
#include "gdl/stochastic_net.hpp"

namespace gdl::graddiv {

enum class RegKind { kKappa, kMean, kMax, kSmoothmax, kDpp };
enum class RegPoint { kAdversarial, kClean };

std::string to_string(RegKind kind);
RegKind reg_kind_from_string(const std::string& name);
std::string to_string(RegPoint point);
RegPoint reg_point_from_string(const std::string& name);

struct RegularizerSpec {
  RegKind kind = RegKind::kDpp;
  std::size_t samples = 3;
  double lambda = 0.0;        // target weight
  double dpp_jitter = 1e-6;
  RegPoint point = RegPoint::kAdversarial;

  /// Throws std::invalid_argument on n < 2 for pairwise kinds, n < 1, or
  /// negative lambda / jitter.
  void validate() const;
  friend bool operator==(const RegularizerSpec&, const RegularizerSpec&) = default;
};

/// Row-normalized gradient samples: directions[i] is [batch, p].
struct UnitGradients {
  std::vector<ad::Var> directions;
  Tensor valid;  // [batch, 1] of 0/1; 0 where some sample has a zero gradient
  std::size_t valid_rows = 0;

  std::size_t samples() const { return directions.size(); }
  std::size_t dim() const { return directions.empty() ? 0 : directions[0].value().cols(); }
};

UnitGradients normalize_gradients(std::span<const ad::Var> gradients);

/// n input-gradient samples at x, one fresh model draw each, recorded on the
/// bound net's tape so they can be differentiated w.r.t. the parameters.
std::vector<ad::Var> sample_input_gradients(const net::BoundNet& bound, const Tensor& x,
                                            std::span<const int> labels, std::size_t n,
                                            RngStream& rng);

// Per-row statistics, each [batch, 1].
ad::Var pairwise_cosine(const UnitGradients& u, std::size_t i, std::size_t j);
ad::Var row_mrl(const UnitGradients& u);
ad::Var row_kappa_over_p(const UnitGradients& u);
ad::Var row_mean_cosine(const UnitGradients& u);
ad::Var row_max_cosine(const UnitGradients& u);
ad::Var row_smoothmax_cosine(const UnitGradients& u);
/// -log det(G^T G + jitter I) by Cholesky of the n x n Gram. Throws
/// std::domain_error reporting the minimum pivot when the Gram is not
/// positive definite.
ad::Var row_dpp(const UnitGradients& u, double jitter);

/// Mean of a per-row statistic over valid rows (0 with a warning if none).
ad::Var batch_mean(const ad::Var& per_row, const UnitGradients& u);

/// Value of the chosen regularizer on precomputed unit gradients.
ad::Var regularizer_from_directions(const UnitGradients& u, const RegularizerSpec& spec);

ad::Var reg_kappa(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
                  std::size_t n, RngStream& rng);
ad::Var reg_mean(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
                 std::size_t n, RngStream& rng);
ad::Var reg_max(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
                std::size_t n, RngStream& rng);
ad::Var reg_smoothmax(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
                      std::size_t n, RngStream& rng);
ad::Var reg_dpp(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
                std::size_t n, RngStream& rng, double jitter = 1e-6);
ad::Var regularizer(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
                    const RegularizerSpec& spec, RngStream& rng);

/// likelihood + alpha_kl * kl / dataset_size + lambda * reg.
ad::Var combine_objective(const ad::Var& likelihood, const ad::Var& kl, const ad::Var& reg,
                          double lambda, double alpha_kl, std::size_t dataset_size);

struct Objective {
  ad::Var total;
  double likelihood = 0.0;
  double kl = 0.0;
  double reg = 0.0;  // 0 when lambda == 0 (not evaluated)
};

/// Cross-entropy of one fresh sample model on x_adv plus the KL and GradDiv
/// terms. The regularizer is evaluated at x_adv or x_clean per spec.point.
Objective total_objective(const net::BoundNet& bound, const Tensor& x_adv, const Tensor& x_clean,
                          std::span<const int> labels, const RegularizerSpec& spec,
                          double lambda, double alpha_kl, std::size_t dataset_size,
                          RngStream& rng);

}  // namespace gdl::graddiv

#endif  // GDL_GRADDIV_HPP_
