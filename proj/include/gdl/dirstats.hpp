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
#ifndef GDL_DIRSTATS_HPP_
#define GDL_DIRSTATS_HPP_

// Directional statistics of gradient samples: mean resultant length (MRL),
// l_q-MRL, the vMF concentration approximation, cosine matrices, and a vMF
// sampler used as an independent oracle in tests.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "gdl/rng.hpp"
#include "gdl/tensor.hpp"

namespace gdl::stats {

/// Gradients with a smaller l2 norm have no direction and are dropped.
inline constexpr double kZeroGradientNorm = 1e-12;
/// rho_hat is clamped to 1 - kRhoClamp before estimating kappa.
inline constexpr double kRhoClamp = 1e-7;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// n unit directions in R^p with the l2 norms of the gradients they came from.
struct GradientBatch {
  Tensor directions;          // [n, p], unit rows
  std::vector<double> norms;  // original ||grad||_2 per row
  std::string point_id;

  std::size_t size() const { return directions.rows(); }
  std::size_t dim() const { return directions.cols(); }
  double max_norm() const;

  /// Normalizes the rows of `gradients` [n, p]; rows with norm below
  /// kZeroGradientNorm are dropped with a warning. Throws
  /// std::invalid_argument when p < 2 or no row survives.
  static GradientBatch from_gradients(const Tensor& gradients, std::string point_id = {});
};

struct VmfParams {
  std::vector<double> mean_direction;
  double kappa = 0.0;

  std::size_t dim() const { return mean_direction.size(); }
};

/// Sample mean direction v_bar = (1/n) sum g_i.
std::vector<double> mean_direction(const GradientBatch& batch);

/// rho_hat = ||v_bar||_2, in [0, 1].
double sample_mrl(const GradientBatch& batch);

/// ||v_bar||_q for q in [1, inf]; pass kInfinity for the max norm.
double lq_mrl(const GradientBatch& batch, double q);

/// kappa_hat = rho (p - rho) / (1 - rho^2), rho clamped to [0, 1 - kRhoClamp]
/// (with a warning when the upper clamp engages).
double estimate_kappa(double rho_hat, std::size_t p);

/// C_ij = g_i . g_j, symmetric, unit diagonal.
Tensor cosine_matrix(const GradientBatch& batch);

/// Wood's rejection sampler for the w = mu . x marginal, combined with a
/// uniform tangent direction.
GradientBatch vmf_sample(const VmfParams& params, std::size_t n, RngStream& rng);

double lq_norm(const std::vector<double>& v, double q);

}  // namespace gdl::stats

#endif  // GDL_DIRSTATS_HPP_
