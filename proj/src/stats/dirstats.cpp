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
#include "gdl/dirstats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gdl/diagnostics.hpp"

namespace gdl::stats {

double GradientBatch::max_norm() const {
  return norms.empty() ? 0.0 : *std::max_element(norms.begin(), norms.end());
}

GradientBatch GradientBatch::from_gradients(const Tensor& gradients, std::string point_id) {
  if (gradients.rank() != 2) throw ShapeError("from_gradients", gradients.shape(), "is not [n, p]");
  const std::size_t n = gradients.rows();
  const std::size_t p = gradients.cols();
  if (p < 2) throw std::invalid_argument("gradient batch needs dimension p >= 2");
  std::vector<double> kept;
  std::vector<double> norms;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = gradients.row_span(i);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double nrm = std::sqrt(sq);
    if (!(nrm >= kZeroGradientNorm)) {
      warn("dropping zero gradient sample " + std::to_string(i) +
           (point_id.empty() ? "" : " at point " + point_id));
      continue;
    }
    for (double v : row) kept.push_back(v / nrm);
    norms.push_back(nrm);
  }
  if (norms.empty()) throw std::invalid_argument("gradient batch has no nonzero gradient");
  GradientBatch batch;
  batch.directions = Tensor({norms.size(), p}, std::move(kept));
  batch.norms = std::move(norms);
  batch.point_id = std::move(point_id);
  return batch;
}

std::vector<double> mean_direction(const GradientBatch& batch) {
  const std::size_t n = batch.size();
  const std::size_t p = batch.dim();
  std::vector<double> mean(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = batch.directions.row_span(i);
    for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  return mean;
}

double lq_norm(const std::vector<double>& v, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("l_q norm needs q >= 1, got " + std::to_string(q));
  if (std::isinf(q)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (q == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  if (q == 2.0) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), q);
  return std::pow(s, 1.0 / q);
}

double sample_mrl(const GradientBatch& batch) {
  return std::min(1.0, lq_norm(mean_direction(batch), 2.0));
}

double lq_mrl(const GradientBatch& batch, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_mrl needs q >= 1, got " + std::to_string(q));
  return lq_norm(mean_direction(batch), q);
}

double estimate_kappa(double rho_hat, std::size_t p) {
  double rho = std::max(0.0, rho_hat);
  if (rho > 1.0 - kRhoClamp) {
    warn("rho_hat = " + std::to_string(rho_hat) + " clamped to 1 - 1e-7 before estimating kappa");
    rho = 1.0 - kRhoClamp;
  }
  const double dim = static_cast<double>(p);
  return rho * (dim - rho) / (1.0 - rho * rho);
}

Tensor cosine_matrix(const GradientBatch& batch) {
  const std::size_t n = batch.size();
  const std::size_t p = batch.dim();
  Tensor c({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    auto gi = batch.directions.row_span(i);
    for (std::size_t j = i; j < n; ++j) {
      auto gj = batch.directions.row_span(j);
      double d = 0.0;
      for (std::size_t k = 0; k < p; ++k) d += gi[k] * gj[k];
      d = std::clamp(d, -1.0, 1.0);
      c.at(i, j) = d;
      c.at(j, i) = d;
    }
  }
  return c;
}

GradientBatch vmf_sample(const VmfParams& params, std::size_t n, RngStream& rng) {
  const std::size_t p = params.dim();
  if (p < 2) throw std::invalid_argument("vmf_sample needs p >= 2");
  if (!(params.kappa >= 0.0)) throw std::invalid_argument("vmf_sample needs kappa >= 0");
  std::vector<double> mu = params.mean_direction;
  const double mu_norm = lq_norm(mu, 2.0);
  if (!(mu_norm > 0.0)) throw std::invalid_argument("vmf_sample needs a nonzero mean direction");
  for (double& v : mu) v /= mu_norm;

  const double kappa = params.kappa;
  const double d1 = static_cast<double>(p - 1);
  // b = (-2k + sqrt(4k^2 + d1^2)) / d1, written to avoid cancellation.
  const double b = d1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + d1 * d1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + d1 * std::log(1.0 - x0 * x0);

  Tensor out({n, p});
  std::vector<double> tangent(p);
  for (std::size_t s = 0; s < n; ++s) {
    double w = 0.0;
    for (;;) {
      const double ga = rng.gamma(d1 / 2.0);
      const double gb = rng.gamma(d1 / 2.0);
      const double z = ga / (ga + gb);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = rng.uniform();
      if (kappa * w + d1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }
    // Uniform unit vector orthogonal to mu.
    double tn = 0.0;
    do {
      double along = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        tangent[j] = rng.normal();
        along += tangent[j] * mu[j];
      }
      tn = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        tangent[j] -= along * mu[j];
        tn += tangent[j] * tangent[j];
      }
      tn = std::sqrt(tn);
    } while (!(tn > 1e-12));
    const double radial = std::sqrt(std::max(0.0, 1.0 - w * w));
    auto row = out.row_span(s);
    double sq = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      row[j] = w * mu[j] + radial * tangent[j] / tn;
      sq += row[j] * row[j];
    }
    const double fix = 1.0 / std::sqrt(sq);
    for (double& v : row) v *= fix;
  }
  GradientBatch batch;
  batch.directions = std::move(out);
  batch.norms.assign(n, 1.0);
  batch.point_id = "vmf";
  return batch;
}

}  // namespace gdl::stats
