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
#include "gdl/graddiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gdl/diagnostics.hpp"
#include "gdl/dirstats.hpp"

namespace gdl::graddiv {

using ad::Var;

namespace {

bool is_pairwise(RegKind kind) { return kind != RegKind::kKappa; }

Var constant_like(const Var& x, double value) { return Var(Tensor(x.shape(), value)); }

std::vector<Var> pairwise_cosines(const UnitGradients& u) {
  std::vector<Var> out;
  for (std::size_t i = 0; i < u.samples(); ++i)
    for (std::size_t j = i + 1; j < u.samples(); ++j) out.push_back(pairwise_cosine(u, i, j));
  return out;
}

}  // namespace

std::string to_string(RegKind kind) {
  switch (kind) {
    case RegKind::kKappa: return "kappa";
    case RegKind::kMean: return "mean";
    case RegKind::kMax: return "max";
    case RegKind::kSmoothmax: return "smoothmax";
    case RegKind::kDpp: return "dpp";
  }
  return "unknown";
}

RegKind reg_kind_from_string(const std::string& name) {
  if (name == "kappa") return RegKind::kKappa;
  if (name == "mean") return RegKind::kMean;
  if (name == "max") return RegKind::kMax;
  if (name == "smoothmax") return RegKind::kSmoothmax;
  if (name == "dpp") return RegKind::kDpp;
  throw std::invalid_argument("unknown regularizer kind '" + name + "'");
}

std::string to_string(RegPoint point) {
  return point == RegPoint::kAdversarial ? "adversarial" : "clean";
}

RegPoint reg_point_from_string(const std::string& name) {
  if (name == "adversarial") return RegPoint::kAdversarial;
  if (name == "clean") return RegPoint::kClean;
  throw std::invalid_argument("unknown regularizer point '" + name + "'");
}

void RegularizerSpec::validate() const {
  if (samples < 1) throw std::invalid_argument("regularizer needs at least one gradient sample");
  if (is_pairwise(kind) && samples < 2) {
    throw std::invalid_argument("regularizer '" + to_string(kind) + "' needs n >= 2 samples");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("regularizer weight lambda must be >= 0");
  if (!(dpp_jitter >= 0.0)) throw std::invalid_argument("dpp jitter must be >= 0");
}

UnitGradients normalize_gradients(std::span<const Var> gradients) {
  if (gradients.empty()) throw std::invalid_argument("normalize_gradients: no gradient samples");
  const std::size_t rows = gradients[0].value().rows();
  UnitGradients u;
  u.valid = Tensor({rows, 1}, 1.0);
  std::vector<Var> norms;
  for (const Var& g : gradients) {
    if (g.shape() != gradients[0].shape()) {
      throw ShapeError("normalize_gradients", gradients[0].shape(), g.shape());
    }
    Var sq = ad::row_sum(ad::mul(g, g));
    const double floor = stats::kZeroGradientNorm * stats::kZeroGradientNorm;
    Var nrm = ad::sqrt(ad::maximum(sq, constant_like(sq, floor)));
    for (std::size_t r = 0; r < rows; ++r) {
      if (!(sq.value()[r] >= floor)) u.valid[r] = 0.0;
    }
    norms.push_back(nrm);
  }
  Var valid(u.valid);
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    Var inv = ad::mul(ad::div(constant_like(norms[i], 1.0), norms[i]), valid);
    u.directions.push_back(ad::scale_rows(gradients[i], inv));
  }
  std::string skipped;
  for (std::size_t r = 0; r < rows; ++r) {
    if (u.valid[r] > 0.0) {
      ++u.valid_rows;
    } else {
      skipped += (skipped.empty() ? "" : ", ") + std::to_string(r);
    }
  }
  if (!skipped.empty()) warn("skipping input rows with a zero input gradient: " + skipped);
  return u;
}

std::vector<Var> sample_input_gradients(const net::BoundNet& bound, const Tensor& x,
                                        std::span<const int> labels, std::size_t n,
                                        RngStream& rng) {
  Var input = bound.tape().leaf(x);
  std::vector<Var> grads;
  grads.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream stream = rng.fork();
    net::NoiseDraw noise = bound.net().draw_noise(stream);
    Var loss = ad::sum(ad::cross_entropy_rows(bound.logits(input, noise), labels));
    grads.push_back(ad::grad(loss, input, /*retain_graph=*/true));
  }
  return grads;
}

Var pairwise_cosine(const UnitGradients& u, std::size_t i, std::size_t j) {
  return ad::row_sum(ad::mul(u.directions.at(i), u.directions.at(j)));
}

Var row_mrl(const UnitGradients& u) {
  Var total = u.directions[0];
  for (std::size_t i = 1; i < u.samples(); ++i) total = ad::add(total, u.directions[i]);
  Var mean = ad::scale(total, 1.0 / static_cast<double>(u.samples()));
  Var sq = ad::row_sum(ad::mul(mean, mean));
  const double floor = stats::kZeroGradientNorm * stats::kZeroGradientNorm;
  Var rho = ad::sqrt(ad::maximum(sq, constant_like(sq, floor)));
  return ad::clamp(rho, 0.0, 1.0 - stats::kRhoClamp);
}

Var row_kappa_over_p(const UnitGradients& u) {
  const double p = static_cast<double>(u.dim());
  Var rho = row_mrl(u);
  Var kappa = ad::div(ad::mul(rho, ad::sub(constant_like(rho, p), rho)),
                      ad::sub(constant_like(rho, 1.0), ad::mul(rho, rho)));
  return ad::scale(kappa, 1.0 / p);
}

Var row_mean_cosine(const UnitGradients& u) {
  const std::size_t n = u.samples();
  if (n < 2) throw std::invalid_argument("mean cosine needs n >= 2");
  std::vector<Var> c = pairwise_cosines(u);
  Var total = c[0];
  for (std::size_t k = 1; k < c.size(); ++k) total = ad::add(total, c[k]);
  // Each unordered pair stands for two ordered pairs.
  return ad::scale(total, 2.0 / static_cast<double>(n * (n - 1)));
}

Var row_max_cosine(const UnitGradients& u) {
  if (u.samples() < 2) throw std::invalid_argument("max cosine needs n >= 2");
  std::vector<Var> c = pairwise_cosines(u);
  Var best = c[0];
  for (std::size_t k = 1; k < c.size(); ++k) best = ad::maximum(best, c[k]);
  return best;
}

Var row_smoothmax_cosine(const UnitGradients& u) {
  if (u.samples() < 2) throw std::invalid_argument("smoothmax cosine needs n >= 2");
  std::vector<Var> c = pairwise_cosines(u);
  Tensor shift = c[0].value();
  for (std::size_t k = 1; k < c.size(); ++k)
    for (std::size_t r = 0; r < shift.size(); ++r) shift[r] = std::max(shift[r], c[k].value()[r]);
  Var m(shift);
  Var total = ad::exp(ad::sub(c[0], m));
  for (std::size_t k = 1; k < c.size(); ++k) total = ad::add(total, ad::exp(ad::sub(c[k], m)));
  // log sum_{i != j} exp(c_ij) = m + log(2 sum_{i < j} exp(c_ij - m))
  return ad::add(m, ad::log(ad::scale(total, 2.0)));
}

Var row_dpp(const UnitGradients& u, double jitter) {
  const std::size_t n = u.samples();
  if (n < 2) throw std::invalid_argument("dpp needs n >= 2");
  if (n > u.dim()) {
    throw std::invalid_argument("dpp needs n <= p (n = " + std::to_string(n) +
                                ", p = " + std::to_string(u.dim()) + ")");
  }
  // Rows without a valid sample set get an identity Gram and are masked later.
  Tensor diag_shift(u.valid.shape());
  for (std::size_t r = 0; r < diag_shift.size(); ++r) diag_shift[r] = jitter + (1.0 - u.valid[r]);
  Var shift(diag_shift);

  auto gram = [&](std::size_t i, std::size_t j) {
    Var c = pairwise_cosine(u, i, j);
    return i == j ? ad::add(c, shift) : c;
  };
  std::vector<std::vector<Var>> lower(n, std::vector<Var>(n));
  Var neg_logdet;
  for (std::size_t j = 0; j < n; ++j) {
    Var pivot = gram(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot = ad::sub(pivot, ad::mul(lower[j][k], lower[j][k]));
    const auto& pv = pivot.value().data();
    const double min_pivot = *std::min_element(pv.begin(), pv.end());
    if (!(min_pivot > 0.0)) {
      throw std::domain_error("dpp: gradient Gram matrix is not positive definite (minimum pivot " +
                              std::to_string(min_pivot) + " at column " + std::to_string(j) + ")");
    }
    lower[j][j] = ad::sqrt(pivot);
    Var term = ad::neg(ad::log(pivot));
    neg_logdet = neg_logdet.defined() ? ad::add(neg_logdet, term) : term;
    for (std::size_t i = j + 1; i < n; ++i) {
      Var acc = gram(i, j);
      for (std::size_t k = 0; k < j; ++k) acc = ad::sub(acc, ad::mul(lower[i][k], lower[j][k]));
      lower[i][j] = ad::div(acc, lower[j][j]);
    }
  }
  return neg_logdet;
}

Var batch_mean(const Var& per_row, const UnitGradients& u) {
  if (u.valid_rows == 0) {
    warn("regularizer has no valid input rows; contributing 0");
    return Var(Tensor::scalar(0.0));
  }
  Tensor weights = u.valid;
  for (double& w : weights.data()) w /= static_cast<double>(u.valid_rows);
  return ad::sum(ad::mul(per_row, Var(std::move(weights))));
}

Var regularizer_from_directions(const UnitGradients& u, const RegularizerSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case RegKind::kKappa: return batch_mean(row_kappa_over_p(u), u);
    case RegKind::kMean: return batch_mean(row_mean_cosine(u), u);
    case RegKind::kMax: return batch_mean(row_max_cosine(u), u);
    case RegKind::kSmoothmax: return batch_mean(row_smoothmax_cosine(u), u);
    case RegKind::kDpp: return batch_mean(row_dpp(u, spec.dpp_jitter), u);
  }
  throw std::logic_error("unreachable regularizer kind");
}

Var regularizer(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
                const RegularizerSpec& spec, RngStream& rng) {
  spec.validate();
  std::vector<Var> grads = sample_input_gradients(bound, x, labels, spec.samples, rng);
  return regularizer_from_directions(normalize_gradients(grads), spec);
}

namespace {
Var regularizer_of_kind(RegKind kind, const net::BoundNet& bound, const Tensor& x,
                        std::span<const int> labels, std::size_t n, RngStream& rng,
                        double jitter = 1e-6) {
  RegularizerSpec spec;
  spec.kind = kind;
  spec.samples = n;
  spec.dpp_jitter = jitter;
  return regularizer(bound, x, labels, spec, rng);
}
}  // namespace

Var reg_kappa(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
              std::size_t n, RngStream& rng) {
  return regularizer_of_kind(RegKind::kKappa, bound, x, labels, n, rng);
}

Var reg_mean(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
             std::size_t n, RngStream& rng) {
  return regularizer_of_kind(RegKind::kMean, bound, x, labels, n, rng);
}

Var reg_max(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
            std::size_t n, RngStream& rng) {
  return regularizer_of_kind(RegKind::kMax, bound, x, labels, n, rng);
}

Var reg_smoothmax(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
                  std::size_t n, RngStream& rng) {
  return regularizer_of_kind(RegKind::kSmoothmax, bound, x, labels, n, rng);
}

Var reg_dpp(const net::BoundNet& bound, const Tensor& x, std::span<const int> labels,
            std::size_t n, RngStream& rng, double jitter) {
  return regularizer_of_kind(RegKind::kDpp, bound, x, labels, n, rng, jitter);
}

Var combine_objective(const Var& likelihood, const Var& kl, const Var& reg, double lambda,
                      double alpha_kl, std::size_t dataset_size) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (dataset_size == 0) throw std::invalid_argument("dataset size must be positive");
  Var total = ad::add(likelihood, ad::scale(kl, alpha_kl / static_cast<double>(dataset_size)));
  return lambda > 0.0 ? ad::add(total, ad::scale(reg, lambda)) : total;
}

Objective total_objective(const net::BoundNet& bound, const Tensor& x_adv, const Tensor& x_clean,
                          std::span<const int> labels, const RegularizerSpec& spec,
                          double lambda, double alpha_kl, std::size_t dataset_size,
                          RngStream& rng) {
  RngStream likelihood_stream = rng.fork();
  net::NoiseDraw noise = bound.net().draw_noise(likelihood_stream);
  Var likelihood = ad::softmax_cross_entropy(bound.logits(Var(x_adv), noise), labels);
  Var kl = bound.kl_to_prior();
  Var reg(Tensor::scalar(0.0));
  if (lambda > 0.0) {
    const Tensor& at = spec.point == RegPoint::kAdversarial ? x_adv : x_clean;
    reg = regularizer(bound, at, labels, spec, rng);
  }
  Objective out;
  out.total = combine_objective(likelihood, kl, reg, lambda, alpha_kl, dataset_size);
  out.likelihood = likelihood.item();
  out.kl = kl.item();
  out.reg = reg.item();
  return out;
}

}  // namespace gdl::graddiv
