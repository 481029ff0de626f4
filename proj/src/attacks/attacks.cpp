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
#include "gdl/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gdl::attacks {
namespace {

constexpr double kZeroNorm = 1e-12;

double row_norm(std::span<const double> row, Norm norm) {
  double acc = 0.0;
  for (double v : row) acc = norm == Norm::kLinf ? std::max(acc, std::abs(v)) : acc + v * v;
  return norm == Norm::kLinf ? acc : std::sqrt(acc);
}

// Uniform point of the eps-ball around each row, clamped into the box.
Tensor uniform_feasible(const Tensor& x0, Norm norm, double eps, RngStream& rng) {
  Tensor x = x0;
  const std::size_t p = x0.cols();
  for (std::size_t r = 0; r < x0.rows(); ++r) {
    auto row = x.row_span(r);
    if (norm == Norm::kLinf) {
      for (double& v : row) v += rng.uniform(-eps, eps);
    } else {
      std::vector<double> dir(p);
      double n2 = 0.0;
      for (double& d : dir) {
        d = rng.normal();
        n2 += d * d;
      }
      const double radius = eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(p));
      const double s = n2 > 0.0 ? radius / std::sqrt(n2) : 0.0;
      for (std::size_t i = 0; i < p; ++i) row[i] += s * dir[i];
    }
    for (double& v : row) v = std::clamp(v, 0.0, 1.0);
  }
  return x;
}

double exact_cos(double deg) {
  if (deg == 0.0) return 1.0;
  if (deg == 90.0) return 0.0;
  if (deg == 180.0) return -1.0;
  return std::cos(deg * std::numbers::pi / 180.0);
}

double exact_sin(double deg) {
  if (deg == 0.0 || deg == 180.0) return 0.0;
  if (deg == 90.0) return 1.0;
  return std::sin(deg * std::numbers::pi / 180.0);
}

}  // namespace

std::string to_string(Norm norm) { return norm == Norm::kLinf ? "linf" : "l2"; }

std::string to_string(Family family) {
  switch (family) {
    case Family::kFgm: return "fgm";
    case Family::kPgd: return "pgd";
    case Family::kEot1Pgd: return "eot1_pgd";
    case Family::kEotPgd: return "eot_pgd";
    case Family::kRotatedPgd: return "rotated_pgd";
    case Family::kRandomSearch: return "random_search";
  }
  return "unknown";
}

std::string to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::kFixed: return "fixed";
    case SamplingMode::kEot1: return "eot1";
    case SamplingMode::kEot: return "eot";
  }
  return "unknown";
}

Norm norm_from_string(const std::string& name) {
  if (name == "linf" || name == "inf") return Norm::kLinf;
  if (name == "l2") return Norm::kL2;
  throw std::invalid_argument("unknown norm '" + name + "'");
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::kFgm, Family::kPgd, Family::kEot1Pgd, Family::kEotPgd, Family::kRotatedPgd,
                   Family::kRandomSearch}) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown attack family '" + name + "'");
}

SamplingMode sampling_mode_from_string(const std::string& name) {
  for (SamplingMode m : {SamplingMode::kFixed, SamplingMode::kEot1, SamplingMode::kEot}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown sampling mode '" + name + "'");
}

SamplingMode AttackSpec::effective_mode() const {
  switch (family) {
    case Family::kPgd: return SamplingMode::kFixed;
    case Family::kEot1Pgd: return SamplingMode::kEot1;
    case Family::kEotPgd: return SamplingMode::kEot;
    default: return mode;
  }
}

void AttackSpec::validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("attack: epsilon must be >= 0");
  const bool iterative = family != Family::kFgm && family != Family::kRandomSearch;
  if (iterative && epsilon > 0.0 && !(step > 0.0 && step <= epsilon)) {
    throw std::invalid_argument("attack: step must lie in (0, epsilon], got " + std::to_string(step));
  }
  if (iterations == 0) throw std::invalid_argument("attack: iterations must be >= 1");
  if (eot_samples == 0) throw std::invalid_argument("attack: eot_samples must be >= 1");
  if (ensemble == 0) throw std::invalid_argument("attack: ensemble must be >= 1");
  if (!(rotation_deg >= 0.0 && rotation_deg <= 180.0)) {
    throw std::invalid_argument("attack: rotation must lie in [0, 180] degrees");
  }
  if (trials == 0) throw std::invalid_argument("attack: trials must be >= 1");
}

double AttackResult::success_rate() const {
  if (success.empty()) return 0.0;
  return static_cast<double>(std::count(success.begin(), success.end(), 1)) /
         static_cast<double>(success.size());
}

Tensor project_ball(const Tensor& delta, Norm norm, double radius) {
  if (radius < 0.0) throw std::invalid_argument("project_ball: negative radius");
  Tensor out = delta;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row_span(r);
    if (norm == Norm::kLinf) {
      for (double& v : row) v = std::clamp(v, -radius, radius);
    } else {
      const double n = row_norm(row, Norm::kL2);
      if (n > radius) {
        const double s = radius / n;
        for (double& v : row) v *= s;
      }
    }
  }
  return out;
}

Tensor steepest_step(const Tensor& grad, Norm norm, double alpha) {
  Tensor out(grad.shape());
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    auto g = grad.row_span(r);
    auto d = out.row_span(r);
    if (norm == Norm::kLinf) {
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] > 0 ? alpha : (g[i] < 0 ? -alpha : 0.0);
    } else {
      const double n = row_norm(g, Norm::kL2);
      if (n < kZeroNorm) continue;
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = alpha * g[i] / n;
    }
  }
  return out;
}

Tensor project_feasible(const Tensor& x, const Tensor& x0, Norm norm, double radius) {
  Tensor delta(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) delta[i] = x[i] - x0[i];
  delta = project_ball(delta, norm, radius);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x0[i] + delta[i], 0.0, 1.0);
  return out;
}

GradientSource model_source(net::SampleModel model) {
  return [model = std::move(model)](const Tensor& x, std::span<const int> labels) {
    return model.loss_and_input_gradient(x, labels).gradients;
  };
}

GradientSource fixed_source(const net::StochasticNet& net, RngStream& rng) {
  RngStream stream = rng.fork();
  return model_source(net::sample_model(net, stream));
}

GradientSource eot1_source(const net::StochasticNet& net, RngStream rng) {
  return [&net, rng](const Tensor& x, std::span<const int> labels) mutable {
    RngStream stream = rng.fork();
    return net::sample_model(net, stream).loss_and_input_gradient(x, labels).gradients;
  };
}

GradientSource eot_source(const net::StochasticNet& net, std::size_t n, RngStream rng) {
  return [&net, n, rng](const Tensor& x, std::span<const int> labels) mutable {
    return eot_gradient(net, x, labels, n, rng);
  };
}

GradientSource rotated_source(GradientSource inner, double theta_deg, RngStream rng) {
  return [inner = std::move(inner), theta_deg, rng](const Tensor& x, std::span<const int> labels) mutable {
    Tensor g = inner(x, labels);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto row = g.row_span(r);
      if (row_norm(row, Norm::kL2) < kZeroNorm) continue;
      const auto rotated = rotate_gradient(row, theta_deg, rng);
      std::copy(rotated.begin(), rotated.end(), row.begin());
    }
    return g;
  };
}

GradientSource make_source(const net::StochasticNet& net, const AttackSpec& spec, RngStream& rng) {
  GradientSource base;
  switch (spec.effective_mode()) {
    case SamplingMode::kFixed: base = fixed_source(net, rng); break;
    case SamplingMode::kEot1: base = eot1_source(net, rng.fork()); break;
    case SamplingMode::kEot: base = eot_source(net, spec.eot_samples, rng.fork()); break;
  }
  if (spec.family == Family::kRotatedPgd) return rotated_source(std::move(base), spec.rotation_deg, rng.fork());
  return base;
}

Tensor eot_gradient(const net::StochasticNet& net, const Tensor& x, std::span<const int> labels,
                    std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("eot_gradient: n must be >= 1");
  Tensor sum(x.shape());
  for (std::size_t k = 0; k < n; ++k) {
    RngStream stream = rng.fork();
    const Tensor g = net::sample_model(net, stream).loss_and_input_gradient(x, labels).gradients;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : sum.data()) v *= inv;
  return sum;
}

std::vector<double> rotate_gradient(std::span<const double> grad, double theta_deg, RngStream& rng) {
  const std::size_t p = grad.size();
  if (p < 2) throw std::invalid_argument("rotate_gradient: dimension must be >= 2");
  if (!(theta_deg >= 0.0 && theta_deg <= 180.0)) {
    throw std::invalid_argument("rotate_gradient: theta must lie in [0, 180] degrees");
  }
  const double norm = row_norm(grad, Norm::kL2);
  if (norm < kZeroNorm) throw std::invalid_argument("rotate_gradient: zero gradient has no direction");
  std::vector<double> out(grad.begin(), grad.end());
  if (theta_deg == 0.0) return out;

  std::vector<double> unit(p);
  for (std::size_t i = 0; i < p; ++i) unit[i] = grad[i] / norm;
  std::vector<double> axis(p);
  double axis_norm = 0.0;
  while (axis_norm < 1e-6) {
    for (double& a : axis) a = rng.normal();
    // Two Gram-Schmidt passes keep the axis orthogonal to rounding level.
    for (int pass = 0; pass < 2; ++pass) {
      double dot = 0.0;
      for (std::size_t i = 0; i < p; ++i) dot += axis[i] * unit[i];
      for (std::size_t i = 0; i < p; ++i) axis[i] -= dot * unit[i];
    }
    axis_norm = row_norm(axis, Norm::kL2);
  }
  const double c = exact_cos(theta_deg), s = exact_sin(theta_deg);
  for (std::size_t i = 0; i < p; ++i) out[i] = norm * (c * unit[i] + s * axis[i] / axis_norm);
  return out;
}

Scorer ensemble_scorer(const net::StochasticNet& net, std::size_t n_ensemble, RngStream rng) {
  return [&net, n_ensemble, rng](const Tensor& x) mutable {
    RngStream stream = rng.fork();
    return net::ensemble_predict(net, x, n_ensemble, stream);
  };
}

Scorer model_scorer(net::SampleModel model) {
  return [model = std::move(model)](const Tensor& x) { return model.probabilities(x); };
}

void score(AttackResult& result, std::span<const int> labels, const Scorer& scorer) {
  const Tensor probs = scorer(result.adversarial);
  const auto predicted = net::argmax_rows(probs);
  result.success.assign(labels.size(), 0);
  result.losses.assign(labels.size(), 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    result.success[r] = predicted[r] != labels[r];
    result.losses[r] = -std::log(std::max(probs.at(r, labels[r]), 1e-300));
  }
}

AttackResult fgm(const GradientSource& source, const Tensor& x0, std::span<const int> labels,
                 Norm norm, double epsilon) {
  AttackResult result;
  result.iterations = 1;
  if (epsilon == 0.0) {
    result.adversarial = x0;
    return result;
  }
  const Tensor step = steepest_step(source(x0, labels), norm, epsilon);
  Tensor x = x0;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += step[i];
  result.adversarial = project_feasible(x, x0, norm, epsilon);
  return result;
}

AttackResult pgd(const GradientSource& source, const Tensor& x0, std::span<const int> labels,
                 const AttackSpec& spec, RngStream& rng) {
  AttackResult result;
  result.iterations = spec.iterations;
  if (spec.epsilon == 0.0) {
    result.adversarial = x0;
    return result;
  }
  Tensor x = spec.random_start ? uniform_feasible(x0, spec.norm, spec.epsilon, rng) : x0;
  for (std::size_t it = 0; it < spec.iterations; ++it) {
    const Tensor step = steepest_step(source(x, labels), spec.norm, spec.step);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += step[i];
    x = project_feasible(x, x0, spec.norm, spec.epsilon);
  }
  result.adversarial = std::move(x);
  return result;
}

namespace {

constexpr std::size_t kSearchChunk = 1000;
constexpr std::size_t kMaxConfirmPerChunk = 16;

struct Candidate {
  double loss;
  std::size_t index;
};

}  // namespace

AttackResult random_search(const net::StochasticNet& net, const Tensor& x0,
                           std::span<const int> labels, const AttackSpec& spec, RngStream& rng,
                           const Scorer& confirm) {
  const std::size_t p = x0.cols();
  AttackResult result;
  result.adversarial = x0;
  result.iterations = spec.trials;
  result.success.assign(x0.rows(), 0);
  result.losses.assign(x0.rows(), -1.0);
  for (std::size_t r = 0; r < x0.rows(); ++r) {
    const Tensor clean = Tensor::row(x0.row_span(r));
    const std::vector<int> label{labels[r]};
    auto confirm_one = [&](const Tensor& candidate) {
      AttackResult probe;
      probe.adversarial = candidate;
      score(probe, label, confirm);
      if (probe.losses[0] > result.losses[r] || probe.success[0]) {
        std::copy(candidate.data().begin(), candidate.data().end(), result.adversarial.row_span(r).begin());
        result.losses[r] = probe.losses[0];
      }
      return probe.success[0] != 0;
    };
    if (spec.epsilon == 0.0) {
      result.success[r] = confirm_one(clean);
      continue;
    }
    for (std::size_t done = 0; done < spec.trials && !result.success[r];) {
      const std::size_t chunk = std::min(kSearchChunk, spec.trials - done);
      Tensor batch({chunk, p});
      for (std::size_t k = 0; k < chunk; ++k) {
        std::copy(clean.data().begin(), clean.data().end(), batch.row_span(k).begin());
      }
      batch = uniform_feasible(batch, spec.norm, spec.epsilon, rng);
      RngStream screen_stream = rng.fork();
      const net::SampleModel screen = net::sample_model(net, screen_stream);
      const Tensor probs = screen.probabilities(batch);
      const auto predicted = net::argmax_rows(probs);
      std::vector<Candidate> fooled;
      Candidate best{-1.0, 0};
      for (std::size_t k = 0; k < chunk; ++k) {
        const double loss = -std::log(std::max(probs.at(k, labels[r]), 1e-300));
        if (loss > best.loss) best = {loss, k};
        if (predicted[k] != labels[r]) fooled.push_back({loss, k});
      }
      std::stable_sort(fooled.begin(), fooled.end(),
                       [](const Candidate& a, const Candidate& b) { return a.loss > b.loss; });
      if (fooled.size() > kMaxConfirmPerChunk) fooled.resize(kMaxConfirmPerChunk);
      if (fooled.empty() || fooled.front().index != best.index) fooled.push_back(best);
      for (const Candidate& c : fooled) {
        if (confirm_one(Tensor::row(batch.row_span(c.index)))) {
          result.success[r] = 1;
          break;
        }
      }
      done += chunk;
    }
  }
  return result;
}

AttackResult random_search(const net::StochasticNet& net, const Tensor& x0,
                           std::span<const int> labels, const AttackSpec& spec, RngStream& rng) {
  return random_search(net, x0, labels, spec, rng, ensemble_scorer(net, spec.ensemble, rng.fork()));
}

AttackResult run_attack(const net::StochasticNet& net, const Tensor& x0, std::span<const int> labels,
                        const AttackSpec& spec, RngStream& rng) {
  spec.validate();
  if (labels.size() != x0.rows()) {
    throw ShapeError("attack", x0.shape(), Shape{labels.size(), x0.cols()});
  }
  const Scorer scorer = ensemble_scorer(net, spec.ensemble, rng.fork());
  if (spec.family == Family::kRandomSearch) return random_search(net, x0, labels, spec, rng, scorer);
  const GradientSource source = make_source(net, spec, rng);
  AttackResult result = spec.family == Family::kFgm ? fgm(source, x0, labels, spec.norm, spec.epsilon)
                                                    : pgd(source, x0, labels, spec, rng);
  score(result, labels, scorer);
  return result;
}

}  // namespace gdl::attacks
