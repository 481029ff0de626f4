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
#ifndef GDL_TESTS_SUPPORT_FD_SUITES_HPP_
#define GDL_TESTS_SUPPORT_FD_SUITES_HPP_

// Finite-difference sweeps shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gdl/autodiff.hpp"
#include "gdl/graddiv.hpp"
#include "gdl/stochastic_net.hpp"
#include "oracles.hpp"

namespace gdl::testing {

struct Primitive {
  std::string name;
  std::vector<Shape> shapes;
  std::function<ad::Var(const std::vector<ad::Var>&)> apply;
  bool positive = false;  // operands drawn from (0.2, 2)
};

inline const std::vector<int> kPrimitiveLabels{2, 0, 1};

inline std::vector<Primitive> primitives() {
  using T = ad::Trans;
  using V = std::vector<ad::Var>;
  const auto& y = kPrimitiveLabels;
  return {
      {"add", {{3, 4}, {3, 4}}, [](const V& v) { return ad::add(v[0], v[1]); }},
      {"sub", {{3, 4}, {3, 4}}, [](const V& v) { return ad::sub(v[0], v[1]); }},
      {"mul", {{3, 4}, {3, 4}}, [](const V& v) { return ad::mul(v[0], v[1]); }},
      {"div", {{3, 4}, {3, 4}}, [](const V& v) { return ad::div(v[0], v[1]); }, true},
      {"maximum", {{3, 4}, {3, 4}}, [](const V& v) { return ad::maximum(v[0], v[1]); }},
      {"neg", {{3, 4}}, [](const V& v) { return ad::neg(v[0]); }},
      {"scale", {{3, 4}}, [](const V& v) { return ad::scale(v[0], -2.5); }},
      {"add_scalar", {{3, 4}}, [](const V& v) { return ad::add_scalar(v[0], 0.7); }},
      {"exp", {{3, 4}}, [](const V& v) { return ad::exp(v[0]); }},
      {"log", {{3, 4}}, [](const V& v) { return ad::log(v[0]); }, true},
      {"sqrt", {{3, 4}}, [](const V& v) { return ad::sqrt(v[0]); }, true},
      {"relu", {{3, 4}}, [](const V& v) { return ad::relu(v[0]); }},
      {"leaky_relu", {{3, 4}}, [](const V& v) { return ad::leaky_relu(v[0], 0.1); }},
      {"clamp", {{3, 4}}, [](const V& v) { return ad::clamp(v[0], -0.5, 0.5); }},
      {"matmul_nn", {{3, 4}, {4, 2}}, [](const V& v) { return ad::matmul(v[0], v[1]); }},
      {"matmul_nt", {{3, 4}, {2, 4}}, [](const V& v) { return ad::matmul(v[0], v[1], T::kNo, T::kYes); }},
      {"matmul_tn", {{4, 3}, {4, 2}}, [](const V& v) { return ad::matmul(v[0], v[1], T::kYes, T::kNo); }},
      {"matmul_tt", {{4, 3}, {2, 4}}, [](const V& v) { return ad::matmul(v[0], v[1], T::kYes, T::kYes); }},
      {"transpose", {{3, 4}}, [](const V& v) { return ad::transpose(v[0]); }},
      {"row_sum", {{3, 4}}, [](const V& v) { return ad::row_sum(v[0]); }},
      {"col_sum", {{3, 4}}, [](const V& v) { return ad::col_sum(v[0]); }},
      {"broadcast_rows", {{1, 4}}, [](const V& v) { return ad::broadcast_rows(v[0], 3); }},
      {"broadcast_cols", {{3, 1}}, [](const V& v) { return ad::broadcast_cols(v[0], 4); }},
      {"scale_rows", {{3, 4}, {3, 1}}, [](const V& v) { return ad::scale_rows(v[0], v[1]); }},
      {"add_row", {{3, 4}, {1, 4}}, [](const V& v) { return ad::add_row(v[0], v[1]); }},
      {"sum", {{3, 4}}, [](const V& v) { return ad::sum(v[0]); }},
      {"mean", {{3, 4}}, [](const V& v) { return ad::mean(v[0]); }},
      {"expand", {{}}, [](const V& v) { return ad::expand(v[0], {3, 4}); }},
      {"softmax_rows", {{3, 4}}, [](const V& v) { return ad::softmax_rows(v[0]); }},
      {"cross_entropy_rows", {{3, 4}}, [&y](const V& v) { return ad::cross_entropy_rows(v[0], y); }},
      {"softmax_cross_entropy", {{3, 4}}, [&y](const V& v) { return ad::softmax_cross_entropy(v[0], y); }},
      {"reshape", {{3, 4}}, [](const V& v) { return ad::reshape(v[0], {2, 6}); }},
      {"concat_rows", {{2, 4}, {3, 4}}, [](const V& v) { return ad::concat_rows(v); }},
      {"slice_rows", {{5, 4}}, [](const V& v) { return ad::slice_rows(v[0], 1, 4); }},
      {"pad_rows", {{2, 4}}, [](const V& v) { return ad::pad_rows(v[0], 1, 2); }},
      {"dot", {{3, 4}, {3, 4}}, [](const V& v) { return ad::dot(v[0], v[1]); }},
      {"norm", {{3, 4}}, [](const V& v) { return ad::norm(v[0]); }},
      {"cosine", {{3, 4}, {3, 4}}, [](const V& v) { return ad::cosine(v[0], v[1]); }},
  };
}

inline Tensor draw_operand(const Primitive& p, const Shape& shape, std::mt19937_64& gen) {
  if (p.positive) return random_tensor(shape, gen, 0.2, 2.0);
  return random_away_from_zero(shape, gen, 1e-2);
}

// Contracts the primitive's output with fixed weights into a scalar.
inline double contracted(const Primitive& p, const std::vector<Tensor>& operands, const Tensor& weights) {
  ad::GradModeGuard no_grad(false);
  std::vector<ad::Var> vars(operands.begin(), operands.end());
  return ad::sum(ad::mul(p.apply(vars), ad::Var(weights))).item();
}

/// Worst relative error over the operands of one random draw.
inline double primitive_error(const Primitive& p, std::mt19937_64& gen) {
  std::vector<Tensor> operands;
  for (const Shape& s : p.shapes) operands.push_back(draw_operand(p, s, gen));
  Tensor out_shape_probe;
  {
    ad::GradModeGuard no_grad(false);
    std::vector<ad::Var> vars(operands.begin(), operands.end());
    out_shape_probe = p.apply(vars).value();
  }
  const Tensor weights = random_tensor(out_shape_probe.shape(), gen);
  double worst = 0.0;
  for (std::size_t k = 0; k < operands.size(); ++k) {
    ad::Tape tape;
    std::vector<ad::Var> vars(operands.begin(), operands.end());
    vars[k] = tape.leaf(operands[k]);
    ad::Var y = ad::sum(ad::mul(p.apply(vars), ad::Var(weights)));
    const auto analytic = to_vector(ad::grad(y, vars[k]).value());
    const Shape shape = operands[k].shape();
    auto f = [&](const std::vector<double>& x) {
      std::vector<Tensor> probe = operands;
      probe[k] = Tensor(shape, x);
      return contracted(p, probe, weights);
    };
    const auto numeric = central_differences(f, to_vector(operands[k]), 1e-5);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

inline net::StochasticNet tiny_net(std::uint64_t seed) {
  net::StochasticNet net(net::Architecture::mlp({2, 8, 2}, true), 0.1);
  RngStream rng(seed);
  net.initialize(rng);
  net.set_logsigma(std::log(0.3));
  return net;
}

/// Relative error of grad_theta of one regularizer on a 2-8-2 net against
/// central differences with the noise draws replayed.
inline double regularizer_fd_error(graddiv::RegKind kind, std::uint64_t seed) {
  net::StochasticNet net = tiny_net(100 + seed);
  std::mt19937_64 gen(seed);
  const Tensor x = random_tensor({3, 2}, gen);
  const std::vector<int> labels{0, 1, 1};
  graddiv::RegularizerSpec spec;
  spec.kind = kind;
  spec.samples = kind == graddiv::RegKind::kDpp ? 2 : 3;
  ad::Tape tape;
  net::BoundNet bound(net, tape);
  RngStream rng(seed);
  const ad::Var r = graddiv::regularizer(bound, x, labels, spec, rng);
  const auto analytic = ad::grad(r, bound.params());
  // With two classes the bias gradients vanish analytically, so compare the
  // full parameter vector against one scale.
  std::vector<double> all_analytic, all_numeric;
  for (std::size_t k = 0; k < net.parameters().size(); ++k) {
    const Tensor original = net.parameters()[k].value;
    auto fn = [&](const std::vector<double>& v) {
      net.parameters()[k].value = Tensor(original.shape(), v);
      ad::Tape scratch;
      net::BoundNet b(net, scratch);
      RngStream replay(seed);
      const double out = graddiv::regularizer(b, x, labels, spec, replay).item();
      net.parameters()[k].value = original;
      return out;
    };
    const auto numeric = central_differences(fn, to_vector(original), 1e-5);
    const auto a = to_vector(analytic[k].value());
    all_analytic.insert(all_analytic.end(), a.begin(), a.end());
    all_numeric.insert(all_numeric.end(), numeric.begin(), numeric.end());
  }
  return relative_error(all_analytic, all_numeric);
}

}  // namespace gdl::testing

#endif  // GDL_TESTS_SUPPORT_FD_SUITES_HPP_
