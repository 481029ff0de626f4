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
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "gdl/autodiff.hpp"
#include "gdl/grad_check.hpp"
#include "fd_suites.hpp"
#include "oracles.hpp"

using namespace gdl;
using ad::Var;


TEST_CASE("forward examples") {
  Var a(Tensor::matrix({{1, 2}, {3, 4}}));
  Var b(Tensor::matrix({{1}, {1}}));
  CHECK(ad::matmul(a, b).value() == Tensor::matrix({{3}, {7}}));

  const std::vector<int> label{0};
  CHECK(ad::softmax_cross_entropy(Var(Tensor::matrix({{0, 0}})), label).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(ad::relu(Var(Tensor::scalar(-1.5))).item() == 0.0);
}

TEST_CASE("shape mismatch names the primitive and both shapes") {
  Var a(Tensor({2, 3}));
  Var b(Tensor({3, 2}));
  try {
    ad::add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(e.primitive() == "add");
    const std::string what = e.what();
    CHECK(what.find("[2, 3]") != std::string::npos);
    CHECK(what.find("[3, 2]") != std::string::npos);
  }
  CHECK_THROWS_AS(ad::matmul(a, a), ShapeError);
}

TEST_CASE("polynomial first and second derivative") {
  ad::Tape tape;
  Var x = tape.leaf(Tensor::scalar(3.0));
  Var y = ad::mul(x, x);
  Var dy = ad::grad(y, x, /*retain_graph=*/true);
  CHECK(dy.item() == 6.0);
  CHECK(dy.requires_grad());
  Var d2y = ad::grad(dy, x);
  CHECK(d2y.item() == 2.0);
  CHECK_FALSE(d2y.requires_grad());
}

TEST_CASE("backward error contract") {
  ad::Tape tape;
  Var x = tape.leaf(Tensor({2, 2}, 1.0));
  Var unrelated = tape.leaf(Tensor::scalar(1.0));
  CHECK_THROWS_AS(ad::grad(ad::mul(x, x), x), ad::GraphError);  // non-scalar
  Var y = ad::sum(ad::mul(x, x));
  CHECK_THROWS_AS(ad::grad(y, unrelated), ad::GraphError);
  CHECK_THROWS_AS(ad::grad(y, Var(Tensor::scalar(2.0))), ad::GraphError);
  ad::Tape other;
  Var z = other.leaf(Tensor({2, 2}, 1.0));
  CHECK_THROWS_AS(ad::add(x, z), ad::GraphError);
}

TEST_CASE("every primitive's adjoint matches central differences at 100 points") {
  std::mt19937_64 gen(20260101);
  for (const testing::Primitive& p : testing::primitives()) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) worst = std::max(worst, testing::primitive_error(p, gen));
    INFO("primitive " << p.name);
    CHECK(worst < 1e-6);
  }
}

namespace {

// 2-layer MLP with parameters packed as [W1 (h x p), b1 (1 x h), W2 (c x h), b2 (1 x c)].
struct TinyMlp {
  std::size_t p, h, c;
  std::size_t size() const { return h * p + h + c * h + c; }
  std::vector<Var> unpack(const Var& theta) const {
    std::vector<Var> parts;
    std::size_t offset = 0;
    auto take = [&](std::size_t rows, std::size_t cols) {
      Var flat = ad::slice_rows(theta, offset, offset + rows * cols);
      offset += rows * cols;
      parts.push_back(ad::reshape(flat, {rows, cols}));
    };
    take(h, p);
    take(1, h);
    take(c, h);
    take(1, c);
    return parts;
  }
  Var logits(const Var& theta, const Var& x) const {
    auto w = unpack(theta);
    Var hidden = ad::leaky_relu(ad::add_row(ad::matmul(x, w[0], ad::Trans::kNo, ad::Trans::kYes), w[1]), 0.1);
    return ad::add_row(ad::matmul(hidden, w[2], ad::Trans::kNo, ad::Trans::kYes), w[3]);
  }
};

}  // namespace

TEST_CASE("double backprop: grad_theta ||grad_x f||^2 matches finite differences") {
  std::mt19937_64 gen(7);
  const TinyMlp mlp{2, 16, 2};
  const std::vector<int> labels{1};
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor theta0 = testing::random_tensor({mlp.size(), 1}, gen);
    const Tensor x0 = testing::random_tensor({1, 2}, gen);
    auto objective = [&](const Var& theta, bool retain) {
      Var x = retain ? theta.tape()->leaf(x0) : Var(x0);
      if (!retain) {
        ad::Tape inner;
        Var xi = inner.leaf(x0);
        Var th(theta.value());
        Var loss = ad::softmax_cross_entropy(mlp.logits(th, xi), labels);
        Var gx = ad::grad(loss, xi);
        return Var(Tensor::scalar(ad::sum(ad::mul(gx, gx)).item()));
      }
      Var loss = ad::softmax_cross_entropy(mlp.logits(theta, x), labels);
      Var gx = ad::grad(loss, x, true);
      return ad::sum(ad::mul(gx, gx));
    };
    ad::Tape tape;
    Var theta = tape.leaf(theta0);
    const auto analytic = testing::to_vector(ad::grad(objective(theta, true), theta).value());
    auto f = [&](const std::vector<double>& t) {
      return objective(Var(Tensor(theta0.shape(), t)), false).item();
    };
    const auto numeric = testing::central_differences(f, testing::to_vector(theta0), 1e-5);
    CHECK(testing::relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("double backprop: grad_theta cos(grad_x L1, grad_x L2) matches finite differences") {
  std::mt19937_64 gen(11);
  const TinyMlp mlp{3, 8, 2};
  const std::vector<int> labels{0, 1};
  const Tensor noise = testing::random_tensor({mlp.size(), 1}, gen, -0.3, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor theta0 = testing::random_tensor({mlp.size(), 1}, gen);
    const Tensor x0 = testing::random_tensor({2, 3}, gen);
    // Two "sample models": theta and theta + noise.
    auto cos_of = [&](ad::Tape& tape, const Var& theta) {
      Var x = tape.leaf(x0);
      Var g1 = ad::grad(ad::softmax_cross_entropy(mlp.logits(theta, x), labels), x, true);
      Var g2 = ad::grad(ad::softmax_cross_entropy(mlp.logits(ad::add(theta, Var(noise)), x), labels), x, true);
      return ad::cosine(g1, g2);
    };
    ad::Tape tape;
    Var theta = tape.leaf(theta0);
    const auto analytic = testing::to_vector(ad::grad(cos_of(tape, theta), theta).value());
    auto f = [&](const std::vector<double>& t) {
      ad::Tape scratch;
      return cos_of(scratch, Var(Tensor(theta0.shape(), t))).item();
    };
    const auto numeric = testing::central_differences(f, testing::to_vector(theta0), 1e-5);
    CHECK(testing::relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("backward is linear") {
  std::mt19937_64 gen(3);
  const Tensor x0 = testing::random_tensor({4, 3}, gen);
  const double a = 0.75, b = -1.25;
  ad::Tape tape;
  Var x = tape.leaf(x0);
  Var u = ad::sum(ad::exp(x));
  Var v = ad::sum(ad::mul(x, ad::softmax_rows(x)));
  const Tensor gu = ad::grad(u, x).value();
  const Tensor gv = ad::grad(v, x).value();
  const Tensor gw = ad::grad(ad::add(ad::scale(u, a), ad::scale(v, b)), x).value();
  for (std::size_t i = 0; i < gw.size(); ++i) {
    CHECK(gw[i] == doctest::Approx(a * gu[i] + b * gv[i]).epsilon(1e-14));
  }
}

TEST_CASE("identical inputs give bit-identical values and gradients") {
  auto run = [] {
    std::mt19937_64 gen(99);
    const Tensor w0 = testing::random_tensor({8, 5}, gen);
    const Tensor x0 = testing::random_tensor({6, 5}, gen);
    ad::Tape tape;
    Var w = tape.leaf(w0);
    Var x = tape.leaf(x0);
    Var loss = ad::softmax_cross_entropy(ad::matmul(x, w, ad::Trans::kNo, ad::Trans::kYes),
                                         std::vector<int>{0, 1, 2, 3, 4, 5});
    Var gx = ad::grad(loss, x, true);
    Var gw = ad::grad(ad::sum(ad::mul(gx, gx)), w);
    return std::pair{loss.value(), gw.value()};
  };
  CHECK(run() == run());
}

TEST_CASE("a variable outliving its tape becomes a constant") {
  Var kept;
  {
    ad::Tape tape;
    Var x = tape.leaf(Tensor::scalar(2.0));
    kept = ad::mul(x, x);
    CHECK(kept.requires_grad());
  }
  CHECK_FALSE(kept.requires_grad());
  CHECK(kept.item() == 4.0);
}

TEST_CASE("grad_check examples") {
  SUBCASE("sum of squares at the origin") {
    auto report = ad::grad_check([](const Var& x) { return ad::sum(ad::mul(x, x)); },
                                 Tensor({3}, 0.0), 1e-5, 1e-6);
    CHECK(report.passed);
    CHECK(report.max_abs_error == 0.0);
    for (double v : report.analytic) CHECK(v == 0.0);
  }
  SUBCASE("exp(x*y) at (1, 1)") {
    auto fn = [](const Var& v) {
      Var x = ad::slice_rows(v, 0, 1);
      Var y = ad::slice_rows(v, 1, 2);
      return ad::sum(ad::exp(ad::mul(x, y)));
    };
    auto report = ad::grad_check(fn, Tensor({2, 1}, 1.0), 1e-5, 1e-6);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-6);
    CHECK(report.analytic[0] == doctest::Approx(std::exp(1.0)));
  }
  SUBCASE("sign is flagged as non-differentiable") {
    auto report = ad::grad_check(
        [](const Var& x) { return ad::sum(ad::mul(ad::sign(x), x)); },
        Tensor::matrix({{0.5, -0.25}}), 1e-5, 1e-6);
    REQUIRE(report.nondifferentiable.size() == 1);
    CHECK(report.nondifferentiable[0] == "sign");
  }
  SUBCASE("non-finite probe names the coordinate") {
    auto fn = [](const Var& x) { return ad::sum(ad::log(x)); };
    try {
      ad::grad_check(fn, Tensor::matrix({{1.0, 1e-6}}), 1e-5, 1e-6);
      FAIL("expected domain_error");
    } catch (const std::domain_error& e) {
      CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
    }
  }
  SUBCASE("step must be positive") {
    CHECK_THROWS_AS(ad::grad_check([](const Var& x) { return ad::sum(x); }, Tensor({2}, 1.0), 0.0, 1e-6),
                    std::invalid_argument);
  }
}
