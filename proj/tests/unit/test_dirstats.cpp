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
#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gdl/diagnostics.hpp"
#include "gdl/dirstats.hpp"
#include "oracles.hpp"

using namespace gdl;
using namespace gdl::stats;

namespace {

GradientBatch batch_of(const Tensor& rows) { return GradientBatch::from_gradients(rows); }

GradientBatch random_batch(std::size_t n, std::size_t p, std::mt19937_64& gen) {
  return batch_of(testing::random_tensor({n, p}, gen));
}

Tensor random_rotation(std::size_t p, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) a(i, j) = normal(gen);
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
  Tensor out({p, p});
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) out.at(i, j) = q(i, j);
  return out;
}

Tensor rotate(const Tensor& rows, const Tensor& q) {
  Tensor out(rows.shape());
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t i = 0; i < rows.cols(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < rows.cols(); ++j) s += q.at(i, j) * rows.at(r, j);
      out.at(r, i) = s;
    }
  return out;
}

}  // namespace

TEST_CASE("sample mrl examples") {
  CHECK(sample_mrl(batch_of(Tensor::matrix({{0.6, 0.8}}))) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sample_mrl(batch_of(Tensor::matrix({{0.6, 0.8}, {-0.6, -0.8}}))) == 0.0);
  const double c = std::cos(M_PI / 3), s = std::sin(M_PI / 3);
  const double rho = sample_mrl(batch_of(Tensor::matrix({{1, 0}, {c, s}})));
  // brute-force average
  const double bx = (1 + c) / 2, by = s / 2;
  CHECK(rho == doctest::Approx(std::sqrt(bx * bx + by * by)).epsilon(1e-15));
  CHECK(rho == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-14));
}

TEST_CASE("gradient batch normalizes, drops zero rows and rejects bad input") {
  set_quiet_warnings(true);
  WarningCapture capture;
  GradientBatch b = GradientBatch::from_gradients(Tensor::matrix({{3, 4}, {0, 0}, {0, 2}}), "x7");
  CHECK(b.size() == 2);
  CHECK(b.norms == std::vector<double>{5, 2});
  CHECK(b.max_norm() == 5);
  CHECK(b.point_id == "x7");
  CHECK(capture.messages().size() == 1);
  for (std::size_t r = 0; r < b.size(); ++r) {
    double n = 0.0;
    for (double v : b.directions.row_span(r)) n += v * v;
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-9);
  }
  CHECK_THROWS_AS(GradientBatch::from_gradients(Tensor::matrix({{0, 0}})), std::invalid_argument);
  CHECK_THROWS_AS(GradientBatch::from_gradients(Tensor::matrix({{1}, {2}})), std::invalid_argument);
  set_quiet_warnings(false);
}

TEST_CASE("lq mrl examples") {
  const GradientBatch b = batch_of(Tensor::matrix({{0.6, -0.8}, {0.0, 0.0}, {0.6, -0.8}, {-0.6, 0.8}}));
  // The zero row is dropped, leaving mean (0.6, -0.8) / 3.
  CHECK(lq_mrl(b, 1.0) == doctest::Approx(1.4 / 3).epsilon(1e-14));
  CHECK(lq_norm({0.3, -0.4}, 1.0) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(lq_norm({0.3, -0.4}, kInfinity) == 0.4);
  CHECK(lq_norm({0.3, -0.4}, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(lq_mrl(b, 0.5), std::invalid_argument);

  std::mt19937_64 gen(1);
  for (int i = 0; i < 100; ++i) {
    const GradientBatch r = random_batch(5, 7, gen);
    CHECK(lq_mrl(r, 2.0) == sample_mrl(r));
    CHECK(lq_mrl(r, 1.0) >= lq_mrl(r, 2.0));
    CHECK(lq_mrl(r, 2.0) >= lq_mrl(r, kInfinity));
  }
}

TEST_CASE("kappa estimate examples") {
  CHECK(estimate_kappa(0.0, 10) == 0.0);
  const double rho = std::sqrt(3.0) / 2;
  CHECK(estimate_kappa(rho, 2) == doctest::Approx(rho * (2 - rho) / 0.25).epsilon(1e-14));
  CHECK(estimate_kappa(rho, 2) == doctest::Approx(3.9282).epsilon(1e-4));

  set_quiet_warnings(true);
  WarningCapture capture;
  const double clamped = estimate_kappa(1.0, 5);
  CHECK(std::isfinite(clamped));
  CHECK(clamped == estimate_kappa(1.0 - kRhoClamp, 5));
  CHECK(capture.messages().size() >= 1);
  set_quiet_warnings(false);
}

TEST_CASE("kappa estimate is monotone in rho") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0 - 1e-6);
  for (int i = 0; i < 1000; ++i) {
    double a = u(gen), b = u(gen);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const std::size_t p = 2 + i % 50;
    CHECK(estimate_kappa(a, p) < estimate_kappa(b, p));
  }
}

TEST_CASE("cosine matrix examples") {
  const Tensor same = cosine_matrix(batch_of(Tensor::matrix({{1, 2}, {1, 2}, {1, 2}})));
  for (double v : same.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_matrix(batch_of(Tensor::matrix({{1, 0}, {0, 1}}))) == Tensor::matrix({{1, 0}, {0, 1}}));
  const Tensor c = cosine_matrix(batch_of(Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}})));
  CHECK(c.at(0, 1) == 0.0);
  CHECK(c.at(0, 2) == -1.0);
  CHECK(c.at(1, 2) == 0.0);
}

TEST_CASE("cosine matrix is a symmetric PSD Gram matrix") {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 50; ++i) {
    const Tensor c = cosine_matrix(random_batch(6, 4 + i % 5, gen));
    Eigen::MatrixXd m(6, 6);
    for (std::size_t r = 0; r < 6; ++r) {
      CHECK(std::abs(c.at(r, r) - 1.0) < 1e-9);
      for (std::size_t k = 0; k < 6; ++k) {
        CHECK(c.at(r, k) == c.at(k, r));
        CHECK(std::abs(c.at(r, k)) <= 1.0);
        m(r, k) = c.at(r, k);
      }
    }
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("statistics are rotation invariant") {
  std::mt19937_64 gen(4);
  for (int i = 0; i < 20; ++i) {
    const std::size_t p = 3 + i % 6;
    const Tensor rows = testing::random_tensor({5, p}, gen);
    const Tensor q = random_rotation(p, gen);
    const GradientBatch a = batch_of(rows), b = batch_of(rotate(rows, q));
    CHECK(std::abs(sample_mrl(a) - sample_mrl(b)) < 1e-9);
    CHECK(std::abs(estimate_kappa(sample_mrl(a), p) - estimate_kappa(sample_mrl(b), p)) < 1e-9);
    const Tensor ca = cosine_matrix(a), cb = cosine_matrix(b);
    for (std::size_t k = 0; k < ca.size(); ++k) CHECK(std::abs(ca[k] - cb[k]) < 1e-9);
  }
}

TEST_CASE("rho is one exactly for identical directions") {
  std::mt19937_64 gen(5);
  const Tensor row = testing::random_tensor({1, 4}, gen);
  Tensor rows({3, 4});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) rows.at(r, c) = row[c] * (r + 1);
  CHECK(std::abs(sample_mrl(batch_of(rows)) - 1.0) < 1e-12);
  for (int i = 0; i < 50; ++i) {
    const double rho = sample_mrl(random_batch(4, 3, gen));
    CHECK(rho >= 0.0);
    CHECK(rho < 1.0 - 1e-6);
  }
}

TEST_CASE("vmf sampler") {
  const VmfParams uniform{{0, 0, 1}, 0.0};
  RngStream rng(6);
  const GradientBatch u = vmf_sample(uniform, 100000, rng);
  CHECK(sample_mrl(u) < 0.02);
  for (std::size_t r = 0; r < u.size(); r += 97) {
    double n = 0.0;
    for (double v : u.directions.row_span(r)) n += v * v;
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-9);
  }
  const double s = 1.0 / std::sqrt(3.0);
  const GradientBatch c = vmf_sample({{s, s, s}, 10.0}, 100000, rng);
  CHECK(std::abs(sample_mrl(c) - testing::a3(10.0)) / testing::a3(10.0) < 0.01);
  const auto m = mean_direction(c);
  const double cos_mu = (m[0] + m[1] + m[2]) * s / sample_mrl(c);
  CHECK(cos_mu > 0.999);
}

TEST_CASE("kappa estimate against the A_3 inversion oracle") {
  CHECK(testing::invert_a3(testing::a3(10.0)) == doctest::Approx(10.0).epsilon(1e-9));
  RngStream rng(7);
  for (double kappa : {1.0, 10.0, 50.0}) {
    const GradientBatch b = vmf_sample({{0, 1, 0}, kappa}, 100000, rng);
    const double rho = sample_mrl(b);
    const double oracle = testing::invert_a3(rho);
    INFO("kappa " << kappa);
    CHECK(std::abs(estimate_kappa(rho, 3) - oracle) / oracle < 0.10);
  }
}

TEST_CASE("vmf sampler in higher dimension") {
  RngStream rng(8);
  std::vector<double> mu(10, 0.0);
  mu[3] = 1.0;
  const GradientBatch b = vmf_sample({mu, 20.0}, 20000, rng);
  CHECK(b.dim() == 10);
  const auto m = mean_direction(b);
  CHECK(m[3] / sample_mrl(b) > 0.99);
}
