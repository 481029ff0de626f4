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
#include <limits>
#include <vector>

#include "doctest.h"
#include "gdl/diagnostics.hpp"
#include "gdl/dirstats.hpp"
#include "gdl/trainer.hpp"

using namespace gdl;
using namespace gdl::train;

namespace {

net::StochasticNet moons_net(bool stochastic, std::uint64_t seed) {
  net::StochasticNet net(net::Architecture::mlp({2, 32, 32, 2}, stochastic), 0.05);
  RngStream rng = RngStream::for_purpose(seed, purpose::kWeights);
  net.initialize(rng);
  return net;
}

// Clean training on two moons; the KL normalizer is the full MNIST |D| (60000).
TrainSchedule moons_schedule(std::size_t epochs, std::size_t batch) {
  TrainSchedule s;
  s.epochs = epochs;
  s.batch_size = batch;
  s.learning_rate = 0.01;
  s.decay_epochs = {};
  s.warmup = 0;
  s.rampup = 0;
  s.kl_size = 60000;
  s.attack.epsilon = 0.0;
  s.reg.samples = 2;
  s.seed = 3;
  return s;
}

double ensemble_accuracy(const net::StochasticNet& net, const data::Dataset& d, std::size_t models) {
  RngStream rng(11);
  const Tensor p = net::ensemble_predict(net, d.x, models, rng);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.cols(); ++c)
      if (p.at(i, c) > p.at(i, best)) best = c;
    hits += static_cast<int>(best) == d.y[i];
  }
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("lambda schedule examples") {
  CHECK(lambda_schedule(2, 3, 20, 1.0) == 0.0);
  CHECK(lambda_schedule(13, 3, 20, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lambda_schedule(3, 3, 20, 1.0) == 0.0);
  CHECK(lambda_schedule(23, 3, 20, 2.0) == 2.0);
  CHECK(lambda_schedule(100, 3, 20, 2.0) == 2.0);
  // rampup 0 is a step at warmup.
  CHECK(lambda_schedule(4, 5, 0, 1.5) == 0.0);
  CHECK(lambda_schedule(5, 5, 0, 1.5) == 1.5);
  CHECK(lambda_schedule(0, 0, 0, 0.7) == 0.7);
}

TEST_CASE("lambda schedule is piecewise linear and continuous") {
  const std::size_t warmup = 4, rampup = 8;
  for (std::size_t e = 0; e + 1 < 30; ++e) {
    const double a = lambda_schedule(e, warmup, rampup, 1.0);
    const double b = lambda_schedule(e + 1, warmup, rampup, 1.0);
    CHECK(b >= a);
    CHECK(b - a <= 1.0 / rampup + 1e-15);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("schedule validation, learning rate decay and decay epochs") {
  TrainSchedule s;
  CHECK_NOTHROW(s.validate());
  s.warmup = 15;
  s.rampup = 6;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = TrainSchedule{};
  s.reg.lambda = -1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = TrainSchedule{};
  s.attack.family = attacks::Family::kEotPgd;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = TrainSchedule{};
  s.batch_size = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = TrainSchedule{};
  s.learning_rate = 1e-3;
  s.decay_epochs = {10, 15};
  CHECK(s.learning_rate_at(9) == 1e-3);
  CHECK(s.learning_rate_at(10) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.learning_rate_at(15) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(s.is_decay_epoch(9));
  CHECK(s.is_decay_epoch(14));
  CHECK_FALSE(s.is_decay_epoch(10));
}

TEST_CASE("adam matches a hand-unrolled reference") {
  std::vector<net::Parameter> params{{"w", Tensor({2}, {1.0, -2.0})}};
  Adam adam;
  const std::vector<std::vector<double>> grads{{0.5, -4.0}, {0.25, 1.0}, {-1.0, 2.0}};
  std::vector<double> w{1.0, -2.0}, m(2, 0.0), v(2, 0.0);
  const double lr = 0.1;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const std::vector<Tensor> g{Tensor({2}, grads[t - 1])};
    adam.step(params, g, lr);
    for (std::size_t i = 0; i < 2; ++i) {
      const double gi = grads[t - 1][i];
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mh = m[i] / (1.0 - std::pow(0.9, t));
      const double vh = v[i] / (1.0 - std::pow(0.999, t));
      w[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(params[0].value[0] == doctest::Approx(w[0]).epsilon(1e-14));
    CHECK(params[0].value[1] == doctest::Approx(w[1]).epsilon(1e-14));
  }
  CHECK(adam.steps() == 3);
  // The first bias-corrected step moves each coordinate by lr against the sign.
  std::vector<net::Parameter> fresh{{"w", Tensor({2}, {0.0, 0.0})}};
  Adam first;
  first.step(fresh, std::vector<Tensor>{Tensor({2}, {3.0, -0.01})}, 0.1);
  CHECK(fresh[0].value[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(fresh[0].value[1] == doctest::Approx(0.1).epsilon(1e-5));
}

TEST_CASE("training logs one row per epoch and reruns identically") {
  set_quiet_warnings(true);
  RngStream d(1);
  const data::Dataset ds = data::two_moons(64, 0.1, d);
  TrainSchedule s = moons_schedule(4, 16);
  s.attack.epsilon = 0.1;
  s.attack.step = 0.025;
  s.attack.iterations = 3;
  s.warmup = 1;
  s.rampup = 2;
  s.reg.lambda = 1.0;
  s.decay_epochs = {2};
  s.probe_samples = 4;

  std::vector<std::size_t> checkpoints;
  Callbacks cb;
  cb.on_checkpoint = [&](const net::StochasticNet&, std::size_t epoch) { checkpoints.push_back(epoch); };
  net::StochasticNet a = moons_net(true, 2);
  const TrainLog la = train::train(a, ds, s, cb);
  net::StochasticNet b = moons_net(true, 2);
  const TrainLog lb = train::train(b, ds, s);

  REQUIRE(la.size() == 4);
  for (std::size_t e = 0; e < la.size(); ++e) {
    CHECK(la[e].epoch == e);
    CHECK(la[e].lambda == s.lambda_at(e));
    CHECK(la[e].learning_rate == s.learning_rate_at(e));
    CHECK(std::isfinite(la[e].loss));
  }
  CHECK(la == lb);
  for (std::size_t k = 0; k < a.parameters().size(); ++k) {
    const auto& pa = a.parameters()[k].value.data();
    const auto& pb = b.parameters()[k].value.data();
    CHECK(std::equal(pa.begin(), pa.end(), pb.begin()));
  }
  CHECK(checkpoints == std::vector<std::size_t>{1, 3});

  // A different seed moves the run.
  s.seed = 4;
  net::StochasticNet c = moons_net(true, 2);
  CHECK_FALSE(train::train(c, ds, s) == la);
}

TEST_CASE("lambda target 0 trains a plain baseline") {
  RngStream d(1);
  const data::Dataset ds = data::two_moons(32, 0.1, d);
  TrainSchedule s = moons_schedule(2, 16);
  s.probe_samples = 4;
  net::StochasticNet net = moons_net(true, 2);
  for (const EpochLog& row : train::train(net, ds, s)) CHECK(row.lambda == 0.0);
}

TEST_CASE("two-moons smoke: 200 points") {
  for (std::uint64_t seed : {1, 2, 3}) {
    CAPTURE(seed);
    RngStream d(seed);
    const data::Dataset ds = data::two_moons(200, 0.1, d);
    net::StochasticNet net = moons_net(true, seed);
    TrainSchedule s = moons_schedule(40, 8);
    s.seed = seed;
    const TrainLog log = train::train(net, ds, s);
    CHECK(log.back().accuracy > 0.9);
    CHECK(ensemble_accuracy(net, ds, 20) > 0.9);
  }
}

TEST_CASE("two-moons smoke: 1000 points") {
  RngStream d(5);
  const data::Dataset ds = data::two_moons(1000, 0.1, d);
  net::StochasticNet net = moons_net(true, 5);
  TrainSchedule s = moons_schedule(40, 16);
  s.seed = 5;
  const TrainLog log = train::train(net, ds, s);
  CHECK(log.back().accuracy > 0.95);
}

TEST_CASE("non-finite objective aborts with a snapshot") {
  RngStream d(1);
  data::Dataset ds = data::two_moons(16, 0.1, d);
  ds.x.at(3, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainSchedule s = moons_schedule(2, 8);
  s.probe_samples = 4;
  net::StochasticNet net = moons_net(true, 2);
  try {
    train::train(net, ds, s);
    FAIL("expected TrainingAborted");
  } catch (const TrainingAborted& e) {
    CHECK(e.snapshot().epoch == 0);
    CHECK(e.snapshot().learning_rate == 0.01);
    CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
  }
}

TEST_CASE("train rejects empty or mis-shaped data") {
  net::StochasticNet net = moons_net(true, 2);
  data::Dataset empty;
  empty.x = Tensor(Shape{0, 2});
  CHECK_THROWS_AS(train::train(net, empty, moons_schedule(1, 8)), std::invalid_argument);
  data::Dataset wide;
  wide.x = Tensor(Shape{2, 3});
  wide.y = {0, 1};
  wide.num_classes = 2;
  CHECK_THROWS_AS(train::train(net, wide, moons_schedule(1, 8)), ShapeError);
}

TEST_CASE("concentration of a deterministic net is maximal") {
  RngStream d(1);
  const data::Dataset ds = data::two_moons(8, 0.1, d);
  net::StochasticNet det = moons_net(false, 2);
  RngStream rng(3);
  const Concentration c = measure_concentration(det, ds, 4, 1e-6, rng);
  // rho_hat is clamped just below 1 so kappa_hat stays finite.
  CHECK(c.rho == doctest::Approx(1.0 - stats::kRhoClamp).epsilon(1e-12));
  CHECK(c.r_mean == doctest::Approx(1.0).epsilon(1e-9));

  net::StochasticNet sto = moons_net(true, 2);
  RngStream rng2(3);
  const Concentration s = measure_concentration(sto, ds, 4, 1e-6, rng2);
  CHECK(s.rho < 1.0);
  CHECK(s.kappa_over_p < c.kappa_over_p);
}

TEST_CASE("validate_lambda: a single-element grid returns that element") {
  RngStream d(1);
  const data::Dataset ds = data::two_moons(32, 0.1, d);
  TrainSchedule s = moons_schedule(2, 16);
  s.probe_samples = 4;
  attacks::AttackSpec eval;
  eval.family = attacks::Family::kEotPgd;
  eval.epsilon = 0.05;
  eval.step = 0.02;
  eval.iterations = 2;
  eval.eot_samples = 2;
  eval.ensemble = 2;
  const std::vector<double> grid{0.3};
  const LambdaSweep sweep = validate_lambda([] { return moons_net(true, 2); }, ds, ds.slice(0, 8), s, grid, eval);
  CHECK(sweep.best == 0.3);
  REQUIRE(sweep.points.size() == 1);
  CHECK(sweep.points[0].robust_accuracy >= 0.0);
  CHECK_THROWS_AS(validate_lambda([] { return moons_net(true, 2); }, ds, ds, s, {}, eval),
                  std::invalid_argument);
}
