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
#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fd_suites.hpp"
#include "gdl/attacks.hpp"
#include "gdl/checkpoint.hpp"
#include "gdl/config.hpp"
#include "gdl/data.hpp"
#include "gdl/diagnostics.hpp"
#include "gdl/dirstats.hpp"
#include "gdl/graddiv.hpp"
#include "gdl/kernels.hpp"
#include "gdl/report.hpp"
#include "gdl/trainer.hpp"

namespace gdl::tools {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

Outcome primitive_adjoints() {
  std::mt19937_64 gen(7);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& p : testing::primitives()) {
    for (int trial = 0; trial < 10; ++trial) {
      const double e = testing::primitive_error(p, gen);
      if (e > worst) {
        worst = e;
        worst_name = p.name;
      }
    }
  }
  return {worst < 1e-6, "worst rel. error " + sci(worst) + " (" + worst_name + ")"};
}

Outcome double_backprop() {
  double worst = 0.0;
  for (auto kind : {graddiv::RegKind::kKappa, graddiv::RegKind::kMean, graddiv::RegKind::kMax,
                    graddiv::RegKind::kSmoothmax, graddiv::RegKind::kDpp}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) worst = std::max(worst, testing::regularizer_fd_error(kind, seed));
  }
  return {worst < 1e-4, "worst rel. error " + sci(worst) + " over 5 regularizers x 3 seeds"};
}

double reg_value(graddiv::RegKind kind, const std::vector<std::vector<double>>& samples, double jitter) {
  std::vector<ad::Var> g;
  for (const auto& s : samples) g.emplace_back(Tensor::row(s));
  const graddiv::UnitGradients u = graddiv::normalize_gradients(g);
  graddiv::RegularizerSpec spec;
  spec.kind = kind;
  spec.samples = u.samples();
  spec.dpp_jitter = jitter;
  return graddiv::regularizer_from_directions(u, spec).item();
}

std::vector<double> at_degrees(double d) {
  const double r = d * M_PI / 180.0;
  return {std::cos(r), std::sin(r)};
}

Outcome regularizer_oracles() {
  using graddiv::RegKind;
  const double mean = reg_value(RegKind::kMean, {at_degrees(0), at_degrees(90), at_degrees(180)}, 0.0);
  const double dpp = reg_value(RegKind::kDpp, {at_degrees(0), at_degrees(60)}, 0.0);
  const double ortho = reg_value(RegKind::kDpp, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 0.0);
  const double smooth = reg_value(RegKind::kSmoothmax, {{1, 0}, {0, 1}}, 0.0);
  const double e1 = std::abs(mean + 1.0 / 3.0), e2 = std::abs(dpp + std::log(0.75)), e3 = std::abs(ortho),
               e4 = std::abs(smooth - std::log(2.0));
  return {e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-9 && e4 <= 1e-12,
          "errors " + sci(e1) + ", " + sci(e2) + ", " + sci(e3) + ", " + sci(e4)};
}

Outcome directional_statistics() {
  RngStream rng(3);
  double min_eig = 1.0;
  bool in_range = true;
  for (int t = 0; t < 20; ++t) {
    Tensor g(Shape{6, 5});
    for (double& v : g.data()) v = rng.normal();
    const stats::GradientBatch b = stats::GradientBatch::from_gradients(g);
    const double rho = stats::sample_mrl(b);
    in_range = in_range && rho >= 0.0 && rho <= 1.0;
    const Tensor c = stats::cosine_matrix(b);
    Eigen::MatrixXd m(c.rows(), c.cols());
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t j = 0; j < c.cols(); ++j) m(i, j) = c.at(i, j);
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff());
  }
  return {in_range && min_eig >= -1e-8, "rho in [0, 1]; min cosine-matrix eigenvalue " + sci(min_eig)};
}

Outcome kernels_agree() {
  RngStream rng(5);
  const std::size_t m = 150, n = 120, k = 130;
  std::vector<double> a(m * k), b(k * n), c1(m * n), c2(m * n);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = rng.normal();
  bool same = true;
  for (auto ta : {kernels::Trans::kNo, kernels::Trans::kYes}) {
    for (auto tb : {kernels::Trans::kNo, kernels::Trans::kYes}) {
      kernels::gemm(ta, tb, m, n, k, a.data(), b.data(), c1.data());
      kernels::serial::gemm(ta, tb, m, n, k, a.data(), b.data(), c2.data());
      same = same && c1 == c2;
    }
  }
  std::vector<double> s1(m * k), s2(m * k);
  kernels::softmax_rows(m, k, a.data(), s1.data());
  kernels::serial::softmax_rows(m, k, a.data(), s2.data());
  same = same && s1 == s2;
  return {same, "gemm and softmax bit-identical between OpenMP and serial paths"};
}

Outcome io_round_trips() {
  io::ExperimentConfig c;
  c.seed = 12345;
  c.schedule.seed = c.seed;
  c.schedule.learning_rate = 0.1 + 0.2;
  const bool config_ok = io::parse_config(io::serialize(c)) == c;
  net::StochasticNet n(net::Architecture::mlp({3, 5, 2}, true), 0.05);
  RngStream rng(1);
  n.initialize(rng);
  const std::string first = io::checkpoint_to_string(n, {2, 1, io::config_hash(c)});
  const io::Checkpoint back = io::checkpoint_from_string(first);
  const bool ck_ok = io::checkpoint_to_string(back.net, back.meta) == first;
  const bool b64_ok = io::encode_doubles(std::vector<double>{1.0}) == "AAAAAAAA8D8=";
  return {config_ok && ck_ok && b64_ok, "config parse(serialize) equal; checkpoint re-save identical; 1.0 -> AAAAAAAA8D8="};
}

Outcome training_determinism() {
  RngStream data_rng(9);
  const data::Dataset d = data::two_moons(64, 0.1, data_rng);
  train::TrainSchedule s;
  s.epochs = 2;
  s.batch_size = 16;
  s.decay_epochs = {};
  s.warmup = 0;
  s.rampup = 1;
  s.attack.epsilon = 0.1;
  s.attack.step = 0.05;
  s.attack.iterations = 2;
  s.reg.lambda = 1.0;
  s.reg.samples = 2;
  s.probe_count = 8;
  s.probe_samples = 4;
  s.seed = 4;
  auto run = [&](std::string* checkpoint) {
    net::StochasticNet n(net::Architecture::mlp({2, 8, 2}, true), 0.05);
    RngStream w = RngStream::for_purpose(s.seed, purpose::kWeights);
    n.initialize(w);
    const train::TrainLog log = train::train(n, d, s);
    *checkpoint = io::checkpoint_to_string(n, {s.epochs, s.seed, ""});
    return io::trainlog_csv(log);
  };
  std::string ck1, ck2;
  const std::string log1 = run(&ck1);
  const std::string log2 = run(&ck2);
  return {log1 == log2 && ck1 == ck2, "two 2-epoch GradDiv runs give identical trainlog and checkpoint bytes"};
}

Outcome attacks_stay_feasible() {
  net::StochasticNet n(net::Architecture::mlp({4, 8, 3}, true), 0.1);
  RngStream rng(2);
  n.initialize(rng);
  Tensor x(Shape{6, 4});
  for (double& v : x.data()) v = rng.uniform();
  const std::vector<int> y{0, 1, 2, 0, 1, 2};
  double worst = 0.0;
  bool boxed = true;
  for (auto norm : {attacks::Norm::kLinf, attacks::Norm::kL2}) {
    for (auto fam : {attacks::Family::kFgm, attacks::Family::kPgd, attacks::Family::kEotPgd}) {
      attacks::AttackSpec a{fam, norm, 0.3, 0.1, 3};
      a.eot_samples = 2;
      a.ensemble = 3;
      RngStream r(11);
      const attacks::AttackResult res = attacks::run_attack(n, x, y, a, r);
      for (std::size_t i = 0; i < x.rows(); ++i) {
        double linf = 0.0, l2 = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
          const double v = res.adversarial.at(i, j);
          boxed = boxed && v >= 0.0 && v <= 1.0;
          const double d = v - x.at(i, j);
          linf = std::max(linf, std::abs(d));
          l2 += d * d;
        }
        const double used = norm == attacks::Norm::kLinf ? linf : std::sqrt(l2);
        worst = std::max(worst, used - 0.3);
      }
    }
  }
  return {boxed && worst <= 1e-12, "adversarial inputs inside [0, 1] and the eps ball (excess " + sci(std::max(worst, 0.0)) + ")"};
}

}  // namespace

int run_selftest(std::ostream& out) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> suites{
      {"primitive adjoints vs central differences", primitive_adjoints},
      {"regularizer parameter gradients (double backprop)", double_backprop},
      {"regularizer oracle values", regularizer_oracles},
      {"directional statistics invariants", directional_statistics},
      {"serial and OpenMP kernels agree", kernels_agree},
      {"config and checkpoint round trips", io_round_trips},
      {"training is deterministic", training_determinism},
      {"attacks stay feasible", attacks_stay_feasible},
  };
  int failed = 0;
  for (const auto& [name, fn] : suites) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    out << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << "\n";
  }
  out << (failed == 0 ? "selftest passed\n" : "selftest FAILED (" + std::to_string(failed) + " suites)\n");
  return failed;
}

}  // namespace gdl::tools
