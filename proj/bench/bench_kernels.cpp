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
// Serial reference vs OpenMP kernels, plus the hot paths of one training
// step and one attack.

#include <vector>

#include <benchmark/benchmark.h>

#include "gdl/attacks.hpp"
#include "gdl/graddiv.hpp"
#include "gdl/kernels.hpp"
#include "gdl/rng.hpp"
#include "gdl/stochastic_net.hpp"

namespace {

using namespace gdl;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

template <bool kSerial>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (kSerial) {
      kernels::serial::gemm(kernels::Trans::kNo, kernels::Trans::kYes, n, n, n, a.data(), b.data(), c.data());
    } else {
      kernels::gemm(kernels::Trans::kNo, kernels::Trans::kYes, n, n, n, a.data(), b.data(), c.data());
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Gemm<true>)->Name("gemm/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<false>)->Name("gemm/omp")->Arg(64)->Arg(128)->Arg(256);

template <bool kSerial>
void BM_Softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 10;
  const auto in = random_vector(rows * cols, 3);
  std::vector<double> out(rows * cols);
  for (auto _ : state) {
    if constexpr (kSerial) {
      kernels::serial::softmax_rows(rows, cols, in.data(), out.data());
    } else {
      kernels::softmax_rows(rows, cols, in.data(), out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Softmax<true>)->Name("softmax_rows/serial")->Arg(1 << 10)->Arg(1 << 14);
BENCHMARK(BM_Softmax<false>)->Name("softmax_rows/omp")->Arg(1 << 10)->Arg(1 << 14);

net::StochasticNet mnist_mlp() {
  net::StochasticNet net(net::Architecture::mlp({196, 256, 128, 10}, true), 0.05);
  RngStream rng(4);
  net.initialize(rng);
  return net;
}

Tensor random_inputs(std::size_t rows, std::size_t p) {
  RngStream rng(5);
  Tensor x(Shape{rows, p});
  for (double& v : x.data()) v = rng.uniform();
  return x;
}

void BM_DppRegularizerStep(benchmark::State& state) {
  const net::StochasticNet net = mnist_mlp();
  const Tensor x = random_inputs(32, 196);
  const std::vector<int> y(32, 3);
  graddiv::RegularizerSpec spec;
  RngStream rng(6);
  for (auto _ : state) {
    ad::Tape tape;
    net::BoundNet bound(net, tape);
    const ad::Var r = graddiv::regularizer(bound, x, y, spec, rng);
    benchmark::DoNotOptimize(ad::grad(r, bound.params()));
  }
}
BENCHMARK(BM_DppRegularizerStep)->Unit(benchmark::kMillisecond);

void BM_EotPgd(benchmark::State& state) {
  const net::StochasticNet net = mnist_mlp();
  const Tensor x = random_inputs(32, 196);
  const std::vector<int> y(32, 3);
  attacks::AttackSpec spec{attacks::Family::kEotPgd, attacks::Norm::kLinf, 0.3, 0.075, 20};
  for (auto _ : state) {
    RngStream rng(7);
    benchmark::DoNotOptimize(attacks::run_attack(net, x, y, spec, rng));
  }
}
BENCHMARK(BM_EotPgd)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
