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
#ifndef GDL_TESTS_SUPPORT_ORACLES_HPP_
#define GDL_TESTS_SUPPORT_ORACLES_HPP_

// Test-only oracles, kept independent of the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gdl/tensor.hpp"

namespace gdl::testing {

/// Central differences of a plain double function at x.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double step) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + step;
    const double up = f(x);
    x[i] = x0 - step;
    const double down = f(x);
    x[i] = x0;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

/// max |a - b| / max(max |a|, max |b|), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double err = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    err = std::max(err, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return scale > 0.0 ? err / scale : 0.0;
}

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& gen, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.data()) v = dist(gen);
  return t;
}

/// Random values with |v| >= margin, away from kinks at 0.
inline Tensor random_away_from_zero(const Shape& shape, std::mt19937_64& gen, double margin = 1e-2) {
  std::uniform_real_distribution<double> dist(margin, 1.0);
  std::bernoulli_distribution coin(0.5);
  Tensor t(shape);
  for (double& v : t.data()) v = coin(gen) ? dist(gen) : -dist(gen);
  return t;
}

// A_3(kappa) = coth(kappa) - 1/kappa, inverted by bisection.
inline double a3(double kappa) { return 1.0 / std::tanh(kappa) - 1.0 / kappa; }

inline double invert_a3(double rho) {
  double lo = 1e-9, hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (a3(mid) < rho ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<double> to_vector(const Tensor& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

inline Tensor from_vector(const Shape& shape, const std::vector<double>& v) { return Tensor(shape, v); }

}  // namespace gdl::testing

#endif  // GDL_TESTS_SUPPORT_ORACLES_HPP_
