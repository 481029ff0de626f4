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
#include "gdl/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gdl::ad {

GradCheckReport grad_check(const ScalarFn& fn, const Tensor& point, double step,
                           double tolerance) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckReport report;
  {
    Tape tape;
    Var x = tape.leaf(point);
    Var y = fn(x);
    if (y.value().size() != 1) throw GraphError("grad_check: fn must be scalar-valued");
    if (!std::isfinite(y.item())) throw std::domain_error("grad_check: fn is non-finite at the point");
    report.nondifferentiable = tape.nondifferentiable_ops();
    if (y.requires_grad()) {
      Var g = grad(y, x);
      report.analytic.assign(g.value().data().begin(), g.value().data().end());
    } else {
      report.analytic.assign(point.size(), 0.0);
    }
  }

  GradModeGuard no_grad(false);
  report.numeric.resize(point.size());
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double x0 = point[i];
    probe[i] = x0 + step;
    const double up = fn(Var(probe)).item();
    probe[i] = x0 - step;
    const double down = fn(Var(probe)).item();
    probe[i] = x0;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("grad_check: fn is non-finite when probing coordinate " +
                              std::to_string(i));
    }
    report.numeric[i] = (up - down) / (2.0 * step);
  }

  double scale = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double err = std::abs(report.analytic[i] - report.numeric[i]);
    if (err > report.max_abs_error) {
      report.max_abs_error = err;
      report.worst_coordinate = i;
    }
    scale = std::max({scale, std::abs(report.analytic[i]), std::abs(report.numeric[i])});
  }
  report.max_rel_error = scale > 0.0 ? report.max_abs_error / scale : 0.0;
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace gdl::ad
