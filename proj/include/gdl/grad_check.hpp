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
#ifndef GDL_GRAD_CHECK_HPP_
#define GDL_GRAD_CHECK_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gdl/autodiff.hpp"
#include "gdl/tensor.hpp"

namespace gdl::ad {

struct GradCheckReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_abs_error = 0.0;
  /// max |analytic - numeric| over coordinates, divided by the larger of the
  /// two gradients' max-norms (0 when both gradients vanish).
  double max_rel_error = 0.0;
  std::size_t worst_coordinate = 0;
  /// Non-differentiable primitives (sign, ...) met while evaluating fn.
  std::vector<std::string> nondifferentiable;
  bool passed = false;
};

using ScalarFn = std::function<Var(const Var&)>;

/// Compares the reverse-mode gradient of a scalar fn at `point` with central
/// differences of width 2*step. Throws std::invalid_argument for step <= 0 and
/// std::domain_error when fn is non-finite at a probe (naming the coordinate).
GradCheckReport grad_check(const ScalarFn& fn, const Tensor& point, double step,
                           double tolerance);

}  // namespace gdl::ad

#endif  // GDL_GRAD_CHECK_HPP_
