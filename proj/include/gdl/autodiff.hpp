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
#ifndef GDL_AUTODIFF_HPP_
#define GDL_AUTODIFF_HPP_

// Reverse-mode automatic differentiation over dense double tensors.
//
// Every primitive records onto the tape of its differentiable operands. The
// adjoint rules are themselves written in terms of primitives, so a backward
// pass run with `retain_graph` records onto the same tape and the gradients it
// returns can be differentiated again (double backprop). A tape and the
// variables on it belong to one thread.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdl/kernels.hpp"
#include "gdl/tensor.hpp"

namespace gdl::ad {

using kernels::Trans;

class Tape;
struct Node;

/// Raised when a backward request does not fit the recorded graph.
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Handle to a value in a computation graph, or to a constant.
class Var {
 public:
  Var() = default;
  /// A constant: never requires grad and is never recorded.
  explicit Var(Tensor value);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }

  bool requires_grad() const;
  Tape* tape() const;
  std::size_t tape_index() const;

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend class Tape;
  friend struct Recorder;
  friend std::vector<Var> grad(const Var&, std::span<const Var>, bool);
};

/// Records primitives in creation order, so parents always precede children.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  /// Registers a differentiable input.
  Var leaf(Tensor value);

  std::size_t size() const { return nodes_.size(); }

  /// Names of primitives without a useful derivative (e.g. sign) that were
  /// applied to differentiable values on this tape.
  const std::vector<std::string>& nondifferentiable_ops() const { return nondifferentiable_; }

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
  std::vector<std::string> nondifferentiable_;

  friend struct Recorder;
  friend std::vector<Var> grad(const Var&, std::span<const Var>, bool);
};

/// Thread-local switch: while disabled, primitives return constants.
bool grad_enabled();

class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

/// d output / d wrt for a scalar output. With `retain_graph` the returned
/// gradients are recorded on the output's tape and are differentiable.
/// Throws GraphError when output is not a scalar or a wrt is not in its graph.
std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool retain_graph = false);
Var grad(const Var& output, const Var& wrt, bool retain_graph = false);

// Elementwise, operands of identical shape.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
/// Elementwise max; ties pick `a`. Sub-gradient flows to the selected operand.
Var maximum(const Var& a, const Var& b);

Var neg(const Var& x);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double offset);
Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
/// Zero derivative everywhere; flagged on the tape as non-differentiable.
Var sign(const Var& x);
/// Zero derivative where saturated.
Var clamp(const Var& x, double lo, double hi);

/// op(a) * op(b) for matrices.
Var matmul(const Var& a, const Var& b, Trans ta = Trans::kNo, Trans tb = Trans::kNo);
Var transpose(const Var& x);

// Leading-batch broadcasting for [rows, cols] matrices.
Var row_sum(const Var& x);                              // [r, c] -> [r, 1]
Var col_sum(const Var& x);                              // [r, c] -> [1, c]
Var broadcast_rows(const Var& row, std::size_t rows);   // [1, c] -> [rows, c]
Var broadcast_cols(const Var& col, std::size_t cols);   // [r, 1] -> [r, cols]
Var scale_rows(const Var& x, const Var& factors);       // [r, c] * [r, 1]
Var add_row(const Var& x, const Var& row);              // [r, c] + [1, c]

Var sum(const Var& x);                                  // -> scalar
Var mean(const Var& x);                                 // -> scalar
Var expand(const Var& scalar, const Shape& shape);      // scalar -> shape

Var softmax_rows(const Var& logits);
/// Per-row cross-entropy of softmax(logits) against integer labels: [r, 1].
Var cross_entropy_rows(const Var& logits, std::span<const int> labels);
/// Mean cross-entropy over rows (scalar).
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

Var reshape(const Var& x, const Shape& shape);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
Var pad_rows(const Var& x, std::size_t before, std::size_t after);

Var dot(const Var& a, const Var& b);
Var norm(const Var& x);
Var cosine(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& x) { return neg(x); }
inline Var operator*(const Var& x, double c) { return scale(x, c); }
inline Var operator*(double c, const Var& x) { return scale(x, c); }
inline Var operator+(const Var& x, double c) { return add_scalar(x, c); }
inline Var operator-(const Var& x, double c) { return add_scalar(x, -c); }
inline Var operator-(double c, const Var& x) { return add_scalar(neg(x), c); }

}  // namespace gdl::ad

#endif  // GDL_AUTODIFF_HPP_
