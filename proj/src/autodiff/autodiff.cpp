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
#include "gdl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace gdl::ad {

using BackwardFn = std::function<std::vector<Var>(
    const std::vector<Var>& parents, const Var& out, const Var& grad,
    const std::vector<char>& needed)>;

struct Node {
  Tensor value;
  Tape* tape = nullptr;
  std::size_t index = 0;
  const char* op = "const";
  std::vector<Var> parents;
  BackwardFn backward;
};

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

struct Recorder {
  static Var make(const char* op, Tensor value, std::vector<Var> parents, BackwardFn fn) {
    Tape* tape = nullptr;
    if (g_grad_enabled) {
      for (const Var& p : parents) {
        if (!p.requires_grad()) continue;
        if (tape && tape != p.tape()) {
          throw GraphError(std::string(op) + ": operands are recorded on different tapes");
        }
        tape = p.tape();
      }
    }
    if (!tape) return Var(std::move(value));
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->tape = tape;
    node->index = tape->nodes_.size();
    node->op = op;
    node->parents = std::move(parents);
    node->backward = std::move(fn);
    tape->nodes_.push_back(node);
    return Var(std::move(node));
  }

  static void note_nondifferentiable(const Var& x, const char* op) {
    if (g_grad_enabled && x.requires_grad()) x.tape()->nondifferentiable_.emplace_back(op);
  }

  static Var wrap(std::shared_ptr<Node> node) { return Var(std::move(node)); }
};

Var::Var(Tensor value) : node_(std::make_shared<Node>()) { node_->value = std::move(value); }

const Tensor& Var::value() const {
  if (!node_) throw GraphError("use of an undefined variable");
  return node_->value;
}

bool Var::requires_grad() const { return node_ && node_->tape != nullptr; }
Tape* Var::tape() const { return node_ ? node_->tape : nullptr; }
std::size_t Var::tape_index() const { return node_ ? node_->index : 0; }

Tape::~Tape() {
  // Back to front so no destructor chain recurses through the parents, and any
  // variable that outlives the tape degrades to a constant.
  while (!nodes_.empty()) {
    Node& node = *nodes_.back();
    node.tape = nullptr;
    node.parents.clear();
    node.backward = nullptr;
    nodes_.pop_back();
  }
}

Var Tape::leaf(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->tape = this;
  node->index = nodes_.size();
  node->op = "leaf";
  nodes_.push_back(node);
  return Recorder::wrap(std::move(node));
}

bool grad_enabled() { return g_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_enabled) {
  g_grad_enabled = enabled;
}
GradModeGuard::~GradModeGuard() { g_grad_enabled = previous_; }

std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool retain_graph) {
  if (!output.defined()) throw GraphError("backward: undefined output");
  if (output.value().size() != 1) {
    throw GraphError("backward: output must be a scalar, got shape " + to_string(output.shape()));
  }
  Tape* tape = output.tape();
  for (std::size_t w = 0; w < wrt.size(); ++w) {
    if (!tape || !wrt[w].requires_grad() || wrt[w].tape() != tape ||
        wrt[w].tape_index() > output.tape_index()) {
      throw GraphError("backward: wrt #" + std::to_string(w) + " is not in the output's graph");
    }
  }
  if (wrt.empty()) return {};

  const std::size_t top = output.tape_index();
  std::size_t low = top;
  std::vector<char> target(top + 1, 0);
  for (const Var& w : wrt) {
    target[w.tape_index()] = 1;
    low = std::min(low, w.tape_index());
  }
  auto on_tape = [&](const Var& p) { return p.requires_grad() && p.tape() == tape; };

  // leads[i]: node i depends on some wrt; reach[i]: output depends on node i.
  std::vector<char> leads(top + 1, 0);
  for (std::size_t i = low; i <= top; ++i) {
    if (target[i]) {
      leads[i] = 1;
      continue;
    }
    for (const Var& p : tape->nodes_[i]->parents) {
      if (on_tape(p) && p.tape_index() >= low && leads[p.tape_index()]) {
        leads[i] = 1;
        break;
      }
    }
  }
  std::vector<char> reach(top + 1, 0);
  reach[top] = 1;
  for (std::size_t i = top + 1; i-- > low;) {
    if (!reach[i] || !leads[i]) continue;
    for (const Var& p : tape->nodes_[i]->parents) {
      if (on_tape(p) && p.tape_index() >= low) reach[p.tape_index()] = 1;
    }
  }
  for (std::size_t w = 0; w < wrt.size(); ++w) {
    if (!reach[wrt[w].tape_index()]) {
      throw GraphError("backward: wrt #" + std::to_string(w) + " is not in the output's graph");
    }
  }

  GradModeGuard mode(retain_graph);
  std::vector<Var> grads(top + 1);
  grads[top] = Var(Tensor(output.shape(), 1.0));
  for (std::size_t i = top + 1; i-- > low;) {
    if (!grads[i].defined() || !leads[i] || !reach[i]) continue;
    // Copy: the tape may grow (and reallocate) while recording adjoints.
    std::shared_ptr<Node> node = tape->nodes_[i];
    if (!node->backward) continue;
    std::vector<char> needed(node->parents.size(), 0);
    bool any = false;
    for (std::size_t j = 0; j < node->parents.size(); ++j) {
      const Var& p = node->parents[j];
      needed[j] = on_tape(p) && p.tape_index() >= low && leads[p.tape_index()];
      any = any || needed[j];
    }
    if (!any) continue;
    std::vector<Var> parent_grads =
        node->backward(node->parents, Recorder::wrap(node), grads[i], needed);
    for (std::size_t j = 0; j < node->parents.size(); ++j) {
      if (!needed[j] || !parent_grads[j].defined()) continue;
      Var& slot = grads[node->parents[j].tape_index()];
      slot = slot.defined() ? add(slot, parent_grads[j]) : parent_grads[j];
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    const Var& g = grads[w.tape_index()];
    result.push_back(g.defined() ? g : Var(Tensor(w.shape(), 0.0)));
  }
  return result;
}

Var grad(const Var& output, const Var& wrt, bool retain_graph) {
  return grad(output, std::span<const Var>(&wrt, 1), retain_graph)[0];
}

namespace {

void require_same(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) throw ShapeError(op, a.shape(), b.shape());
}

void require_matrix(const char* op, const Var& x) {
  if (x.value().rank() != 2) throw ShapeError(op, x.shape(), "is not a matrix");
}

template <class F>
Tensor map_tensor(const Tensor& x, F f) {
  Tensor out(x.shape());
  kernels::map(x.size(), x.raw(), out.raw(), f);
  return out;
}

template <class F>
Tensor zip_tensor(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  kernels::zip(a.size(), a.raw(), b.raw(), out.raw(), f);
  return out;
}

// Derivative of a piecewise-linear unary map, held as a constant.
Var masked(const char* op, Tensor value, const Var& x, Tensor slope) {
  Var slope_var(std::move(slope));
  return Recorder::make(op, std::move(value), {x},
                        [slope_var](const std::vector<Var>&, const Var&, const Var& g,
                                    const std::vector<char>&) {
                          return std::vector<Var>{mul(g, slope_var)};
                        });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same("add", a, b);
  return Recorder::make("add", zip_tensor(a.value(), b.value(), std::plus<>()), {a, b},
                        [](const std::vector<Var>&, const Var&, const Var& g,
                           const std::vector<char>&) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  require_same("sub", a, b);
  return Recorder::make("sub", zip_tensor(a.value(), b.value(), std::minus<>()), {a, b},
                        [](const std::vector<Var>&, const Var&, const Var& g,
                           const std::vector<char>& need) {
                          return std::vector<Var>{g, need[1] ? neg(g) : Var()};
                        });
}

Var mul(const Var& a, const Var& b) {
  require_same("mul", a, b);
  return Recorder::make("mul", zip_tensor(a.value(), b.value(), std::multiplies<>()), {a, b},
                        [](const std::vector<Var>& p, const Var&, const Var& g,
                           const std::vector<char>& need) {
                          return std::vector<Var>{need[0] ? mul(g, p[1]) : Var(),
                                                  need[1] ? mul(g, p[0]) : Var()};
                        });
}

Var div(const Var& a, const Var& b) {
  require_same("div", a, b);
  return Recorder::make("div", zip_tensor(a.value(), b.value(), std::divides<>()), {a, b},
                        [](const std::vector<Var>& p, const Var& out, const Var& g,
                           const std::vector<char>& need) {
                          return std::vector<Var>{need[0] ? div(g, p[1]) : Var(),
                                                  need[1] ? neg(div(mul(g, out), p[1])) : Var()};
                        });
}

Var maximum(const Var& a, const Var& b) {
  require_same("maximum", a, b);
  Tensor pick_a = zip_tensor(a.value(), b.value(), [](double x, double y) { return x >= y ? 1.0 : 0.0; });
  Tensor value = zip_tensor(a.value(), b.value(), [](double x, double y) { return x >= y ? x : y; });
  Var mask_a(pick_a);
  Var mask_b(map_tensor(pick_a, [](double m) { return 1.0 - m; }));
  return Recorder::make("maximum", std::move(value), {a, b},
                        [mask_a, mask_b](const std::vector<Var>&, const Var&, const Var& g,
                                         const std::vector<char>& need) {
                          return std::vector<Var>{need[0] ? mul(g, mask_a) : Var(),
                                                  need[1] ? mul(g, mask_b) : Var()};
                        });
}

Var neg(const Var& x) {
  return Recorder::make("neg", map_tensor(x.value(), std::negate<>()), {x},
                        [](const std::vector<Var>&, const Var&, const Var& g,
                           const std::vector<char>&) { return std::vector<Var>{neg(g)}; });
}

Var scale(const Var& x, double factor) {
  return Recorder::make("scale", map_tensor(x.value(), [factor](double v) { return v * factor; }),
                        {x},
                        [factor](const std::vector<Var>&, const Var&, const Var& g,
                                 const std::vector<char>&) {
                          return std::vector<Var>{scale(g, factor)};
                        });
}

Var add_scalar(const Var& x, double offset) {
  return Recorder::make("add_scalar",
                        map_tensor(x.value(), [offset](double v) { return v + offset; }), {x},
                        [](const std::vector<Var>&, const Var&, const Var& g,
                           const std::vector<char>&) { return std::vector<Var>{g}; });
}

Var exp(const Var& x) {
  return Recorder::make("exp", map_tensor(x.value(), [](double v) { return std::exp(v); }), {x},
                        [](const std::vector<Var>&, const Var& out, const Var& g,
                           const std::vector<char>&) { return std::vector<Var>{mul(g, out)}; });
}

Var log(const Var& x) {
  return Recorder::make("log", map_tensor(x.value(), [](double v) { return std::log(v); }), {x},
                        [](const std::vector<Var>& p, const Var&, const Var& g,
                           const std::vector<char>&) { return std::vector<Var>{div(g, p[0])}; });
}

Var sqrt(const Var& x) {
  return Recorder::make("sqrt", map_tensor(x.value(), [](double v) { return std::sqrt(v); }), {x},
                        [](const std::vector<Var>&, const Var& out, const Var& g,
                           const std::vector<char>&) {
                          return std::vector<Var>{div(g, scale(out, 2.0))};
                        });
}

Var relu(const Var& x) {
  const Tensor& v = x.value();
  return masked("relu", map_tensor(v, [](double t) { return t > 0.0 ? t : 0.0; }),
                x, map_tensor(v, [](double t) { return t > 0.0 ? 1.0 : 0.0; }));
}

Var leaky_relu(const Var& x, double slope) {
  const Tensor& v = x.value();
  return masked("leaky_relu", map_tensor(v, [slope](double t) { return t > 0.0 ? t : slope * t; }),
                x, map_tensor(v, [slope](double t) { return t > 0.0 ? 1.0 : slope; }));
}

Var sign(const Var& x) {
  Recorder::note_nondifferentiable(x, "sign");
  return Var(map_tensor(x.value(), [](double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }));
}

Var clamp(const Var& x, double lo, double hi) {
  const Tensor& v = x.value();
  return masked("clamp", map_tensor(v, [lo, hi](double t) { return std::clamp(t, lo, hi); }), x,
                map_tensor(v, [lo, hi](double t) { return (t > lo && t < hi) ? 1.0 : 0.0; }));
}

Var matmul(const Var& a, const Var& b, Trans ta, Trans tb) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = ta == Trans::kNo ? av.rows() : av.cols();
  const std::size_t k = ta == Trans::kNo ? av.cols() : av.rows();
  const std::size_t k2 = tb == Trans::kNo ? bv.rows() : bv.cols();
  const std::size_t n = tb == Trans::kNo ? bv.cols() : bv.rows();
  if (k != k2) throw ShapeError("matmul", av.shape(), bv.shape());
  Tensor out({m, n});
  kernels::gemm(ta, tb, m, n, k, av.raw(), bv.raw(), out.raw());
  return Recorder::make(
      "matmul", std::move(out), {a, b},
      [ta, tb](const std::vector<Var>& p, const Var&, const Var& g,
               const std::vector<char>& need) {
        const Var& A = p[0];
        const Var& B = p[1];
        constexpr Trans N = Trans::kNo;
        constexpr Trans T = Trans::kYes;
        Var da, db;
        if (ta == N && tb == N) {
          if (need[0]) da = matmul(g, B, N, T);
          if (need[1]) db = matmul(A, g, T, N);
        } else if (ta == N && tb == T) {
          if (need[0]) da = matmul(g, B, N, N);
          if (need[1]) db = matmul(g, A, T, N);
        } else if (ta == T && tb == N) {
          if (need[0]) da = matmul(B, g, N, T);
          if (need[1]) db = matmul(A, g, N, N);
        } else {
          if (need[0]) da = matmul(B, g, T, T);
          if (need[1]) db = matmul(g, A, T, T);
        }
        return std::vector<Var>{da, db};
      });
}

Var transpose(const Var& x) {
  require_matrix("transpose", x);
  const Tensor& v = x.value();
  Tensor out({v.cols(), v.rows()});
  kernels::transpose(v.rows(), v.cols(), v.raw(), out.raw());
  return Recorder::make("transpose", std::move(out), {x},
                        [](const std::vector<Var>&, const Var&, const Var& g,
                           const std::vector<char>&) { return std::vector<Var>{transpose(g)}; });
}

Var row_sum(const Var& x) {
  require_matrix("row_sum", x);
  const Tensor& v = x.value();
  Tensor out({v.rows(), 1});
  kernels::row_sum(v.rows(), v.cols(), v.raw(), out.raw());
  const std::size_t cols = v.cols();
  return Recorder::make("row_sum", std::move(out), {x},
                        [cols](const std::vector<Var>&, const Var&, const Var& g,
                               const std::vector<char>&) {
                          return std::vector<Var>{broadcast_cols(g, cols)};
                        });
}

Var col_sum(const Var& x) {
  require_matrix("col_sum", x);
  const Tensor& v = x.value();
  Tensor out({1, v.cols()});
  kernels::col_sum(v.rows(), v.cols(), v.raw(), out.raw());
  const std::size_t rows = v.rows();
  return Recorder::make("col_sum", std::move(out), {x},
                        [rows](const std::vector<Var>&, const Var&, const Var& g,
                               const std::vector<char>&) {
                          return std::vector<Var>{broadcast_rows(g, rows)};
                        });
}

Var broadcast_rows(const Var& row, std::size_t rows) {
  const Tensor& v = row.value();
  if (v.rank() != 2 || v.rows() != 1) throw ShapeError("broadcast_rows", v.shape(), "is not [1, c]");
  const std::size_t cols = v.cols();
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) std::copy(v.raw(), v.raw() + cols, out.raw() + r * cols);
  return Recorder::make("broadcast_rows", std::move(out), {row},
                        [](const std::vector<Var>&, const Var&, const Var& g,
                           const std::vector<char>&) { return std::vector<Var>{col_sum(g)}; });
}

Var broadcast_cols(const Var& col, std::size_t cols) {
  const Tensor& v = col.value();
  if (v.rank() != 2 || v.cols() != 1) throw ShapeError("broadcast_cols", v.shape(), "is not [r, 1]");
  const std::size_t rows = v.rows();
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
    std::fill(out.raw() + r * cols, out.raw() + (r + 1) * cols, v[r]);
  return Recorder::make("broadcast_cols", std::move(out), {col},
                        [](const std::vector<Var>&, const Var&, const Var& g,
                           const std::vector<char>&) { return std::vector<Var>{row_sum(g)}; });
}

Var scale_rows(const Var& x, const Var& factors) {
  require_matrix("scale_rows", x);
  const Tensor& v = x.value();
  const Tensor& f = factors.value();
  if (f.rank() != 2 || f.cols() != 1 || f.rows() != v.rows()) {
    throw ShapeError("scale_rows", v.shape(), f.shape());
  }
  Tensor out(v.shape());
  kernels::scale_rows(v.rows(), v.cols(), v.raw(), f.raw(), out.raw());
  return Recorder::make("scale_rows", std::move(out), {x, factors},
                        [](const std::vector<Var>& p, const Var&, const Var& g,
                           const std::vector<char>& need) {
                          return std::vector<Var>{need[0] ? scale_rows(g, p[1]) : Var(),
                                                  need[1] ? row_sum(mul(g, p[0])) : Var()};
                        });
}

Var add_row(const Var& x, const Var& row) {
  require_matrix("add_row", x);
  const Tensor& v = x.value();
  const Tensor& b = row.value();
  if (b.rank() != 2 || b.rows() != 1 || b.cols() != v.cols()) {
    throw ShapeError("add_row", v.shape(), b.shape());
  }
  Tensor out(v.shape());
  const std::size_t cols = v.cols();
  for (std::size_t r = 0; r < v.rows(); ++r) {
    kernels::zip(cols, v.raw() + r * cols, b.raw(), out.raw() + r * cols, std::plus<>());
  }
  return Recorder::make("add_row", std::move(out), {x, row},
                        [](const std::vector<Var>&, const Var&, const Var& g,
                           const std::vector<char>& need) {
                          return std::vector<Var>{g, need[1] ? col_sum(g) : Var()};
                        });
}

Var sum(const Var& x) {
  const Tensor& v = x.value();
  double total = 0.0;
  for (double t : v.data()) total += t;
  const Shape shape = v.shape();
  return Recorder::make("sum", Tensor::scalar(total), {x},
                        [shape](const std::vector<Var>&, const Var&, const Var& g,
                                const std::vector<char>&) {
                          return std::vector<Var>{expand(g, shape)};
                        });
}

Var mean(const Var& x) {
  const std::size_t count = x.value().size();
  if (count == 0) throw ShapeError("mean", x.shape(), "is empty");
  return scale(sum(x), 1.0 / static_cast<double>(count));
}

Var expand(const Var& scalar, const Shape& shape) {
  const Tensor& v = scalar.value();
  if (v.size() != 1) throw ShapeError("expand", v.shape(), shape);
  const Shape source = v.shape();
  return Recorder::make("expand", Tensor(shape, v[0]), {scalar},
                        [source](const std::vector<Var>&, const Var&, const Var& g,
                                 const std::vector<char>&) {
                          return std::vector<Var>{reshape(sum(g), source)};
                        });
}

Var softmax_rows(const Var& logits) {
  require_matrix("softmax_rows", logits);
  const Tensor& v = logits.value();
  Tensor out(v.shape());
  kernels::softmax_rows(v.rows(), v.cols(), v.raw(), out.raw());
  const std::size_t cols = v.cols();
  return Recorder::make("softmax_rows", std::move(out), {logits},
                        [cols](const std::vector<Var>&, const Var& y, const Var& g,
                               const std::vector<char>&) {
                          return std::vector<Var>{
                              mul(y, sub(g, broadcast_cols(row_sum(mul(g, y)), cols)))};
                        });
}

Var cross_entropy_rows(const Var& logits, std::span<const int> labels) {
  require_matrix("cross_entropy_rows", logits);
  const Tensor& z = logits.value();
  if (labels.size() != z.rows()) {
    throw ShapeError("cross_entropy_rows", z.shape(), Shape{labels.size()});
  }
  Tensor onehot(z.shape(), 0.0);
  Tensor out({z.rows(), 1});
  kernels::logsumexp_rows(z.rows(), z.cols(), z.raw(), out.raw());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= z.cols()) {
      throw ShapeError("cross_entropy_rows", z.shape(), "label " + std::to_string(y) + " out of range");
    }
    out[r] -= z.at(r, static_cast<std::size_t>(y));
    onehot.at(r, static_cast<std::size_t>(y)) = 1.0;
  }
  Var target(std::move(onehot));
  return Recorder::make("cross_entropy_rows", std::move(out), {logits},
                        [target](const std::vector<Var>& p, const Var&, const Var& g,
                                 const std::vector<char>&) {
                          return std::vector<Var>{scale_rows(sub(softmax_rows(p[0]), target), g)};
                        });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
  return mean(cross_entropy_rows(logits, labels));
}

Var reshape(const Var& x, const Shape& shape) {
  const Shape source = x.shape();
  return Recorder::make("reshape", x.value().reshaped(shape), {x},
                        [source](const std::vector<Var>&, const Var&, const Var& g,
                                 const std::vector<char>&) {
                          return std::vector<Var>{reshape(g, source)};
                        });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows", Shape{}, "has no operands");
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    require_matrix("concat_rows", p);
    if (p.value().cols() != cols) throw ShapeError("concat_rows", parts[0].shape(), p.shape());
    offsets.push_back(rows);
    rows += p.value().rows();
  }
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& v = parts[i].value();
    std::copy(v.raw(), v.raw() + v.size(), out.raw() + offsets[i] * cols);
  }
  offsets.push_back(rows);
  return Recorder::make("concat_rows", std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                        [offsets](const std::vector<Var>& p, const Var&, const Var& g,
                                  const std::vector<char>& need) {
                          std::vector<Var> grads(p.size());
                          for (std::size_t i = 0; i < p.size(); ++i) {
                            if (need[i]) grads[i] = slice_rows(g, offsets[i], offsets[i + 1]);
                          }
                          return grads;
                        });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  require_matrix("slice_rows", x);
  const Tensor& v = x.value();
  if (begin > end || end > v.rows()) {
    throw ShapeError("slice_rows", v.shape(),
                     "cannot be sliced to rows [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ")");
  }
  const std::size_t cols = v.cols();
  Tensor out({end - begin, cols},
             std::vector<double>(v.raw() + begin * cols, v.raw() + end * cols));
  const std::size_t after = v.rows() - end;
  return Recorder::make("slice_rows", std::move(out), {x},
                        [begin, after](const std::vector<Var>&, const Var&, const Var& g,
                                       const std::vector<char>&) {
                          return std::vector<Var>{pad_rows(g, begin, after)};
                        });
}

Var pad_rows(const Var& x, std::size_t before, std::size_t after) {
  require_matrix("pad_rows", x);
  const Tensor& v = x.value();
  const std::size_t cols = v.cols();
  Tensor out({before + v.rows() + after, cols}, 0.0);
  std::copy(v.raw(), v.raw() + v.size(), out.raw() + before * cols);
  const std::size_t rows = v.rows();
  return Recorder::make("pad_rows", std::move(out), {x},
                        [before, rows](const std::vector<Var>&, const Var&, const Var& g,
                                       const std::vector<char>&) {
                          return std::vector<Var>{slice_rows(g, before, before + rows)};
                        });
}

Var dot(const Var& a, const Var& b) {
  require_same("dot", a, b);
  return sum(mul(a, b));
}

Var norm(const Var& x) { return sqrt(sum(mul(x, x))); }

Var cosine(const Var& a, const Var& b) {
  require_same("cosine", a, b);
  return div(dot(a, b), mul(norm(a), norm(b)));
}

}  // namespace gdl::ad
