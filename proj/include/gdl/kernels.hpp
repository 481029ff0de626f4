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
#ifndef GDL_KERNELS_HPP_
#define GDL_KERNELS_HPP_

// Dense numeric kernels behind the autodiff primitives.
//
// Two implementations share one interface: gdl::kernels (OpenMP, blocked) and
// gdl::kernels::serial (plain loops, kept as the reference for tests and the
// benchmark). Both reduce over the contraction index in ascending order, and
// parallelism is only ever over independent output rows, so results are
// bit-identical between the two and across thread counts.

#include <cstddef>

namespace gdl::kernels {

enum class Trans { kNo, kYes };

/// Rows below this count run single-threaded.
inline constexpr std::size_t kParallelGrain = 1 << 14;

/// C (m x n) = op(A) * op(B), where op(A) is m x k and op(B) is k x n.
/// A is stored m x k (or k x m when transposed), likewise B.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double* c);

/// out (cols x rows) = transpose of in (rows x cols).
void transpose(std::size_t rows, std::size_t cols, const double* in, double* out);

/// Row-wise softmax with max subtraction.
void softmax_rows(std::size_t rows, std::size_t cols, const double* in, double* out);

/// Row-wise log-sum-exp with max subtraction; out has `rows` entries.
void logsumexp_rows(std::size_t rows, std::size_t cols, const double* in, double* out);

void row_sum(std::size_t rows, std::size_t cols, const double* in, double* out);
void col_sum(std::size_t rows, std::size_t cols, const double* in, double* out);

/// out[r, c] = in[r, c] * scale[r]
void scale_rows(std::size_t rows, std::size_t cols, const double* in, const double* scale,
                double* out);

/// Elementwise out[i] = f(in[i]).
template <class F>
void map(std::size_t n, const double* in, double* out, F f) {
#pragma omp parallel for simd schedule(static) if (n > kParallelGrain)
  for (std::size_t i = 0; i < n; ++i) out[i] = f(in[i]);
}

/// Elementwise out[i] = f(a[i], b[i]).
template <class F>
void zip(std::size_t n, const double* a, const double* b, double* out, F f) {
#pragma omp parallel for simd schedule(static) if (n > kParallelGrain)
  for (std::size_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
}

namespace serial {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double* c);
void transpose(std::size_t rows, std::size_t cols, const double* in, double* out);
void softmax_rows(std::size_t rows, std::size_t cols, const double* in, double* out);
void logsumexp_rows(std::size_t rows, std::size_t cols, const double* in, double* out);
void row_sum(std::size_t rows, std::size_t cols, const double* in, double* out);
void col_sum(std::size_t rows, std::size_t cols, const double* in, double* out);
void scale_rows(std::size_t rows, std::size_t cols, const double* in, const double* scale,
                double* out);

}  // namespace serial

/// Number of OpenMP threads kernels may use (1 when built without OpenMP).
int max_threads();

}  // namespace gdl::kernels

#endif  // GDL_KERNELS_HPP_
