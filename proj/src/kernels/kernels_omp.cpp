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
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gdl/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gdl::kernels {
namespace {

using Index = std::ptrdiff_t;

// Four output rows share every streamed row of B.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  const Index blocks = static_cast<Index>((m + 3) / 4);
  const bool parallel = m * n * k > kParallelGrain * 8 && blocks > 1;
#pragma omp parallel for schedule(static) if (parallel)
  for (Index blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * 4;
    const std::size_t rows = std::min<std::size_t>(4, m - i0);
    std::fill(c + i0 * n, c + (i0 + rows) * n, 0.0);
    if (rows == 4) {
      double* c0 = c + i0 * n;
      double* c1 = c0 + n;
      double* c2 = c1 + n;
      double* c3 = c2 + n;
      const double* a0 = a + i0 * k;
      const double* a1 = a0 + k;
      const double* a2 = a1 + k;
      const double* a3 = a2 + k;
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n;
        const double s0 = a0[p], s1 = a1[p], s2 = a2[p], s3 = a3[p];
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) {
          const double bj = brow[j];
          c0[j] += s0 * bj;
          c1[j] += s1 * bj;
          c2[j] += s2 * bj;
          c3[j] += s3 * bj;
        }
      }
    } else {
      for (std::size_t r = 0; r < rows; ++r) {
        double* ci = c + (i0 + r) * n;
        const double* ai = a + (i0 + r) * k;
        for (std::size_t p = 0; p < k; ++p) {
          const double s = ai[p];
          const double* brow = b + p * n;
#pragma omp simd
          for (std::size_t j = 0; j < n; ++j) ci[j] += s * brow[j];
        }
      }
    }
  }
}

}  // namespace

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double* c) {
  std::vector<double> a_t;
  std::vector<double> b_t;
  if (ta == Trans::kYes) {
    a_t.resize(m * k);
    transpose(k, m, a, a_t.data());
    a = a_t.data();
  }
  if (tb == Trans::kYes) {
    b_t.resize(k * n);
    transpose(n, k, b, b_t.data());
    b = b_t.data();
  }
  gemm_nn(m, n, k, a, b, c);
}

void transpose(std::size_t rows, std::size_t cols, const double* in, double* out) {
  constexpr std::size_t kTile = 32;
  const Index row_tiles = static_cast<Index>((rows + kTile - 1) / kTile);
#pragma omp parallel for schedule(static) if (rows * cols > kParallelGrain)
  for (Index t = 0; t < row_tiles; ++t) {
    const std::size_t r0 = static_cast<std::size_t>(t) * kTile;
    const std::size_t r1 = std::min(rows, r0 + kTile);
    for (std::size_t c0 = 0; c0 < cols; c0 += kTile) {
      const std::size_t c1 = std::min(cols, c0 + kTile);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) out[c * rows + r] = in[r * cols + c];
    }
  }
}

void softmax_rows(std::size_t rows, std::size_t cols, const double* in, double* out) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelGrain)
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    const double* x = in + r * cols;
    double* y = out + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
}

void logsumexp_rows(std::size_t rows, std::size_t cols, const double* in, double* out) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelGrain)
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    const double* x = in + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(x[c] - mx);
    out[r] = mx + std::log(total);
  }
}

void row_sum(std::size_t rows, std::size_t cols, const double* in, double* out) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelGrain)
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    const double* x = in + r * cols;
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += x[c];
    out[r] = total;
  }
}

void col_sum(std::size_t rows, std::size_t cols, const double* in, double* out) {
  std::fill(out, out + cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) out[c] += x[c];
  }
}

void scale_rows(std::size_t rows, std::size_t cols, const double* in, const double* scale,
                double* out) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelGrain)
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    const double s = scale[r];
    const double* x = in + r * cols;
    double* y = out + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) y[c] = x[c] * s;
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace gdl::kernels
