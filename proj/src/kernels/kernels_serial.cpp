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

#include "gdl/kernels.hpp"

namespace gdl::kernels::serial {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ta == Trans::kNo ? a[i * k + p] : a[p * m + i];
        const double bpj = tb == Trans::kNo ? b[p * n + j] : b[j * k + p];
        acc += aip * bpj;
      }
      c[i * n + j] = acc;
    }
  }
}

void transpose(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
}

void softmax_rows(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
    double* y = out + r * cols;
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
}

void logsumexp_rows(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(x[c] - mx);
    out[r] = mx + std::log(total);
  }
}

void row_sum(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += in[r * cols + c];
    out[r] = total;
  }
}

void col_sum(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t c = 0; c < cols; ++c) {
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) total += in[r * cols + c];
    out[c] = total;
  }
}

void scale_rows(std::size_t rows, std::size_t cols, const double* in, const double* scale,
                double* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = in[r * cols + c] * scale[r];
}

}  // namespace gdl::kernels::serial
