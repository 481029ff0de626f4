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
#include "gdl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>

namespace gdl::data {
namespace {

std::uint32_t be32(std::span<const unsigned char> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

std::string hex_bytes(std::span<const unsigned char> b, std::size_t n) {
  std::string out;
  char buf[4];
  for (std::size_t i = 0; i < std::min(n, b.size()); ++i) {
    std::snprintf(buf, sizeof buf, "%02x", b[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

void check_header(std::span<const unsigned char> bytes, std::uint32_t magic, std::size_t header,
                  const char* what) {
  if (bytes.size() < 4 || be32(bytes, 0) != magic) {
    char expected[16];
    std::snprintf(expected, sizeof expected, "%08x", magic);
    throw IdxError(std::string(what) + ": bad magic, expected " + expected + " but found [" +
                   hex_bytes(bytes, 4) + "]");
  }
  if (bytes.size() < header) {
    throw IdxError(std::string(what) + ": truncated header, expected " + std::to_string(header) +
                   " bytes, got " + std::to_string(bytes.size()));
  }
}

void check_length(std::span<const unsigned char> bytes, std::size_t expected, const char* what) {
  if (bytes.size() != expected) {
    throw IdxError(std::string(what) + ": expected " + std::to_string(expected) + " bytes, got " +
                   std::to_string(bytes.size()));
  }
}

}  // namespace

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, size());
  std::vector<std::size_t> rows;
  for (std::size_t i = begin; i < end; ++i) rows.push_back(i);
  return select(rows);
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  Dataset out;
  out.num_classes = num_classes;
  out.x = Tensor({rows.size(), dim()});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto src = x.row_span(rows[k]);
    std::copy(src.begin(), src.end(), out.x.row_span(k).begin());
    out.y.push_back(y.at(rows[k]));
  }
  return out;
}

Tensor parse_idx_images(std::span<const unsigned char> bytes, std::size_t* rows, std::size_t* cols) {
  check_header(bytes, 0x00000803u, 16, "idx images");
  const std::size_t n = be32(bytes, 4), r = be32(bytes, 8), c = be32(bytes, 12);
  check_length(bytes, 16 + n * r * c, "idx images");
  Tensor out({n, r * c});
  for (std::size_t i = 0; i < n * r * c; ++i) out[i] = static_cast<double>(bytes[16 + i]) / 255.0;
  if (rows) *rows = r;
  if (cols) *cols = c;
  return out;
}

std::vector<int> parse_idx_labels(std::span<const unsigned char> bytes) {
  check_header(bytes, 0x00000801u, 8, "idx labels");
  const std::size_t n = be32(bytes, 4);
  check_length(bytes, 8 + n, "idx labels");
  return std::vector<int>(bytes.begin() + 8, bytes.end());
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit) {
  Dataset d;
  d.x = parse_idx_images(read_file(images_path));
  d.y = parse_idx_labels(read_file(labels_path));
  if (d.x.rows() != d.y.size()) {
    throw IdxError("idx: " + std::to_string(d.x.rows()) + " images but " + std::to_string(d.y.size()) +
                   " labels");
  }
  int max_label = 0;
  for (int v : d.y) max_label = std::max(max_label, v);
  d.num_classes = static_cast<std::size_t>(max_label) + 1;
  if (limit > 0 && limit < d.size()) {
    const std::size_t classes = d.num_classes;
    d = d.slice(0, limit);
    d.num_classes = classes;
  }
  return d;
}

Tensor downsample(const Tensor& images, std::size_t side, std::size_t factor) {
  if (factor == 0 || side % factor != 0 || images.cols() != side * side) {
    throw ShapeError("downsample", images.shape(),
                     "cannot pool side " + std::to_string(side) + " by " + std::to_string(factor));
  }
  if (factor == 1) return images;
  const std::size_t out_side = side / factor;
  const double inv = 1.0 / static_cast<double>(factor * factor);
  Tensor out({images.rows(), out_side * out_side});
  for (std::size_t n = 0; n < images.rows(); ++n) {
    auto src = images.row_span(n);
    auto dst = out.row_span(n);
    for (std::size_t i = 0; i < out_side; ++i)
      for (std::size_t j = 0; j < out_side; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < factor; ++a)
          for (std::size_t b = 0; b < factor; ++b) s += src[(i * factor + a) * side + j * factor + b];
        dst[i * out_side + j] = s * inv;
      }
  }
  return out;
}

std::pair<double, double> moons_to_unit(double u, double v) {
  // Noiseless moons span u in [-1, 2], v in [-0.5, 1].
  return {0.1 + 0.8 * (u + 1.0) / 3.0, 0.1 + 0.8 * (v + 0.5) / 1.5};
}

Dataset two_moons(std::size_t n, double noise, RngStream& rng) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("two_moons: n must be even and >= 2");
  if (!(noise >= 0.0)) throw std::invalid_argument("two_moons: noise must be >= 0");
  Dataset d;
  d.num_classes = 2;
  d.x = Tensor({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double t = std::numbers::pi * rng.uniform();
    double u = label == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double v = label == 0 ? std::sin(t) : 0.5 - std::sin(t);
    if (noise > 0.0) {
      u += noise * rng.normal();
      v += noise * rng.normal();
    }
    const auto [a, b] = moons_to_unit(u, v);
    // Noise can push a point past the box; attacks assume inputs in [0, 1].
    d.x.at(i, 0) = std::clamp(a, 0.0, 1.0);
    d.x.at(i, 1) = std::clamp(b, 0.0, 1.0);
    d.y.push_back(label);
  }
  return d;
}

}  // namespace gdl::data
