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
#ifndef GDL_DATA_HPP_
#define GDL_DATA_HPP_

// Labelled datasets: the IDX (MNIST) parser, 2x2 average pooling, and the
// two-moons generator.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdl/rng.hpp"
#include "gdl/tensor.hpp"

namespace gdl::data {

struct Dataset {
  Tensor x;             // [n, p], features in [0, 1]
  std::vector<int> y;   // labels in [0, num_classes)
  std::size_t num_classes = 0;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.cols(); }
  Dataset slice(std::size_t begin, std::size_t end) const;
  Dataset select(std::span<const std::size_t> rows) const;
};

/// Malformed IDX input.
class IdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses an IDX image file (magic 0x00000803, u8, count x rows x cols) into
/// [count, rows * cols] with values / 255.
Tensor parse_idx_images(std::span<const unsigned char> bytes, std::size_t* rows = nullptr,
                        std::size_t* cols = nullptr);
/// Parses an IDX label file (magic 0x00000801, u8, count).
std::vector<int> parse_idx_labels(std::span<const unsigned char> bytes);

std::vector<unsigned char> read_file(const std::string& path);

/// Loads an image/label pair; `limit` > 0 keeps the first `limit` examples.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit = 0);

/// Average-pools square images by `factor` (28x28 -> 14x14 for factor 2).
Tensor downsample(const Tensor& images, std::size_t side, std::size_t factor);

/// Two interleaved half circles with Gaussian noise, affinely mapped so the
/// noiseless curves span [0.1, 0.9] x [0.1, 0.9], then clamped to the unit
/// box. Labels alternate 0, 1.
Dataset two_moons(std::size_t n, double noise, RngStream& rng);

/// The affine map applied by two_moons, exposed for tests.
std::pair<double, double> moons_to_unit(double u, double v);

}  // namespace gdl::data

#endif  // GDL_DATA_HPP_
