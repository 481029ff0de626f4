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
#include "gdl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace gdl {

std::size_t num_elements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

ShapeError::ShapeError(const std::string& primitive, const Shape& lhs, const Shape& rhs)
    : std::invalid_argument(primitive + ": incompatible shapes " + to_string(lhs) + " and " +
                            to_string(rhs)),
      primitive_(primitive) {}

ShapeError::ShapeError(const std::string& primitive, const Shape& shape, const std::string& why)
    : std::invalid_argument(primitive + ": shape " + to_string(shape) + " " + why),
      primitive_(primitive) {}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(num_elements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != num_elements(shape_)) {
    throw ShapeError("tensor", shape_,
                     "does not match data length " + std::to_string(data_.size()));
  }
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("matrix", Shape{r, c}, "has ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 2) return shape_[0];
  if (shape_.size() <= 1) return 1;
  throw ShapeError("rows", shape_, "is not a matrix");
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  if (shape_.empty()) return 1;
  throw ShapeError("cols", shape_, "is not a matrix");
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item", shape_, "has more than one element");
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (num_elements(shape) != data_.size()) throw ShapeError("reshape", shape_, shape);
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace gdl
