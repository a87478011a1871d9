// Copyright 2026 The DeepBall Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "deepball/tensor.hpp"

#include <algorithm>
#include <utility>

namespace deepball {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

namespace {
void check_dims(const Shape4& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw ShapeError("tensor dimensions must be >= 1, got " + s.str());
  }
}
}  // namespace

Tensor4::Tensor4(Shape4 shape, float fill) : shape_(shape) {
  check_dims(shape_);
  data_.assign(shape_.count(), fill);
}

Tensor4::Tensor4(Shape4 shape, std::vector<float> values) : shape_(shape), data_(std::move(values)) {
  check_dims(shape_);
  if (data_.size() != shape_.count()) {
    throw ShapeError("tensor of shape " + shape_.str() + " needs " + std::to_string(shape_.count()) +
                     " values, got " + std::to_string(data_.size()));
  }
}

Tensor4 Tensor4::slice_batch(int first, int count) const {
  if (first < 0 || count < 1 || first + count > shape_.n) {
    throw ShapeError("batch slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                     ") out of range for " + shape_.str());
  }
  Tensor4 out(Shape4{count, shape_.c, shape_.h, shape_.w});
  const std::size_t per = static_cast<std::size_t>(shape_.c) * shape_.plane();
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * per), count * per, out.data_.begin());
  return out;
}

void Tensor4::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + a.shape().str() + " does not match " +
                     b.shape().str());
  }
}

}  // namespace deepball
