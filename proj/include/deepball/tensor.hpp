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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "deepball/errors.hpp"

namespace deepball {

/// (batch, channels, rows, cols)
struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] std::size_t count() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense NCHW float tensor. A default-constructed tensor is empty and holds
/// no storage; every constructed tensor has all dimensions >= 1.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, float fill = 0.0f);
  Tensor4(int n, int c, int h, int w, float fill = 0.0f) : Tensor4(Shape4{n, c, h, w}, fill) {}
  Tensor4(Shape4 shape, std::vector<float> values);

  [[nodiscard]] const Shape4& shape() const { return shape_; }
  [[nodiscard]] int n() const { return shape_.n; }
  [[nodiscard]] int c() const { return shape_.c; }
  [[nodiscard]] int h() const { return shape_.h; }
  [[nodiscard]] int w() const { return shape_.w; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  float& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  [[nodiscard]] float at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float* data() { return data_.data(); }
  [[nodiscard]] const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  [[nodiscard]] std::span<const float> values() const { return data_; }

  /// Contiguous (h*w) plane of image `n`, channel `c`.
  float* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  [[nodiscard]] const float* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  /// Copy of images [first, first+count).
  [[nodiscard]] Tensor4 slice_batch(int first, int count) const;

  void fill(float v);

  friend bool operator==(const Tensor4& a, const Tensor4& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape4 shape_{};
  std::vector<float> data_;
};

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what);

}  // namespace deepball
