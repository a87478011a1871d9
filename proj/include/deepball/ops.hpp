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

#include <cstdint>
#include <vector>

#include "deepball/tensor.hpp"

namespace deepball {

enum class PaddingMode { same, explicit_pad };

/// Weights are (out_channels, in_channels, kH, kW); kernels must be odd-sized.
struct ConvLayerParams {
  Tensor4 weights;
  std::vector<float> bias;
  int stride = 1;
  PaddingMode padding = PaddingMode::same;
  int pad_h = 0;  // explicit_pad only
  int pad_w = 0;

  [[nodiscard]] int out_channels() const { return weights.n(); }
  [[nodiscard]] int in_channels() const { return weights.c(); }
  [[nodiscard]] int kernel_h() const { return weights.h(); }
  [[nodiscard]] int kernel_w() const { return weights.w(); }
  [[nodiscard]] int effective_pad_h() const;
  [[nodiscard]] int effective_pad_w() const;
  /// Output spatial dims for an (h, w) input.
  [[nodiscard]] int output_h(int h) const;
  [[nodiscard]] int output_w(int w) const;

  void validate() const;
};

ConvLayerParams make_conv(int in_channels, int out_channels, int kernel, int stride = 1);

struct ConvGrads {
  Tensor4 input;  // empty when not requested
  Tensor4 weights;
  std::vector<float> bias;
};

Tensor4 conv2d(const Tensor4& input, const ConvLayerParams& params);
ConvGrads conv2d_backward(const Tensor4& input, const ConvLayerParams& params, const Tensor4& grad_out,
                          bool compute_input_grad = true);

struct MaxPoolResult {
  Tensor4 output;
  std::vector<std::int64_t> argmax;  // flat input index per output element
};

/// 2x2 window, stride 2; an odd trailing row/column is dropped.
MaxPoolResult maxpool2x2(const Tensor4& input);
Tensor4 maxpool2x2_backward(const Shape4& input_shape, const MaxPoolResult& pooled, const Tensor4& grad_out);

Tensor4 relu(const Tensor4& input);
void relu_inplace(Tensor4& t);
Tensor4 relu_backward(const Tensor4& input, const Tensor4& grad_out);

enum class Mode { train, infer };

struct BatchNormParams {
  std::vector<float> scale;
  std::vector<float> shift;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  float epsilon = 1e-5f;
  float momentum = 0.1f;

  static BatchNormParams identity(int channels);
  [[nodiscard]] int channels() const { return static_cast<int>(scale.size()); }
};

/// Batch statistics captured by a train-mode pass, consumed by backward.
struct BatchNormCache {
  std::vector<double> mean;
  std::vector<double> inv_std;
};

struct BatchNormGrads {
  Tensor4 input;
  std::vector<float> scale;
  std::vector<float> shift;
};

/// Train mode normalizes with batch statistics and updates the running
/// statistics in `params`; infer mode reads the running statistics only.
Tensor4 batchnorm(const Tensor4& input, BatchNormParams& params, Mode mode, BatchNormCache* cache = nullptr);
Tensor4 batchnorm_infer(const Tensor4& input, const BatchNormParams& params);
BatchNormGrads batchnorm_backward(const Tensor4& input, const BatchNormParams& params,
                                  const BatchNormCache& cache, const Tensor4& grad_out);

/// Nearest-neighbour resize: out(y, x) = in(floor(y*H/th), floor(x*W/tw)).
Tensor4 upsample_nearest(const Tensor4& input, int target_h, int target_w);
Tensor4 upsample_nearest_backward(const Shape4& input_shape, const Tensor4& grad_out);

Tensor4 concat_channels(const std::vector<const Tensor4*>& inputs);
Tensor4 concat_channels(const std::vector<Tensor4>& inputs);
/// Adjoint of concat: splits along channels into the given channel counts.
std::vector<Tensor4> split_channels(const Tensor4& input, const std::vector<int>& channel_counts);

Tensor4 softmax_channels(const Tensor4& input);

}  // namespace deepball
