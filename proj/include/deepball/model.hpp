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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepball/container.hpp"
#include "deepball/ops.hpp"
#include "deepball/tensor.hpp"

namespace deepball {

inline constexpr int kScalingFactor = 4;
inline constexpr std::size_t kFullParameterCount = 48658;
inline constexpr std::size_t kAblationParameterCount = 29146;

struct ModelConfig {
  bool hypercolumn = true;  // false: Conv4 sees only the (upsampled) Conv3 output
  int input_channels = 3;
  int scaling_factor = kScalingFactor;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Pixel p in [0, 255] maps to (p / 255 - offset) / scale.
struct InputNormalization {
  float offset = 0.5f;
  float scale = 0.5f;

  friend bool operator==(const InputNormalization&, const InputNormalization&) = default;
};

/// One convolution with its optional BatchNorm and ReLU.
struct ConvUnit {
  std::string name;
  ConvLayerParams conv;
  std::optional<BatchNormParams> bn;
  bool relu = true;
};

enum UnitIndex : int { kConv1a, kConv1b, kConv2a, kConv2b, kConv3a, kConv3b, kConv4a, kConv4b, kUnitCount };

struct Model {
  ModelConfig config;
  InputNormalization normalization;
  std::uint64_t init_seed = 0;
  std::array<ConvUnit, kUnitCount> units;

  [[nodiscard]] std::size_t trainable_parameter_count() const;
  /// Weights, bias, then BN scale/shift per unit, in unit order.
  std::vector<std::span<float>> trainable();
  [[nodiscard]] std::vector<std::span<const float>> trainable() const;
  [[nodiscard]] std::vector<std::string> trainable_names() const;
  [[nodiscard]] int conv4_input_channels() const { return units[kConv4a].conv.in_channels(); }
};

Model build_model(const ModelConfig& config, std::uint64_t seed);

/// Confidence-map size for an (h, w) input; throws ShapeError when the input
/// is too small to survive three 2x2 poolings.
std::pair<int, int> confidence_map_size(int h, int w);

struct UnitCache {
  Tensor4 input;
  Tensor4 conv_out;
  Tensor4 activation_in;  // value fed to ReLU (post-BN when BN is present)
  BatchNormCache bn;
};

/// Intermediates recorded by a train-mode forward pass.
struct ForwardCache {
  std::array<UnitCache, kUnitCount> units;
  std::array<MaxPoolResult, 3> pools;
  std::array<Shape4, 3> pool_inputs{};
  std::array<Shape4, 3> block_outputs{};
  bool valid = false;
};

struct ForwardOutput {
  Tensor4 logits;      // (n, 2, h/4, w/4) pre-softmax
  Tensor4 confidence;  // channel 0 background, channel 1 ball
};

/// `cache` is required for Mode::train if backward will be called.
ForwardOutput forward(Model& model, const Tensor4& images, Mode mode, ForwardCache* cache = nullptr);
/// Inference-only overload; never touches running statistics.
ForwardOutput forward(const Model& model, const Tensor4& images);

struct UnitGrads {
  Tensor4 weights;
  std::vector<float> bias;
  std::vector<float> scale;  // empty for units without BN
  std::vector<float> shift;
};

/// Gradient arriving at each hypercolumn source; the Conv1 and Conv2 parts
/// are all-zero for the no-hypercolumn ablation.
struct HypercolumnGrads {
  Tensor4 from_conv1;
  Tensor4 from_conv2;
  Tensor4 from_conv3;
};

struct ParameterGradients {
  std::array<UnitGrads, kUnitCount> units;
  HypercolumnGrads hypercolumn;

  /// Same order as Model::trainable().
  [[nodiscard]] std::vector<std::span<const float>> views() const;
};

ParameterGradients backward(const Model& model, const ForwardCache& cache, const Tensor4& grad_logits);

// Checkpoint I/O -------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Header fields and arrays of a model, shared by checkpoints and
/// training-state files.
struct ModelPayload {
  nlohmann::json meta;
  std::vector<NamedArray> arrays;
};
ModelPayload encode_model(const Model& model);
/// Rebuilds a model from `meta`, consuming arrays from index `next` on.
Model decode_model(const nlohmann::json& meta, const std::vector<NamedArray>& arrays, std::size_t& next,
                   const std::string& where);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace deepball
