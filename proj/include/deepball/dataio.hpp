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
#include <filesystem>
#include <string>
#include <vector>

#include "deepball/loss.hpp"
#include "deepball/model.hpp"
#include "deepball/random.hpp"
#include "deepball/tensor.hpp"

namespace deepball {

/// 8-bit RGB, interleaved, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  [[nodiscard]] const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  friend bool operator==(const Image&, const Image&) = default;
};

inline constexpr int kMinFrameSide = 64;

struct AnnotatedFrame {
  Image image;
  std::vector<BallPosition> balls;
  std::string source_id;

  /// Throws ParameterError if a ball lies outside the image.
  void validate() const;
};

/// Reads PNG (8-bit RGB/RGBA/gray) or binary PPM (P6), chosen by file magic.
Image read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);
void write_ppm(const std::filesystem::path& path, const Image& image);

// Manifest ------------------------------------------------------------------

/// One manifest line: `<relative-image-path> <ball-count> [<x> <y>]...`.
struct FrameDescriptor {
  std::filesystem::path image_path;  // resolved against the manifest directory
  std::string source_id;             // path as written in the manifest
  std::vector<BallPosition> balls;
};

std::vector<FrameDescriptor> load_annotations(const std::filesystem::path& manifest_path);
AnnotatedFrame load_frame(const FrameDescriptor& descriptor);
std::string format_manifest_line(const std::string& relative_path, const std::vector<BallPosition>& balls);

// Augmentation --------------------------------------------------------------

struct AugmentConfig {
  bool color_jitter = true;
  double brightness = 0.2;  // factor drawn from [1 - b, 1 + b]
  double contrast = 0.2;
  double saturation = 0.2;
  double hue = 0.04;  // shift drawn from [-hue, hue] of the hue circle
  double flip_probability = 0.5;
  bool random_scale = true;
  double scale_min = 0.5;
  double scale_max = 1.1;
  int crop_h = 512;  // 0 disables cropping
  int crop_w = 512;

  void validate() const;
};

/// Geometric transform actually applied, for mapping points back.
struct AugmentRecord {
  int source_w = 0;
  int source_h = 0;
  bool flipped = false;
  int scaled_w = 0;
  int scaled_h = 0;
  int crop_x = 0;
  int crop_y = 0;
};

/// jitter -> flip -> scale -> crop. Balls follow the geometric maps; balls
/// that leave the crop are dropped.
AnnotatedFrame augment(const AnnotatedFrame& frame, const AugmentConfig& cfg, Rng& rng,
                       AugmentRecord* record = nullptr);

/// Maps a point of the augmented frame back into the source frame.
BallPosition invert_augment_point(const AugmentRecord& record, int x, int y);

// Synthetic scenes ----------------------------------------------------------

struct SynthConfig {
  int width = 256;
  int height = 256;
  int radius_min = 8;
  int radius_max = 16;
  /// P(0 balls), P(1 ball); the remainder is P(2 balls).
  double p_no_ball = 0.35;
  double p_one_ball = 0.5;
  int fixed_ball_count = -1;  // >= 0 overrides the distribution
  int max_lines = 3;
  int max_players = 4;
  int max_clutter = 5;
  double motion_blur_probability = 0.3;
  double player_overlap_probability = 0.25;

  void validate() const;
};

AnnotatedFrame synthesize_frame(const SynthConfig& cfg, Rng& rng);

// Tensors -------------------------------------------------------------------

/// (p / 255 - offset) / scale per channel, shape 1x3xHxW.
Tensor4 normalize_image(const Image& image, const InputNormalization& norm = {});
/// Stacks same-sized frames into an Nx3xHxW batch.
Tensor4 normalize_batch(const std::vector<const Image*>& images, const InputNormalization& norm = {});

}  // namespace deepball
