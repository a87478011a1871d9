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

#include <span>
#include <utility>
#include <vector>

#include "deepball/loss.hpp"
#include "deepball/tensor.hpp"

namespace deepball {

struct Detection {
  int x_px = 0;
  int y_px = 0;
  float confidence = 0.0f;
  MapCell cell;
};

struct DecodeConfig {
  double theta = 0.5;
  int max_detections = 1;
  int suppression_radius = 3;  // cells; a (2r+1)^2 square is suppressed

  void validate() const;
};

/// Read-only view of one image's ball-probability channel.
struct BallMap {
  std::span<const float> values;
  int h = 0;
  int w = 0;

  [[nodiscard]] float at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
};

/// Channel 1 of image `n` of a (N, 2, h, w) confidence map.
BallMap ball_channel(const Tensor4& confidence, int n = 0);

/// (floor(k (x_f - 0.5)), floor(k (y_f - 0.5))) clipped to [0, W-1] x [0, H-1].
std::pair<int, int> map_to_pixels(int x_f, int y_f, int image_w, int image_h, int k = 4);

/// Iterative global-max extraction with square non-max suppression. Stops
/// when the best remaining value is below theta or max_detections is reached.
/// Image dims default to k times the map dims.
std::vector<Detection> extract_peaks(const BallMap& map, const DecodeConfig& cfg, int image_w = 0,
                                     int image_h = 0);

/// Decoded network output for one frame plus its ground truth.
struct FrameResult {
  std::vector<float> ball_map;  // h * w ball-channel values
  int map_h = 0;
  int map_w = 0;
  int image_h = 0;
  int image_w = 0;
  std::vector<BallPosition> balls;

  [[nodiscard]] BallMap view() const { return {ball_map, map_h, map_w}; }
};

FrameResult make_frame_result(const Tensor4& confidence, int n, int image_h, int image_w,
                              std::vector<BallPosition> balls);

/// True when (x, y) lies within `tolerance_px` (Euclidean) of some ball.
bool near_any_ball(int x, int y, const std::vector<BallPosition>& balls, double tolerance_px);

/// Grid search over theta in {0.00, 0.01, ..., 1.00} for the value that
/// maximizes single-ball accuracy; ties go to the larger theta.
double calibrate_threshold(const std::vector<FrameResult>& frames, double tolerance_px);

}  // namespace deepball
