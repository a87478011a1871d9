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

#include "deepball/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace deepball {

void DecodeConfig::validate() const {
  if (max_detections < 1) throw ParameterError("max_detections must be positive");
  if (suppression_radius < 1) throw ParameterError("suppression_radius must be >= 1");
  if (!(theta >= 0.0)) throw ParameterError("theta must be non-negative");
}

BallMap ball_channel(const Tensor4& confidence, int n) {
  if (confidence.c() != 2 || n < 0 || n >= confidence.n()) {
    throw ShapeError("ball_channel: expected a 2-channel map with image " + std::to_string(n) + ", got " +
                     confidence.shape().str());
  }
  return {std::span<const float>(confidence.plane(n, 1), confidence.shape().plane()), confidence.h(),
          confidence.w()};
}

std::pair<int, int> map_to_pixels(int x_f, int y_f, int image_w, int image_h, int k) {
  const int x = static_cast<int>(std::floor(k * (x_f - 0.5)));
  const int y = static_cast<int>(std::floor(k * (y_f - 0.5)));
  return {std::clamp(x, 0, std::max(0, image_w - 1)), std::clamp(y, 0, std::max(0, image_h - 1))};
}

std::vector<Detection> extract_peaks(const BallMap& map, const DecodeConfig& cfg, int image_w, int image_h) {
  cfg.validate();
  if (image_w <= 0) image_w = map.w * 4;
  if (image_h <= 0) image_h = map.h * 4;
  constexpr float kSuppressed = -std::numeric_limits<float>::infinity();
  std::vector<float> work(map.values.begin(), map.values.end());
  std::vector<Detection> out;
  while (static_cast<int>(out.size()) < cfg.max_detections) {
    std::size_t best = 0;
    float best_v = kSuppressed;
    for (std::size_t i = 0; i < work.size(); ++i) {
      if (work[i] > best_v) {
        best_v = work[i];
        best = i;
      }
    }
    if (best_v == kSuppressed || static_cast<double>(best_v) < cfg.theta) break;
    const int cy = static_cast<int>(best / static_cast<std::size_t>(map.w));
    const int cx = static_cast<int>(best % static_cast<std::size_t>(map.w));
    const auto [px, py] = map_to_pixels(cx, cy, image_w, image_h);
    out.push_back({px, py, best_v, {cx, cy}});
    const int r = cfg.suppression_radius;
    for (int y = std::max(0, cy - r); y <= std::min(map.h - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(map.w - 1, cx + r); ++x) {
        work[static_cast<std::size_t>(y) * map.w + x] = kSuppressed;
      }
    }
  }
  return out;
}

FrameResult make_frame_result(const Tensor4& confidence, int n, int image_h, int image_w,
                              std::vector<BallPosition> balls) {
  const BallMap m = ball_channel(confidence, n);
  FrameResult r;
  r.ball_map.assign(m.values.begin(), m.values.end());
  r.map_h = m.h;
  r.map_w = m.w;
  r.image_h = image_h;
  r.image_w = image_w;
  r.balls = std::move(balls);
  return r;
}

bool near_any_ball(int x, int y, const std::vector<BallPosition>& balls, double tolerance_px) {
  for (const BallPosition& b : balls) {
    if (std::hypot(static_cast<double>(x - b.x), static_cast<double>(y - b.y)) <= tolerance_px) return true;
  }
  return false;
}

double calibrate_threshold(const std::vector<FrameResult>& frames, double tolerance_px) {
  if (frames.empty()) throw ParameterError("calibrate_threshold: empty validation set");
  // With one detection per frame the decode at any theta is the argmax cell
  // when it clears theta, so each frame reduces to (peak value, located?).
  struct Peak {
    double value;
    bool located;
    bool has_ball;
  };
  std::vector<Peak> peaks;
  peaks.reserve(frames.size());
  const DecodeConfig argmax{0.0, 1, 1};
  for (const FrameResult& f : frames) {
    const auto d = extract_peaks(f.view(), argmax, f.image_w, f.image_h);
    Peak p{-1.0, false, !f.balls.empty()};
    if (!d.empty()) {
      p.value = d.front().confidence;
      p.located = near_any_ball(d.front().x_px, d.front().y_px, f.balls, tolerance_px);
    }
    peaks.push_back(p);
  }
  double best_theta = 0.0;
  std::size_t best_correct = 0;
  for (int step = 0; step <= 100; ++step) {
    const double theta = step / 100.0;
    std::size_t correct = 0;
    for (const Peak& p : peaks) {
      const bool detected = p.value >= theta;
      correct += p.has_ball ? (detected && p.located) : !detected;
    }
    if (correct >= best_correct) {
      best_correct = correct;
      best_theta = theta;
    }
  }
  return best_theta;
}

}  // namespace deepball
