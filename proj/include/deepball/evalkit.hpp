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

#include <string>
#include <vector>

#include "deepball/dataio.hpp"
#include "deepball/detector.hpp"
#include "deepball/model.hpp"

namespace deepball {

inline constexpr double kDefaultTolerancePx = 16.0;

struct RankedDetection {
  float confidence = 0.0f;
  int x = 0;
  int y = 0;
  int frame = 0;
};

/// Detections pooled over frames, with the ground truth of every frame.
struct RankedDetections {
  std::vector<RankedDetection> detections;
  std::vector<std::vector<BallPosition>> ground_truth;  // indexed by frame
  double tolerance_px = kDefaultTolerancePx;
};

enum class PrecisionMode { interpolated, raw };

/// 11-point AP. Detections are ranked by confidence (stable for ties) and
/// matched greedily to the nearest unmatched ball of their frame.
double average_precision(const RankedDetections& ranked, PrecisionMode mode = PrecisionMode::interpolated);

/// Decodes every frame with theta = 0 and up to `max_detections` peaks.
RankedDetections rank_detections(const std::vector<FrameResult>& frames, double tolerance_px,
                                 int max_detections = 4, int suppression_radius = 3);

enum class Outcome { true_positive, false_positive, false_negative, true_negative };
const char* outcome_name(Outcome o);

struct FrameOutcome {
  Outcome outcome = Outcome::true_negative;
  bool detected = false;
  float confidence = 0.0f;
  int x = -1;
  int y = -1;
};

struct AccuracyResult {
  double accuracy = 0.0;
  std::vector<FrameOutcome> frames;
};

/// Single-ball accuracy: a frame is correct when its one decoded detection
/// lies within tolerance of a ball, or when a ball-free frame yields none.
AccuracyResult accuracy(const std::vector<FrameResult>& frames, double theta, double tolerance_px);

struct BenchResult {
  double fps = 0.0;
  double seconds = 0.0;
  int iters = 0;
};

/// Times forward + decode on a fixed random input of size h x w.
BenchResult benchmark(const Model& model, int h, int w, int warmup, int iters);

/// Forward one frame and keep its ball map.
FrameResult infer_frame(const Model& model, const Image& image, std::vector<BallPosition> balls = {});
std::vector<FrameResult> infer_frames(const Model& model, const std::vector<AnnotatedFrame>& frames);

struct EvalReport {
  double ap = 0.0;
  double accuracy = 0.0;
  double theta = 0.0;
  double tolerance_px = kDefaultTolerancePx;
  double fps = -1.0;  // negative when not measured
  std::size_t frames = 0;
  std::size_t ball_frames = 0;
  std::size_t balls = 0;
  std::vector<FrameOutcome> outcomes;
};

EvalReport evaluate(const std::vector<FrameResult>& frames, double theta, double tolerance_px);

/// `metric = value` lines.
std::string format_report(const EvalReport& report);
/// `frame_id,outcome,conf,x,y` rows with a header line.
std::string format_outcomes_csv(const EvalReport& report, const std::vector<std::string>& frame_ids);

}  // namespace deepball
