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

#include "deepball/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "deepball/random.hpp"

namespace deepball {

double average_precision(const RankedDetections& ranked, PrecisionMode mode) {
  std::size_t total_gt = 0;
  for (const auto& g : ranked.ground_truth) total_gt += g.size();
  if (total_gt == 0) throw ParameterError("average_precision: no ground-truth balls");

  std::vector<std::size_t> order(ranked.detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranked.detections[a].confidence > ranked.detections[b].confidence;
  });

  std::vector<std::vector<bool>> matched(ranked.ground_truth.size());
  for (std::size_t f = 0; f < matched.size(); ++f) matched[f].assign(ranked.ground_truth[f].size(), false);

  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const RankedDetection& d = ranked.detections[order[rank]];
    if (d.frame < 0 || static_cast<std::size_t>(d.frame) >= ranked.ground_truth.size()) {
      throw ParameterError("average_precision: detection refers to unknown frame " + std::to_string(d.frame));
    }
    const auto& balls = ranked.ground_truth[static_cast<std::size_t>(d.frame)];
    auto& used = matched[static_cast<std::size_t>(d.frame)];
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < balls.size(); ++i) {
      if (used[i]) continue;
      const double dist = std::hypot(static_cast<double>(d.x - balls[i].x), static_cast<double>(d.y - balls[i].y));
      if (dist <= ranked.tolerance_px && dist < best_dist) {
        best = static_cast<int>(i);
        best_dist = dist;
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
  }

  double sum = 0.0;
  for (int level = 0; level <= 10; ++level) {
    const double r = level / 10.0;
    double p = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] + 1e-12 < r) continue;
      if (mode == PrecisionMode::raw) {
        p = precision[i];
        break;
      }
      p = std::max(p, precision[i]);
    }
    sum += p;
  }
  return sum / 11.0;
}

RankedDetections rank_detections(const std::vector<FrameResult>& frames, double tolerance_px, int max_detections,
                                 int suppression_radius) {
  RankedDetections out;
  out.tolerance_px = tolerance_px;
  const DecodeConfig cfg{0.0, max_detections, suppression_radius};
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const FrameResult& fr = frames[f];
    out.ground_truth.push_back(fr.balls);
    for (const Detection& d : extract_peaks(fr.view(), cfg, fr.image_w, fr.image_h)) {
      out.detections.push_back({d.confidence, d.x_px, d.y_px, static_cast<int>(f)});
    }
  }
  return out;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::true_positive: return "TP";
    case Outcome::false_positive: return "FP";
    case Outcome::false_negative: return "FN";
    case Outcome::true_negative: return "TN";
  }
  return "?";
}

AccuracyResult accuracy(const std::vector<FrameResult>& frames, double theta, double tolerance_px) {
  AccuracyResult out;
  const DecodeConfig cfg{theta, 1, 3};
  std::size_t correct = 0;
  for (const FrameResult& f : frames) {
    FrameOutcome o;
    const auto d = extract_peaks(f.view(), cfg, f.image_w, f.image_h);
    if (!d.empty()) {
      o.detected = true;
      o.confidence = d.front().confidence;
      o.x = d.front().x_px;
      o.y = d.front().y_px;
    }
    if (f.balls.empty()) {
      o.outcome = o.detected ? Outcome::false_positive : Outcome::true_negative;
    } else if (!o.detected) {
      o.outcome = Outcome::false_negative;
    } else {
      o.outcome = near_any_ball(o.x, o.y, f.balls, tolerance_px) ? Outcome::true_positive : Outcome::false_positive;
    }
    correct += o.outcome == Outcome::true_positive || o.outcome == Outcome::true_negative;
    out.frames.push_back(o);
  }
  out.accuracy = frames.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(frames.size());
  return out;
}

BenchResult benchmark(const Model& model, int h, int w, int warmup, int iters) {
  if (iters < 1) throw ParameterError("benchmark: iters must be at least 1");
  if (warmup < 0) throw ParameterError("benchmark: warmup must be non-negative");
  Tensor4 input(1, model.config.input_channels, h, w);
  Rng rng(0x5eed);
  for (float& v : input.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  const DecodeConfig cfg{0.5, 1, 3};
  auto pass = [&] {
    const ForwardOutput out = forward(model, input);
    return extract_peaks(ball_channel(out.confidence), cfg, w, h).size();
  };
  std::size_t sink = 0;
  for (int i = 0; i < warmup; ++i) sink += pass();
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < iters; ++i) sink += pass();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  (void)sink;
  return {iters / seconds, seconds, iters};
}

FrameResult infer_frame(const Model& model, const Image& image, std::vector<BallPosition> balls) {
  const ForwardOutput out = forward(model, normalize_image(image, model.normalization));
  return make_frame_result(out.confidence, 0, image.height, image.width, std::move(balls));
}

std::vector<FrameResult> infer_frames(const Model& model, const std::vector<AnnotatedFrame>& frames) {
  std::vector<FrameResult> out;
  out.reserve(frames.size());
  for (const AnnotatedFrame& f : frames) out.push_back(infer_frame(model, f.image, f.balls));
  return out;
}

EvalReport evaluate(const std::vector<FrameResult>& frames, double theta, double tolerance_px) {
  EvalReport r;
  r.theta = theta;
  r.tolerance_px = tolerance_px;
  r.frames = frames.size();
  for (const FrameResult& f : frames) {
    r.ball_frames += !f.balls.empty();
    r.balls += f.balls.size();
  }
  r.ap = r.balls > 0 ? average_precision(rank_detections(frames, tolerance_px)) : 0.0;
  AccuracyResult acc = accuracy(frames, theta, tolerance_px);
  r.accuracy = acc.accuracy;
  r.outcomes = std::move(acc.frames);
  return r;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

std::string format_report(const EvalReport& r) {
  std::size_t counts[4] = {0, 0, 0, 0};
  for (const FrameOutcome& o : r.outcomes) ++counts[static_cast<int>(o.outcome)];
  std::string s;
  s += "ap = " + fmt("%.6f", r.ap) + "\n";
  s += "accuracy = " + fmt("%.6f", r.accuracy) + "\n";
  s += "theta = " + fmt("%.2f", r.theta) + "\n";
  s += "tolerance_px = " + fmt("%g", r.tolerance_px) + "\n";
  if (r.fps >= 0) s += "fps = " + fmt("%.2f", r.fps) + "\n";
  s += "frames = " + std::to_string(r.frames) + "\n";
  s += "ball_frames = " + std::to_string(r.ball_frames) + "\n";
  s += "balls = " + std::to_string(r.balls) + "\n";
  s += "tp = " + std::to_string(counts[0]) + "\n";
  s += "fp = " + std::to_string(counts[1]) + "\n";
  s += "fn = " + std::to_string(counts[2]) + "\n";
  s += "tn = " + std::to_string(counts[3]) + "\n";
  return s;
}

std::string format_outcomes_csv(const EvalReport& r, const std::vector<std::string>& frame_ids) {
  if (frame_ids.size() != r.outcomes.size()) {
    throw ParameterError("format_outcomes_csv: " + std::to_string(frame_ids.size()) + " ids for " +
                         std::to_string(r.outcomes.size()) + " frames");
  }
  std::string s = "frame_id,outcome,conf,x,y\n";
  for (std::size_t i = 0; i < frame_ids.size(); ++i) {
    const FrameOutcome& o = r.outcomes[i];
    s += frame_ids[i] + "," + outcome_name(o.outcome) + "," + (o.detected ? fmt("%.6f", o.confidence) : "") + "," +
         (o.detected ? std::to_string(o.x) : "") + "," + (o.detected ? std::to_string(o.y) : "") + "\n";
  }
  return s;
}

}  // namespace deepball
