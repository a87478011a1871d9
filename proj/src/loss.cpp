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

#include "deepball/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace deepball {

bool TargetSet::is_positive(int flat) const {
  return std::binary_search(positives.begin(), positives.end(), flat);
}

TargetSet build_targets(const std::vector<BallPosition>& balls, int map_h, int map_w, int k) {
  if (map_h < 1 || map_w < 1) throw ShapeError("build_targets: empty confidence map");
  if (k < 1) throw ParameterError("build_targets: scaling factor must be positive");
  TargetSet t;
  t.map_h = map_h;
  t.map_w = map_w;
  std::vector<char> mark(static_cast<std::size_t>(map_h) * map_w, 0);
  for (const BallPosition& b : balls) {
    const int cx = std::clamp(b.x / k, 0, map_w - 1);
    const int cy = std::clamp(b.y / k, 0, map_h - 1);
    t.ball_cells.push_back({cx, cy});
    for (int y = std::max(0, cy - 1); y <= std::min(map_h - 1, cy + 1); ++y) {
      for (int x = std::max(0, cx - 1); x <= std::min(map_w - 1, cx + 1); ++x) {
        mark[static_cast<std::size_t>(y) * map_w + x] = 1;
      }
    }
  }
  for (int i = 0; i < map_h * map_w; ++i) {
    (mark[static_cast<std::size_t>(i)] ? t.positives : t.negative_candidates).push_back(i);
  }
  return t;
}

std::vector<int> mine_negatives(const Tensor4& conf, const TargetSet& targets, int image) {
  if (conf.c() != 2 || conf.h() != targets.map_h || conf.w() != targets.map_w || image < 0 ||
      image >= conf.n()) {
    throw ShapeError("mine_negatives: map " + conf.shape().str() + " does not match targets " +
                     std::to_string(targets.map_h) + "x" + std::to_string(targets.map_w));
  }
  const std::size_t available = targets.negative_candidates.size();
  const std::size_t wanted = targets.positives.empty()
                                 ? static_cast<std::size_t>(kNegativesWithoutBalls)
                                 : kNegativesPerPositive * targets.positives.size();
  const std::size_t m = std::min(wanted, available);
  const float* bg = conf.plane(image, 0);
  std::vector<int> ranked = targets.negative_candidates;
  // -log is decreasing, so the highest confidence loss is the lowest c_bg.
  auto harder = [bg](int a, int b) { return bg[a] != bg[b] ? bg[a] < bg[b] : a < b; };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(m), ranked.end(), harder);
  ranked.resize(m);
  return ranked;
}

LossOutput detection_loss(const Tensor4& logits, const std::vector<TargetSet>& targets,
                          const std::vector<std::vector<int>>& selected_negatives) {
  if (logits.c() != 2) throw ShapeError("detection_loss: logits " + logits.shape().str() + " must have 2 channels");
  if (targets.size() != static_cast<std::size_t>(logits.n()) || selected_negatives.size() != targets.size()) {
    throw ShapeError("detection_loss: need one target set and one negative set per image");
  }
  LossOutput out;
  out.grad_logits = Tensor4(logits.shape());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].map_h != logits.h() || targets[i].map_w != logits.w()) {
      throw ShapeError("detection_loss: targets for image " + std::to_string(i) + " do not match " +
                       logits.shape().str());
    }
    out.pos_count += targets[i].positives.size();
    out.neg_count += selected_negatives[i].size();
  }
  const std::size_t total = out.pos_count + out.neg_count;
  if (total == 0) return out;

  const double inv_n = 1.0 / static_cast<double>(total);
  double sum = 0.0;
  // Fused log-softmax over the 2 channels: -log p_label = logsumexp - z_label.
  auto accumulate = [&](int image, int flat, int label) {
    float& g_bg = out.grad_logits.plane(image, 0)[flat];
    float& g_ball = out.grad_logits.plane(image, 1)[flat];
    const double z_bg = logits.plane(image, 0)[flat];
    const double z_ball = logits.plane(image, 1)[flat];
    const double mx = std::max(z_bg, z_ball);
    const double lse = mx + std::log(std::exp(z_bg - mx) + std::exp(z_ball - mx));
    const double p_bg = std::exp(z_bg - lse);
    const double p_ball = std::exp(z_ball - lse);
    sum += lse - (label == 1 ? z_ball : z_bg);
    g_bg = static_cast<float>((p_bg - (label == 0 ? 1.0 : 0.0)) * inv_n);
    g_ball = static_cast<float>((p_ball - (label == 1 ? 1.0 : 0.0)) * inv_n);
  };
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int image = static_cast<int>(i);
    for (int flat : targets[i].positives) accumulate(image, flat, 1);
    for (int flat : selected_negatives[i]) {
      if (targets[i].is_positive(flat)) {
        throw ParameterError("detection_loss: cell " + std::to_string(flat) + " of image " +
                             std::to_string(i) + " is both positive and negative");
      }
      accumulate(image, flat, 0);
    }
  }
  out.value = sum * inv_n;
  return out;
}

}  // namespace deepball
