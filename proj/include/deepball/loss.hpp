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
#include <vector>

#include "deepball/tensor.hpp"

namespace deepball {

/// Ball center in input-image pixel coordinates (origin top-left).
struct BallPosition {
  int x = 0;
  int y = 0;

  friend bool operator==(const BallPosition&, const BallPosition&) = default;
};

/// Confidence-map cell; x is the column, y the row.
struct MapCell {
  int x = 0;
  int y = 0;

  friend bool operator==(const MapCell&, const MapCell&) = default;
};

/// Positive and negative-candidate cells for one image. Indices are flat
/// (y * map_w + x) and sorted ascending.
struct TargetSet {
  int map_h = 0;
  int map_w = 0;
  std::vector<int> positives;
  std::vector<int> negative_candidates;
  /// For each ball, the cell its center falls in.
  std::vector<MapCell> ball_cells;

  [[nodiscard]] bool is_positive(int flat) const;
};

/// Each ball marks its cell (floor(x/k), floor(y/k)) and the 8-connected
/// neighbours (clipped at the border) as positives.
TargetSet build_targets(const std::vector<BallPosition>& balls, int map_h, int map_w, int k = 4);

inline constexpr int kNegativesPerPositive = 3;
inline constexpr int kNegativesWithoutBalls = 32;

/// Hard negatives for one image: candidates ranked by -log(c_bg) descending,
/// ties toward the lower flat index. `conf` is a (1, 2, h, w) map or the
/// `image`-th slice of a batch.
std::vector<int> mine_negatives(const Tensor4& conf, const TargetSet& targets, int image = 0);

struct LossOutput {
  double value = 0.0;
  Tensor4 grad_logits;
  std::size_t pos_count = 0;
  std::size_t neg_count = 0;
};

/// Softmax cross-entropy over the labelled cells of a batch of logit maps,
/// normalized by N = total positives + selected negatives. The gradient is
/// taken w.r.t. the pre-softmax logits.
LossOutput detection_loss(const Tensor4& logits, const std::vector<TargetSet>& targets,
                          const std::vector<std::vector<int>>& selected_negatives);

}  // namespace deepball
