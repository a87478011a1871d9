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

#include <doctest.h>

#include "oracles.hpp"

using namespace deepball;

namespace {

BallMap view(const std::vector<float>& v, int h, int w) { return {v, h, w}; }

}  // namespace

TEST_CASE("map_to_pixels") {
  CHECK(map_to_pixels(1, 1, 256, 256) == std::pair{2, 2});
  CHECK(map_to_pixels(10, 5, 256, 256) == std::pair{38, 18});
  CHECK(map_to_pixels(0, 0, 256, 256) == std::pair{0, 0});
  CHECK(map_to_pixels(63, 63, 250, 251) == std::pair{249, 250});
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const auto [px, py] = map_to_pixels(x, y, 256, 256);
      REQUIRE(px == std::max(0, 4 * x - 2));
      REQUIRE(py == std::max(0, 4 * y - 2));
    }
  }
}

TEST_CASE("single peak and thresholding") {
  std::vector<float> m(64, 0.1f);
  m[3 * 8 + 5] = 0.9f;
  auto d = extract_peaks(view(m, 8, 8), {0.5, 4, 3});
  REQUIRE(d.size() == 1);
  CHECK(d[0].cell == MapCell{5, 3});
  CHECK(d[0].confidence == 0.9f);
  CHECK(d[0].x_px == 18);
  CHECK(d[0].y_px == 10);
  CHECK(extract_peaks(view(m, 8, 8), {0.95, 4, 3}).empty());
  // Confidence equal to theta is accepted.
  CHECK(extract_peaks(view(m, 8, 8), {0.9f, 1, 3}).size() == 1);
}

TEST_CASE("suppression separates near and far peaks") {
  std::vector<float> m(32 * 32, 0.0f);
  m[10 * 32 + 5] = 0.9f;
  m[10 * 32 + 15] = 0.8f;
  CHECK(extract_peaks(view(m, 32, 32), {0.5, 4, 3}).size() == 2);
  m[10 * 32 + 15] = 0.0f;
  m[10 * 32 + 7] = 0.8f;
  const auto d = extract_peaks(view(m, 32, 32), {0.5, 4, 3});
  REQUIRE(d.size() == 1);
  CHECK(d[0].confidence == 0.9f);
}

TEST_CASE("ties resolve to the lowest flat index") {
  std::vector<float> m(16 * 16, 0.7f);
  const auto d = extract_peaks(view(m, 16, 16), {0.5, 3, 1});
  REQUIRE(d.size() == 3);
  CHECK(d[0].cell == MapCell{0, 0});
  CHECK(d[1].cell == MapCell{2, 0});
  CHECK(d[2].cell == MapCell{4, 0});
}

TEST_CASE("extract_peaks matches the brute-force oracle and its properties") {
  Rng rng(200);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> m(24 * 20);
    oracle::fill_uniform(m, rng, 0.0, 1.0);
    const std::vector<float> copy = m;
    const double theta = rng.uniform(0.0, 1.0);
    const int r = rng.uniform_int(1, 4);
    const int max_det = rng.uniform_int(1, 12);
    const auto got = extract_peaks(view(m, 24, 20), {theta, max_det, r});
    const auto want = oracle::peaks(m, 24, 20, theta, max_det, r);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].cell == MapCell{want[i].x, want[i].y});
      CHECK(got[i].confidence == want[i].value);
      CHECK(got[i].confidence >= theta);
      if (i > 0) CHECK(got[i].confidence <= got[i - 1].confidence);
      for (std::size_t j = 0; j < i; ++j) {
        CHECK(std::max(std::abs(got[i].cell.x - got[j].cell.x), std::abs(got[i].cell.y - got[j].cell.y)) > r);
      }
    }
    CHECK(m == copy);
    // Raising theta never adds detections.
    CHECK(extract_peaks(view(m, 24, 20), {std::min(1.0, theta + 0.1), max_det, r}).size() <= got.size());
    // One detection is the argmax.
    const auto one = extract_peaks(view(m, 24, 20), {0.0, 1, r});
    const auto argmax = static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
    CHECK(one.front().cell == MapCell{argmax % 20, argmax / 20});
  }
}

TEST_CASE("decode config validation") {
  std::vector<float> m(16, 0.5f);
  CHECK_THROWS_AS(extract_peaks(view(m, 4, 4), {0.5, 0, 3}), ParameterError);
  CHECK_THROWS_AS(extract_peaks(view(m, 4, 4), {0.5, 1, 0}), ParameterError);
}

TEST_CASE("calibration picks the accuracy maximum with ties to larger theta") {
  auto frame = [](float peak, int cell_x, std::vector<BallPosition> balls) {
    FrameResult f;
    f.map_h = f.map_w = 8;
    f.image_h = f.image_w = 32;
    f.ball_map.assign(64, 0.01f);
    f.ball_map[static_cast<std::size_t>(3 * 8 + cell_x)] = peak;
    f.balls = std::move(balls);
    return f;
  };
  // Perfect for any theta in (0.2, 0.8].
  std::vector<FrameResult> frames = {frame(0.8f, 3, {{10, 10}}), frame(0.2f, 3, {})};
  CHECK(calibrate_threshold(frames, 4.0) == doctest::Approx(0.80));

  std::vector<FrameResult> empty_frames = {frame(0.3f, 1, {}), frame(0.25f, 2, {})};
  CHECK(calibrate_threshold(empty_frames, 4.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(calibrate_threshold({}, 4.0), ParameterError);

  Rng rng(201);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<FrameResult> set;
    for (int i = 0; i < 12; ++i) {
      std::vector<BallPosition> balls;
      if (rng.bernoulli(0.6)) balls.push_back({rng.uniform_int(0, 31), rng.uniform_int(0, 31)});
      FrameResult f = frame(static_cast<float>(rng.uniform(0.0, 1.0)), rng.uniform_int(0, 7), balls);
      oracle::fill_uniform(f.ball_map, rng, 0.0, 0.5);
      set.push_back(f);
    }
    double best_theta = -1.0, best_acc = -1.0;
    for (int s = 0; s <= 100; ++s) {
      const double acc = oracle::accuracy(set, s / 100.0, 6.0);
      if (acc >= best_acc) best_acc = acc, best_theta = s / 100.0;
    }
    CHECK(calibrate_threshold(set, 6.0) == doctest::Approx(best_theta));
  }
}
