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

#include <algorithm>
#include <array>
#include <cmath>

#include "deepball/dataio.hpp"

namespace deepball {

void SynthConfig::validate() const {
  if (width < kMinFrameSide || height < kMinFrameSide) {
    throw ParameterError("synthetic frames must be at least " + std::to_string(kMinFrameSide) + " px per side");
  }
  if (radius_min < 2 || radius_max > 64 || radius_min > radius_max) {
    throw ParameterError("ball radius range must lie within [2, 64]");
  }
  if (p_no_ball < 0 || p_one_ball < 0 || p_no_ball + p_one_ball > 1) {
    throw ParameterError("ball count probabilities must be non-negative and sum to at most 1");
  }
  if (fixed_ball_count > 2) throw ParameterError("at most 2 balls per synthetic frame");
  if (4 * radius_max + 8 > std::min(width, height)) throw ParameterError("frame too small for the ball radius range");
}

namespace {

using Rgb = std::array<float, 3>;

struct Canvas {
  int w, h;
  std::vector<float> px;

  Canvas(int width, int height) : w(width), h(height), px(static_cast<std::size_t>(width) * height * 3, 0.0f) {}

  float* at(int x, int y) { return px.data() + (static_cast<std::size_t>(y) * w + x) * 3; }

  void blend(int x, int y, const Rgb& c, float alpha) {
    if (x < 0 || y < 0 || x >= w || y >= h || alpha <= 0.0f) return;
    float* p = at(x, y);
    for (int i = 0; i < 3; ++i) p[i] = p[i] * (1 - alpha) + c[static_cast<std::size_t>(i)] * alpha;
  }

  void rect(int x0, int y0, int x1, int y1, const Rgb& c, float alpha = 1.0f) {
    for (int y = std::max(0, y0); y < std::min(h, y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(w, x1); ++x) blend(x, y, c, alpha);
    }
  }
};

Rgb jitter(Rng& rng, Rgb base, float spread) {
  for (float& v : base) v = std::clamp(v + static_cast<float>(rng.uniform(-spread, spread)), 0.0f, 255.0f);
  return base;
}

// Coverage of an arbitrary shape over a pixel by 4x4 supersampling.
template <typename Inside>
float coverage(int x, int y, Inside inside) {
  int hits = 0;
  for (int sy = 0; sy < 4; ++sy) {
    for (int sx = 0; sx < 4; ++sx) hits += inside(x + (sx + 0.5) / 4.0, y + (sy + 0.5) / 4.0);
  }
  return static_cast<float>(hits) / 16.0f;
}

void draw_pitch(Canvas& cv, int top, Rng& rng) {
  const Rgb grass = {static_cast<float>(rng.uniform(35, 75)), static_cast<float>(rng.uniform(105, 155)),
                     static_cast<float>(rng.uniform(35, 70))};
  const int stripe = rng.uniform_int(14, 32);
  const bool vertical = rng.bernoulli(0.5);
  const double stripe_gain = rng.uniform(0.04, 0.1);
  for (int y = top; y < cv.h; ++y) {
    for (int x = 0; x < cv.w; ++x) {
      const int band = (vertical ? x : y) / stripe;
      const double gain = 1.0 + (band % 2 == 0 ? stripe_gain : -stripe_gain);
      const double n = rng.normal() * 4.0;
      float* p = cv.at(x, y);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(std::clamp(grass[static_cast<std::size_t>(c)] * gain + n, 0.0, 255.0));
    }
  }
}

// Stands and advertising boards above the pitch, with white clutter.
void draw_off_pitch(Canvas& cv, int top, const SynthConfig& cfg, Rng& rng) {
  const Rgb stands = {static_cast<float>(rng.uniform(30, 90)), static_cast<float>(rng.uniform(30, 90)),
                      static_cast<float>(rng.uniform(40, 110))};
  for (int y = 0; y < top; ++y) {
    for (int x = 0; x < cv.w; ++x) {
      const double n = rng.normal() * 12.0;
      float* p = cv.at(x, y);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(std::clamp(stands[static_cast<std::size_t>(c)] + n, 0.0, 255.0));
    }
  }
  const int board_h = std::max(4, top / 3);
  const Rgb board = jitter(rng, {static_cast<float>(rng.uniform(40, 220)), static_cast<float>(rng.uniform(40, 220)),
                                 static_cast<float>(rng.uniform(40, 220))}, 10);
  cv.rect(0, top - board_h, cv.w, top, board);
  const int clutter = rng.uniform_int(0, cfg.max_clutter);
  for (int i = 0; i < clutter; ++i) {
    const int w = rng.uniform_int(5, 30);
    const int h = rng.uniform_int(3, std::max(3, board_h - 1));
    const int x = rng.uniform_int(0, cv.w - w);
    const int y = rng.uniform_int(0, std::max(0, top - h));
    cv.rect(x, y, x + w, y + h, jitter(rng, {235, 235, 235}, 20));
  }
}

void draw_line(Canvas& cv, double x0, double y0, double x1, double y1, double width, const Rgb& c, int top) {
  const double dx = x1 - x0, dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  const int bx0 = static_cast<int>(std::floor(std::min(x0, x1) - width));
  const int bx1 = static_cast<int>(std::ceil(std::max(x0, x1) + width));
  const int by0 = std::max(top, static_cast<int>(std::floor(std::min(y0, y1) - width)));
  const int by1 = static_cast<int>(std::ceil(std::max(y0, y1) + width));
  for (int y = by0; y <= by1; ++y) {
    for (int x = bx0; x <= bx1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double t = len2 > 0 ? std::clamp(((px - x0) * dx + (py - y0) * dy) / len2, 0.0, 1.0) : 0.0;
      const double d = std::hypot(px - (x0 + t * dx), py - (y0 + t * dy));
      const double a = std::clamp(width / 2 + 0.5 - d, 0.0, 1.0);
      cv.blend(x, y, c, static_cast<float>(a * 0.9));
    }
  }
}

void draw_ring(Canvas& cv, double cx, double cy, double radius, double width, const Rgb& c, int top) {
  const int r = static_cast<int>(radius + width) + 1;
  for (int y = std::max(top, static_cast<int>(cy) - r); y <= static_cast<int>(cy) + r; ++y) {
    for (int x = static_cast<int>(cx) - r; x <= static_cast<int>(cx) + r; ++x) {
      const double d = std::abs(std::hypot(x + 0.5 - cx, y + 0.5 - cy) - radius);
      cv.blend(x, y, c, static_cast<float>(std::clamp(width / 2 + 0.5 - d, 0.0, 1.0) * 0.9));
    }
  }
}

void draw_lines(Canvas& cv, int top, const SynthConfig& cfg, Rng& rng) {
  const int count = rng.uniform_int(0, cfg.max_lines);
  const Rgb white = jitter(rng, {225, 230, 225}, 15);
  for (int i = 0; i < count; ++i) {
    const double width = rng.uniform(1.5, 3.5);
    if (rng.bernoulli(0.2)) {
      draw_ring(cv, rng.uniform(0, cv.w), rng.uniform(top, cv.h), rng.uniform(30, 90), width, white, top);
    } else if (rng.bernoulli(0.5)) {
      const double y = rng.uniform(top + 2, cv.h - 2);
      draw_line(cv, 0, y + rng.uniform(-20, 20), cv.w, y + rng.uniform(-20, 20), width, white, top);
    } else {
      const double x = rng.uniform(0, cv.w);
      draw_line(cv, x + rng.uniform(-40, 40), top, x + rng.uniform(-40, 40), cv.h, width, white, top);
    }
  }
}

// Player silhouette: head, jersey, shorts, legs and white socks. (x, y) is
// the point between the feet.
void draw_player(Canvas& cv, int x, int y, int height, Rng& rng) {
  static const std::array<Rgb, 6> kJerseys = {{{235, 235, 235}, {200, 30, 30}, {30, 60, 190}, {240, 200, 30},
                                              {20, 20, 20}, {120, 40, 140}}};
  const Rgb jersey = jitter(rng, kJerseys[static_cast<std::size_t>(rng.uniform_int(0, 5))], 15);
  const Rgb shorts = jitter(rng, rng.bernoulli(0.5) ? Rgb{230, 230, 230} : Rgb{30, 30, 40}, 15);
  const Rgb skin = jitter(rng, {200, 150, 120}, 30);
  const Rgb sock = jitter(rng, {240, 240, 240}, 10);
  const int w = std::max(6, height * 2 / 7);
  const int head = std::max(3, height / 7);
  const int torso = height * 3 / 8;
  const int shorts_h = height / 7;
  const int legs = height - head - torso - shorts_h;
  const int top = y - height;
  const double hcx = x + 0.5, hcy = top + head / 2.0 + 0.5;
  for (int yy = top; yy < top + head; ++yy) {
    for (int xx = x - head; xx <= x + head; ++xx) {
      const float a = coverage(xx, yy, [&](double px, double py) {
        return std::hypot(px - hcx, py - hcy) <= head / 2.0 + 0.5;
      });
      cv.blend(xx, yy, skin, a);
    }
  }
  cv.rect(x - w / 2, top + head, x + w / 2 + 1, top + head + torso, jersey);
  cv.rect(x - w / 2, top + head + torso, x + w / 2 + 1, top + head + torso + shorts_h, shorts);
  const int leg_w = std::max(2, w / 4);
  const int sock_h = std::max(2, legs / 3);
  for (int side : {-1, 1}) {
    const int lx = x + side * (w / 4) - leg_w / 2;
    cv.rect(lx, y - legs, lx + leg_w, y - sock_h, skin);
    cv.rect(lx, y - sock_h, lx + leg_w, y, sock);
  }
}

struct BallShape {
  int cx, cy;
  double a, b, angle;  // semi-axes along / across the blur direction
};

void draw_ball(Canvas& cv, const BallShape& s, Rng& rng) {
  const float level = static_cast<float>(rng.uniform(185, 250));
  const bool blurred = s.a > s.b * 1.05;
  const double ca = std::cos(s.angle), sa = std::sin(s.angle);
  const double ox = s.cx + 0.5, oy = s.cy + 0.5;
  // A few darker panels on sharp balls.
  struct Patch {
    double u, v, r;
  };
  std::vector<Patch> patches;
  if (!blurred) {
    const int n = rng.uniform_int(0, 3);
    for (int i = 0; i < n; ++i) {
      const double ang = rng.uniform(0, 6.283185307179586);
      const double rad = rng.uniform(0, 0.55) * s.b;
      patches.push_back({rad * std::cos(ang), rad * std::sin(ang), s.b * rng.uniform(0.15, 0.3)});
    }
  }
  const float panel = static_cast<float>(rng.uniform(70, 130));
  const int ext = static_cast<int>(std::ceil(s.a)) + 1;
  for (int y = s.cy - ext; y <= s.cy + ext; ++y) {
    for (int x = s.cx - ext; x <= s.cx + ext; ++x) {
      auto local = [&](double px, double py) {
        const double dx = px - ox, dy = py - oy;
        return std::pair{dx * ca + dy * sa, -dx * sa + dy * ca};
      };
      const float cov = coverage(x, y, [&](double px, double py) {
        const auto [u, v] = local(px, py);
        return (u * u) / (s.a * s.a) + (v * v) / (s.b * s.b) <= 1.0;
      });
      if (cov <= 0.0f) continue;
      const auto [u, v] = local(x + 0.5, y + 0.5);
      // Sphere shading: light from the upper left.
      const double shade = 1.0 - 0.22 * std::clamp((u * 0.5 + v * 0.7 + (x - ox) * 0.2 + (y - oy) * 0.3) / s.b, -1.0, 1.0);
      float value = static_cast<float>(std::clamp(level * shade, 0.0, 255.0));
      for (const Patch& p : patches) {
        if (std::hypot(u - p.u, v - p.v) <= p.r) value = panel;
      }
      cv.blend(x, y, {value, value, value * 0.98f}, cov * (blurred ? 0.85f : 1.0f));
    }
  }
}

}  // namespace

AnnotatedFrame synthesize_frame(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  Canvas cv(cfg.width, cfg.height);
  const int top = static_cast<int>(cfg.height * rng.uniform(0.08, 0.2));
  draw_pitch(cv, top, rng);
  draw_off_pitch(cv, top, cfg, rng);
  draw_lines(cv, top, cfg, rng);

  int count = cfg.fixed_ball_count;
  if (count < 0) {
    const double u = rng.uniform();
    count = u < cfg.p_no_ball ? 0 : (u < cfg.p_no_ball + cfg.p_one_ball ? 1 : 2);
  }
  std::vector<BallShape> balls;
  for (int attempt = 0; static_cast<int>(balls.size()) < count && attempt < 100; ++attempt) {
    BallShape s{};
    const double r = rng.uniform_int(cfg.radius_min, cfg.radius_max);
    const double stretch = rng.bernoulli(cfg.motion_blur_probability) ? rng.uniform(1.2, 1.8) : 1.0;
    s.a = r * stretch;
    s.b = r;
    s.angle = rng.uniform(0, 3.141592653589793);
    const int ext = static_cast<int>(std::ceil(s.a)) + 1;
    s.cx = rng.uniform_int(ext, cfg.width - 1 - ext);
    s.cy = rng.uniform_int(top + ext, cfg.height - 1 - ext);
    const bool clear = std::all_of(balls.begin(), balls.end(), [&](const BallShape& o) {
      return std::hypot(s.cx - o.cx, s.cy - o.cy) >= 48.0;
    });
    if (clear) balls.push_back(s);
  }

  const int players = rng.uniform_int(0, cfg.max_players);
  for (int i = 0; i < players; ++i) {
    const int h = rng.uniform_int(40, 72);
    draw_player(cv, rng.uniform_int(4, cfg.width - 5), rng.uniform_int(top + h / 2, cfg.height - 1), h, rng);
  }
  // Players in contact with a ball are drawn behind it.
  for (const BallShape& s : balls) {
    if (rng.bernoulli(cfg.player_overlap_probability)) {
      const int h = rng.uniform_int(40, 72);
      const int side = rng.bernoulli(0.5) ? 1 : -1;
      draw_player(cv, s.cx + side * static_cast<int>(s.b * rng.uniform(0.6, 1.2)), s.cy + static_cast<int>(s.b), h,
                  rng);
    }
  }

  AnnotatedFrame frame;
  for (const BallShape& s : balls) {
    draw_ball(cv, s, rng);
    frame.balls.push_back({s.cx, s.cy});
  }

  frame.image = Image(cfg.width, cfg.height);
  for (std::size_t i = 0; i < cv.px.size(); ++i) {
    const double v = cv.px[i] + rng.normal() * 2.0;
    frame.image.rgb[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return frame;
}

}  // namespace deepball
