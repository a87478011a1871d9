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

void AugmentConfig::validate() const {
  if (brightness < 0 || contrast < 0 || saturation < 0 || brightness >= 1 || contrast >= 1 || saturation >= 1) {
    throw ParameterError("jitter factors must lie in [0, 1)");
  }
  if (hue < 0 || hue > 0.5) throw ParameterError("hue jitter must lie in [0, 0.5]");
  if (flip_probability < 0 || flip_probability > 1) throw ParameterError("flip probability must lie in [0, 1]");
  if (random_scale && !(scale_min > 0 && scale_min <= scale_max)) {
    throw ParameterError("scale range must be positive and ordered");
  }
  if (crop_h < 0 || crop_w < 0) throw ParameterError("crop size must be non-negative");
}

namespace {

using Rgb = std::array<float, 3>;

Rgb hue_rotate(Rgb c, float shift) {
  const float r = c[0] / 255.0f, g = c[1] / 255.0f, b = c[2] / 255.0f;
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float d = mx - mn;
  if (d <= 0.0f) return c;
  float h;
  if (mx == r) {
    h = std::fmod((g - b) / d, 6.0f);
  } else if (mx == g) {
    h = (b - r) / d + 2.0f;
  } else {
    h = (r - g) / d + 4.0f;
  }
  h = h / 6.0f + shift;
  h -= std::floor(h);
  const float s = d / mx;
  const float v = mx;
  const float hh = h * 6.0f;
  const int sector = static_cast<int>(hh) % 6;
  const float f = hh - std::floor(hh);
  const float p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  Rgb out;
  switch (sector) {
    case 0: out = {v, t, p}; break;
    case 1: out = {q, v, p}; break;
    case 2: out = {p, v, t}; break;
    case 3: out = {p, q, v}; break;
    case 4: out = {t, p, v}; break;
    default: out = {v, p, q}; break;
  }
  for (float& x : out) x *= 255.0f;
  return out;
}

inline std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void color_jitter(Image& img, const AugmentConfig& cfg, Rng& rng) {
  const auto brightness = static_cast<float>(rng.uniform(1 - cfg.brightness, 1 + cfg.brightness));
  const auto contrast = static_cast<float>(rng.uniform(1 - cfg.contrast, 1 + cfg.contrast));
  const auto saturation = static_cast<float>(rng.uniform(1 - cfg.saturation, 1 + cfg.saturation));
  const auto hue = static_cast<float>(rng.uniform(-cfg.hue, cfg.hue));
  const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
  std::vector<Rgb> px(pixels);
  double gray_sum = 0.0;
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int c = 0; c < 3; ++c) px[i][c] = std::clamp(img.rgb[i * 3 + c] * brightness, 0.0f, 255.0f);
    gray_sum += 0.299 * px[i][0] + 0.587 * px[i][1] + 0.114 * px[i][2];
  }
  const auto mean_gray = static_cast<float>(gray_sum / static_cast<double>(pixels));
  for (std::size_t i = 0; i < pixels; ++i) {
    Rgb& p = px[i];
    for (float& v : p) v = std::clamp((v - mean_gray) * contrast + mean_gray, 0.0f, 255.0f);
    const float g = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
    for (float& v : p) v = std::clamp((v - g) * saturation + g, 0.0f, 255.0f);
    if (hue != 0.0f) p = hue_rotate(p, hue);
    for (int c = 0; c < 3; ++c) img.rgb[i * 3 + c] = quantize(p[c]);
  }
}

void flip_horizontal(AnnotatedFrame& f) {
  Image& img = f.image;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width / 2; ++x) {
      std::swap_ranges(img.pixel(x, y), img.pixel(x, y) + 3, img.pixel(img.width - 1 - x, y));
    }
  }
  for (BallPosition& b : f.balls) b.x = img.width - 1 - b.x;
}

// Bilinear resample with pixel-center alignment.
Image resize_bilinear(const Image& src, int w, int h) {
  Image out(w, h);
  const double sx = static_cast<double>(src.width) / w;
  const double sy = static_cast<double>(src.height) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = src.pixel(x0, y0)[c] * (1 - tx) + src.pixel(x1, y0)[c] * tx;
        const double bot = src.pixel(x0, y1)[c] * (1 - tx) + src.pixel(x1, y1)[c] * tx;
        out.pixel(x, y)[c] = quantize(static_cast<float>(top * (1 - ty) + bot * ty));
      }
    }
  }
  return out;
}

int scale_coordinate(int v, int from, int to) {
  const double s = static_cast<double>(to) / from;
  return std::clamp(static_cast<int>(std::lround((v + 0.5) * s - 0.5)), 0, to - 1);
}

}  // namespace

AnnotatedFrame augment(const AnnotatedFrame& frame, const AugmentConfig& cfg, Rng& rng, AugmentRecord* record) {
  cfg.validate();
  frame.validate();
  AnnotatedFrame out = frame;
  AugmentRecord rec;
  rec.source_w = frame.image.width;
  rec.source_h = frame.image.height;

  if (cfg.color_jitter) color_jitter(out.image, cfg, rng);

  if (cfg.flip_probability > 0 && rng.bernoulli(cfg.flip_probability)) {
    flip_horizontal(out);
    rec.flipped = true;
  }

  rec.scaled_w = out.image.width;
  rec.scaled_h = out.image.height;
  if (cfg.random_scale) {
    const double s = rng.uniform(cfg.scale_min, cfg.scale_max);
    const int w = std::max(1, static_cast<int>(std::lround(out.image.width * s)));
    const int h = std::max(1, static_cast<int>(std::lround(out.image.height * s)));
    if (w != out.image.width || h != out.image.height) {
      for (BallPosition& b : out.balls) {
        b.x = scale_coordinate(b.x, out.image.width, w);
        b.y = scale_coordinate(b.y, out.image.height, h);
      }
      out.image = resize_bilinear(out.image, w, h);
    }
    rec.scaled_w = w;
    rec.scaled_h = h;
  }

  if (cfg.crop_h > 0 && cfg.crop_w > 0) {
    if (cfg.crop_h > out.image.height || cfg.crop_w > out.image.width) {
      throw ParameterError("augment: crop " + std::to_string(cfg.crop_w) + "x" + std::to_string(cfg.crop_h) +
                           " does not fit the scaled " + std::to_string(out.image.width) + "x" +
                           std::to_string(out.image.height) + " frame " + frame.source_id);
    }
    rec.crop_x = rng.uniform_int(0, out.image.width - cfg.crop_w);
    rec.crop_y = rng.uniform_int(0, out.image.height - cfg.crop_h);
    Image cropped(cfg.crop_w, cfg.crop_h);
    for (int y = 0; y < cfg.crop_h; ++y) {
      std::copy_n(out.image.pixel(rec.crop_x, rec.crop_y + y), static_cast<std::size_t>(cfg.crop_w) * 3,
                  cropped.pixel(0, y));
    }
    out.image = std::move(cropped);
    std::vector<BallPosition> kept;
    for (const BallPosition& b : out.balls) {
      const BallPosition moved{b.x - rec.crop_x, b.y - rec.crop_y};
      if (moved.x >= 0 && moved.y >= 0 && moved.x < cfg.crop_w && moved.y < cfg.crop_h) kept.push_back(moved);
    }
    out.balls = std::move(kept);
  }
  if (record != nullptr) *record = rec;
  return out;
}

BallPosition invert_augment_point(const AugmentRecord& record, int x, int y) {
  const double sx = (x + record.crop_x + 0.5) * record.source_w / record.scaled_w - 0.5;
  const double sy = (y + record.crop_y + 0.5) * record.source_h / record.scaled_h - 0.5;
  int bx = static_cast<int>(std::lround(sx));
  const int by = static_cast<int>(std::lround(sy));
  if (record.flipped) bx = record.source_w - 1 - bx;
  return {bx, by};
}

}  // namespace deepball
