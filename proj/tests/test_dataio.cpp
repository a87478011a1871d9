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

#include <filesystem>
#include <fstream>

#include "deepball/dataio.hpp"
#include "oracles.hpp"

using namespace deepball;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("deepball_dataio_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Image random_image(int w, int h, Rng& rng) {
  Image img(w, h);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

}  // namespace

TEST_CASE("PNG and PPM round trip") {
  Rng rng(300);
  const fs::path dir = scratch_dir("io");
  const Image img = random_image(67, 41, rng);
  write_png(dir / "a.png", img);
  write_ppm(dir / "a.ppm", img);
  CHECK(read_image(dir / "a.png") == img);
  CHECK(read_image(dir / "a.ppm") == img);

  write_text(dir / "c.ppm", "P6\n# comment\n2 1\n255\nabcdef");
  const Image c = read_image(dir / "c.ppm");
  CHECK(c.width == 2);
  CHECK(c.pixel(1, 0)[2] == 'f');

  write_text(dir / "bad.ppm", "P6\n2 2\n255\nabc");
  CHECK_THROWS_AS(read_image(dir / "bad.ppm"), FormatError);
  write_text(dir / "bad.txt", "hello");
  CHECK_THROWS_AS(read_image(dir / "bad.txt"), FormatError);
  CHECK_THROWS_AS(read_image(dir / "missing.png"), FormatError);
}

TEST_CASE("manifest parsing") {
  Rng rng(301);
  const fs::path dir = scratch_dir("manifest");
  fs::create_directories(dir / "img");
  write_png(dir / "img/f001.png", random_image(64, 64, rng));
  write_png(dir / "img/f002.png", random_image(64, 64, rng));
  write_text(dir / "ok.txt", "img/f001.png 1 41 20\n\nimg/f002.png 0\n");
  const auto frames = load_annotations(dir / "ok.txt");
  REQUIRE(frames.size() == 2);
  CHECK(frames[0].balls == std::vector<BallPosition>{{41, 20}});
  CHECK(frames[0].image_path == dir / "img/f001.png");
  CHECK(frames[1].balls.empty());
  CHECK(load_frame(frames[0]).image.width == 64);
  CHECK(format_manifest_line("img/f001.png", {{41, 20}}) == "img/f001.png 1 41 20");

  write_text(dir / "bad.txt", "img/f001.png 0\nimg/f002.png 0\nimg/f001.png 0\nimg/f002.png 2 1 2\n");
  try {
    load_annotations(dir / "bad.txt");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":4:") != std::string::npos);
  }
  write_text(dir / "extra.txt", "img/f001.png 0 7\n");
  CHECK_THROWS_AS(load_annotations(dir / "extra.txt"), FormatError);
  write_text(dir / "missing.txt", "img/nope.png 0\n");
  try {
    load_annotations(dir / "missing.txt");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("nope.png") != std::string::npos);
  }
  write_text(dir / "outside.txt", "img/f001.png 1 64 3\n");
  CHECK_THROWS_AS(load_frame(load_annotations(dir / "outside.txt")[0]), ParameterError);
}

TEST_CASE("normalization") {
  Image img(2, 1);
  img.pixel(0, 0)[0] = 255;
  img.pixel(0, 0)[1] = 0;
  img.pixel(0, 0)[2] = 128;
  const Tensor4 t = normalize_image(img);
  CHECK(t.shape() == Shape4{1, 3, 1, 2});
  CHECK(t.at(0, 0, 0, 0) == 1.0f);
  CHECK(t.at(0, 1, 0, 0) == -1.0f);
  CHECK(static_cast<double>(t.at(0, 2, 0, 0)) == doctest::Approx((128.0 / 255.0 - 0.5) / 0.5).epsilon(1e-6));
  Image other(3, 1);
  CHECK_THROWS_AS(normalize_batch({&img, &other}), ShapeError);
}

TEST_CASE("flip and scale move balls") {
  Rng rng(302);
  AnnotatedFrame f{random_image(200, 100, rng), {{50, 20}}, "f"};
  AugmentConfig flip;
  flip.color_jitter = false;
  flip.random_scale = false;
  flip.flip_probability = 1.0;
  flip.crop_h = flip.crop_w = 0;
  const AnnotatedFrame flipped = augment(f, flip, rng);
  CHECK(flipped.balls == std::vector<BallPosition>{{149, 20}});
  CHECK(flipped.image.pixel(149, 7)[1] == f.image.pixel(50, 7)[1]);

  AugmentConfig half = flip;
  half.flip_probability = 0.0;
  half.random_scale = true;
  half.scale_min = half.scale_max = 0.5;
  AnnotatedFrame g{random_image(200, 120, rng), {{100, 60}}, "g"};
  const AnnotatedFrame scaled = augment(g, half, rng);
  CHECK(scaled.image.width == 100);
  CHECK(scaled.image.height == 60);
  CHECK(scaled.balls == std::vector<BallPosition>{{50, 30}});
}

TEST_CASE("crop drops balls outside and rejects infeasible sizes") {
  Rng rng(303);
  AugmentConfig c;
  c.color_jitter = false;
  c.random_scale = false;
  c.flip_probability = 0.0;
  c.crop_h = c.crop_w = 64;
  AnnotatedFrame f{random_image(128, 128, rng), {{5, 5}, {120, 120}}, "f"};
  AugmentRecord rec;
  const AnnotatedFrame out = augment(f, c, rng, &rec);
  CHECK(out.image.width == 64);
  for (const auto& b : out.balls) {
    CHECK(b.x >= 0);
    CHECK(b.x < 64);
  }
  CHECK(out.balls.size() < 2);
  CHECK(out.image.pixel(0, 0)[0] == f.image.pixel(rec.crop_x, rec.crop_y)[0]);
  c.crop_h = 200;
  CHECK_THROWS_AS(augment(f, c, rng), ParameterError);
}

TEST_CASE("geometric augmentation inverts within one pixel") {
  Rng rng(304);
  AugmentConfig c;
  c.color_jitter = false;
  c.crop_h = c.crop_w = 96;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = rng.uniform_int(200, 260), h = rng.uniform_int(200, 260);
    AnnotatedFrame f{Image(w, h), {}, "f"};
    for (int i = 0; i < 8; ++i) f.balls.push_back({rng.uniform_int(0, w - 1), rng.uniform_int(0, h - 1)});
    AugmentRecord rec;
    const AnnotatedFrame out = augment(f, c, rng, &rec);
    // Match surviving balls back to their sources by proximity.
    for (const BallPosition& b : out.balls) {
      const BallPosition back = invert_augment_point(rec, b.x, b.y);
      int best = 1 << 30;
      for (const BallPosition& s : f.balls) best = std::min(best, std::max(std::abs(s.x - back.x), std::abs(s.y - back.y)));
      CHECK(best <= 1);
    }
  }
}

TEST_CASE("color jitter leaves geometry alone") {
  Rng rng(305);
  AugmentConfig c;
  c.random_scale = false;
  c.flip_probability = 0.0;
  c.crop_h = c.crop_w = 0;
  AnnotatedFrame f{random_image(80, 70, rng), {{3, 4}, {79, 69}}, "f"};
  const AnnotatedFrame out = augment(f, c, rng);
  CHECK(out.balls == f.balls);
  CHECK(out.image.width == 80);
  CHECK_FALSE(out.image == f.image);
}

TEST_CASE("augmentation is deterministic per seed") {
  Rng base(306);
  AnnotatedFrame f{random_image(256, 256, base), {{100, 100}}, "f"};
  AugmentConfig c;
  c.crop_h = c.crop_w = 128;
  Rng a(7), b(7);
  const AnnotatedFrame x = augment(f, c, a);
  const AnnotatedFrame y = augment(f, c, b);
  CHECK(x.image == y.image);
  CHECK(x.balls == y.balls);
}

TEST_CASE("synthetic frames") {
  SynthConfig cfg;
  Rng a(11), b(11);
  const AnnotatedFrame x = synthesize_frame(cfg, a);
  const AnnotatedFrame y = synthesize_frame(cfg, b);
  CHECK(x.image == y.image);
  CHECK(x.balls == y.balls);

  SynthConfig none = cfg;
  none.fixed_ball_count = 0;
  Rng c(12);
  CHECK(synthesize_frame(none, c).balls.empty());

  Rng d(13);
  std::size_t with_ball = 0;
  for (int i = 0; i < 300; ++i) {
    const AnnotatedFrame f = synthesize_frame(cfg, d);
    f.validate();
    for (const BallPosition& p : f.balls) {
      REQUIRE(p.x >= cfg.radius_min);
      REQUIRE(p.y >= cfg.radius_min);
      REQUIRE(p.x < cfg.width - cfg.radius_min);
      REQUIRE(p.y < cfg.height - cfg.radius_min);
      // The ball center is bright.
      const std::uint8_t* px = f.image.pixel(p.x, p.y);
      CHECK(px[0] + px[1] + px[2] > 3 * 60);
    }
    with_ball += !f.balls.empty();
  }
  CHECK(with_ball > 150);
  CHECK(with_ball < 260);

  SynthConfig bad = cfg;
  bad.radius_max = 80;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = cfg;
  bad.radius_min = 1;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}
