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

Rng rng_for(std::uint64_t seed) { return Rng(derive_seed({seed, 0x7e57})); }

}  // namespace

TEST_CASE("tensor basics") {
  Tensor4 t(2, 3, 4, 5, 1.5f);
  CHECK(t.size() == 120);
  CHECK(t.index(1, 2, 3, 4) == 119);
  t.at(1, 0, 0, 0) = 7.0f;
  CHECK(t.slice_batch(1, 1).at(0, 0, 0, 0) == 7.0f);
  CHECK_THROWS_AS(Tensor4(Shape4{0, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(Tensor4(Shape4{1, 1, 2, 2}, std::vector<float>(3)), ShapeError);
  CHECK_THROWS_AS((void)t.slice_batch(1, 2), ShapeError);
}

TEST_CASE("conv2d matches direct convolution") {
  Rng rng = rng_for(1);
  struct Case {
    int n, c, h, w, out, k, stride;
  };
  for (const Case& cs : {Case{1, 3, 9, 11, 4, 3, 1}, Case{2, 2, 15, 8, 3, 7, 2}, Case{1, 5, 6, 6, 2, 1, 1},
                         Case{1, 4, 13, 17, 6, 3, 2}, Case{2, 56, 10, 12, 2, 3, 1}}) {
    ConvLayerParams p = make_conv(cs.c, cs.out, cs.k, cs.stride);
    oracle::fill_uniform(p.weights.values(), rng);
    oracle::fill_uniform(p.bias, rng);
    const Tensor4 x = oracle::random_tensor({cs.n, cs.c, cs.h, cs.w}, rng);
    const Tensor4 y = conv2d(x, p);
    const Tensor4 ref = oracle::conv2d(x, p.weights, p.bias, cs.stride, p.effective_pad_h(), p.effective_pad_w(),
                                       p.output_h(cs.h), p.output_w(cs.w));
    REQUIRE(y.shape() == ref.shape());
    CHECK(y.h() == (cs.h + cs.stride - 1) / cs.stride);
    double worst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(static_cast<double>(y[i]) - ref[i]));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("conv2d explicit padding and errors") {
  Rng rng = rng_for(2);
  ConvLayerParams p = make_conv(2, 3, 3, 1);
  p.padding = PaddingMode::explicit_pad;
  p.pad_h = 0;
  p.pad_w = 2;
  oracle::fill_uniform(p.weights.values(), rng);
  const Tensor4 x = oracle::random_tensor({1, 2, 7, 5}, rng);
  const Tensor4 y = conv2d(x, p);
  CHECK(y.shape() == Shape4{1, 3, 5, 7});
  const Tensor4 ref = oracle::conv2d(x, p.weights, p.bias, 1, 0, 2, 5, 7);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-5));

  CHECK_THROWS_AS(conv2d(oracle::random_tensor({1, 3, 7, 5}, rng), p), ShapeError);
  CHECK_THROWS_AS(make_conv(2, 3, 4, 1), ParameterError);
  CHECK_THROWS_AS(make_conv(2, 3, 3, 0), ParameterError);
}

TEST_CASE("conv2d backward agrees with finite differences") {
  Rng rng = rng_for(3);
  for (int stride : {1, 2}) {
    ConvLayerParams p = make_conv(3, 4, 3, stride);
    oracle::fill_uniform(p.weights.values(), rng);
    oracle::fill_uniform(p.bias, rng);
    Tensor4 x = oracle::random_tensor({2, 3, 7, 6}, rng);
    const Tensor4 r = oracle::random_tensor(conv2d(x, p).shape(), rng);
    const ConvGrads g = conv2d_backward(x, p, r);
    auto loss = [&] { return oracle::probe(conv2d(x, p), r); };
    auto e_in = oracle::finite_difference(x.values(), g.input.values(), oracle::sample_entries(x.size(), 60, rng),
                                          loss, 0.1);
    auto e_w = oracle::finite_difference(p.weights.values(), g.weights.values(),
                                         oracle::sample_entries(p.weights.size(), 60, rng), loss, 0.1);
    auto e_b = oracle::finite_difference(p.bias, g.bias, oracle::sample_entries(p.bias.size(), 4, rng), loss, 0.1);
    CHECK(e_in.max_rel_error < 1e-3);
    CHECK(e_w.max_rel_error < 1e-3);
    CHECK(e_b.max_rel_error < 1e-3);
  }
}

TEST_CASE("maxpool floors odd sizes and picks the first maximum") {
  Tensor4 x(1, 1, 3, 5);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i % 4);
  const MaxPoolResult r = maxpool2x2(x);
  CHECK(r.output.shape() == Shape4{1, 1, 1, 2});
  CHECK(r.output[0] == 2.0f);
  CHECK(r.argmax[0] == 6);

  Tensor4 ties(1, 1, 2, 2, 1.0f);
  CHECK(maxpool2x2(ties).argmax[0] == 0);
  CHECK_THROWS_AS(maxpool2x2(Tensor4(1, 1, 1, 4)), ShapeError);
}

TEST_CASE("maxpool backward routes to the argmax") {
  Rng rng = rng_for(4);
  Tensor4 x(1, 2, 6, 7);
  // Distinct values spaced well beyond the probe step.
  std::vector<float> vals(x.size());
  std::iota(vals.begin(), vals.end(), 0.0f);
  for (std::size_t i = vals.size(); i > 1; --i) {
    std::swap(vals[i - 1], vals[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)))]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = vals[i] * 0.1f;
  const MaxPoolResult pooled = maxpool2x2(x);
  const Tensor4 r = oracle::random_tensor(pooled.output.shape(), rng);
  const Tensor4 g = maxpool2x2_backward(x.shape(), pooled, r);
  auto loss = [&] { return oracle::probe(maxpool2x2(x).output, r); };
  std::vector<std::size_t> all(x.size());
  std::iota(all.begin(), all.end(), 0);
  CHECK(oracle::finite_difference(x.values(), g.values(), all, loss, 1e-2).max_rel_error < 1e-3);
}

TEST_CASE("relu and its backward") {
  Rng rng = rng_for(5);
  Tensor4 x = oracle::random_tensor({2, 3, 4, 4}, rng);
  const Tensor4 y = relu(x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == std::max(0.0f, x[i]));
  const Tensor4 r = oracle::random_tensor(x.shape(), rng);
  const Tensor4 g = relu_backward(x, r);
  std::vector<std::size_t> away;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > 0.05f) away.push_back(i);
  }
  auto loss = [&] { return oracle::probe(relu(x), r); };
  CHECK(oracle::finite_difference(x.values(), g.values(), away, loss, 1e-2).max_rel_error < 1e-3);
  Tensor4 z = x;
  relu_inplace(z);
  CHECK(z == y);
}

TEST_CASE("batchnorm train mode normalizes and tracks statistics") {
  Rng rng = rng_for(6);
  Tensor4 x = oracle::random_tensor({3, 2, 4, 5}, rng, -2.0, 5.0);
  BatchNormParams p = BatchNormParams::identity(2);
  BatchNormCache cache;
  const Tensor4 y = batchnorm(x, p, Mode::train, &cache);
  for (int c = 0; c < 2; ++c) {
    double s = 0.0, s2 = 0.0, xs = 0.0, xs2 = 0.0;
    const double m = 60.0;
    for (int n = 0; n < 3; ++n) {
      for (int i = 0; i < 20; ++i) {
        const double v = y.plane(n, c)[i];
        const double u = x.plane(n, c)[i];
        s += v, s2 += v * v, xs += u, xs2 += u * u;
      }
    }
    CHECK(s / m == doctest::Approx(0.0).epsilon(1e-6).scale(1.0));
    CHECK(s2 / m == doctest::Approx(1.0).epsilon(1e-3));
    const double mean = xs / m;
    const double var = xs2 / m - mean * mean;
    CHECK(p.running_mean[static_cast<std::size_t>(c)] == doctest::Approx(0.1 * mean).epsilon(1e-5));
    CHECK(p.running_var[static_cast<std::size_t>(c)] == doctest::Approx(0.9 + 0.1 * var * m / (m - 1)).epsilon(1e-5));
  }
  // Infer mode reads running statistics only.
  const BatchNormParams before = p;
  const Tensor4 yi = batchnorm(x, p, Mode::infer);
  CHECK(p.running_mean == before.running_mean);
  CHECK(yi == batchnorm_infer(x, p));
  const float expect = (x[0] - p.running_mean[0]) / std::sqrt(p.running_var[0] + p.epsilon);
  CHECK(yi[0] == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("batchnorm backward agrees with finite differences") {
  Rng rng = rng_for(7);
  Tensor4 x = oracle::random_tensor({2, 3, 3, 4}, rng, -1.0, 2.0);
  BatchNormParams p = BatchNormParams::identity(3);
  oracle::fill_uniform(p.scale, rng, 0.5, 1.5);
  oracle::fill_uniform(p.shift, rng);
  BatchNormCache cache;
  BatchNormParams scratch = p;
  const Tensor4 r = oracle::random_tensor(x.shape(), rng);
  batchnorm(x, scratch, Mode::train, &cache);
  const BatchNormGrads g = batchnorm_backward(x, p, cache, r);
  auto loss = [&] {
    BatchNormParams q = p;
    return oracle::probe(batchnorm(x, q, Mode::train), r);
  };
  std::vector<std::size_t> all(x.size());
  std::iota(all.begin(), all.end(), 0);
  CHECK(oracle::finite_difference(x.values(), g.input.values(), all, loss, 1e-2).max_rel_error < 1e-3);
  CHECK(oracle::finite_difference(p.scale, g.scale, {0, 1, 2}, loss, 1e-2).max_rel_error < 1e-3);
  CHECK(oracle::finite_difference(p.shift, g.shift, {0, 1, 2}, loss, 1e-2).max_rel_error < 1e-3);
}

TEST_CASE("nearest upsampling and its adjoint") {
  Tensor4 x(1, 1, 2, 3);
  for (std::size_t i = 0; i < 6; ++i) x[i] = static_cast<float>(i);
  const Tensor4 y = upsample_nearest(x, 5, 7);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 7; ++c) CHECK(y.at(0, 0, r, c) == x.at(0, 0, r * 2 / 5, c * 3 / 7));
  }
  Rng rng = rng_for(8);
  const Tensor4 g = oracle::random_tensor(y.shape(), rng);
  const Tensor4 back = upsample_nearest_backward(x.shape(), g);
  // <up(x), g> == <x, up^T(g)> for every x.
  const Tensor4 probe_x = oracle::random_tensor(x.shape(), rng);
  CHECK(oracle::probe(upsample_nearest(probe_x, 5, 7), g) == doctest::Approx(oracle::probe(probe_x, back)));
  CHECK_THROWS_AS(upsample_nearest(x, 1, 7), std::invalid_argument);
}

TEST_CASE("concat and split are inverse") {
  Rng rng = rng_for(9);
  const Tensor4 a = oracle::random_tensor({2, 1, 3, 3}, rng);
  const Tensor4 b = oracle::random_tensor({2, 4, 3, 3}, rng);
  const Tensor4 cat = concat_channels(std::vector<const Tensor4*>{&a, &b});
  CHECK(cat.shape() == Shape4{2, 5, 3, 3});
  CHECK(cat.at(1, 2, 2, 1) == b.at(1, 1, 2, 1));
  const auto parts = split_channels(cat, {1, 4});
  CHECK(parts[0] == a);
  CHECK(parts[1] == b);
  const Tensor4 bad = oracle::random_tensor({2, 1, 3, 4}, rng);
  try {
    concat_channels(std::vector<const Tensor4*>{&a, &bad});
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("softmax sums to one and is stable for large logits") {
  Rng rng = rng_for(10);
  Tensor4 x = oracle::random_tensor({2, 2, 5, 5}, rng, -50.0, 50.0);
  x[0] = 1000.0f;
  const Tensor4 p = softmax_channels(x);
  for (int n = 0; n < 2; ++n) {
    for (int i = 0; i < 25; ++i) {
      CHECK(std::isfinite(p.plane(n, 0)[i]));
      CHECK(static_cast<double>(p.plane(n, 0)[i]) + p.plane(n, 1)[i] == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}
