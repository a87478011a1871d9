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

// Independent reference implementations used by the unit and acceptance
// tests. They favour obviousness over speed and share no code with the
// library beyond its data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "deepball/detector.hpp"
#include "deepball/evalkit.hpp"
#include "deepball/loss.hpp"
#include "deepball/ops.hpp"
#include "deepball/random.hpp"

namespace oracle {

using deepball::BallPosition;
using deepball::Tensor4;

inline void fill_uniform(std::span<float> v, deepball::Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
}

inline Tensor4 random_tensor(deepball::Shape4 s, deepball::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor4 t(s);
  fill_uniform(t.values(), rng, lo, hi);
  return t;
}

/// Direct convolution with zero padding, double accumulation.
inline Tensor4 conv2d(const Tensor4& in, const Tensor4& w, const std::vector<float>& bias, int stride, int pad_h,
                      int pad_w, int out_h, int out_w) {
  Tensor4 out(in.n(), w.n(), out_h, out_w);
  for (int n = 0; n < in.n(); ++n) {
    for (int o = 0; o < w.n(); ++o) {
      for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
          double acc = bias[static_cast<std::size_t>(o)];
          for (int c = 0; c < in.c(); ++c) {
            for (int ky = 0; ky < w.h(); ++ky) {
              for (int kx = 0; kx < w.w(); ++kx) {
                const int iy = y * stride - pad_h + ky;
                const int ix = x * stride - pad_w + kx;
                if (iy < 0 || ix < 0 || iy >= in.h() || ix >= in.w()) continue;
                acc += static_cast<double>(in.at(n, c, iy, ix)) * w.at(o, c, ky, kx);
              }
            }
          }
          out.at(n, o, y, x) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

/// Relative error with a floor proportional to the largest analytic value,
/// so entries that are zero up to rounding do not dominate.
struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

inline double rel_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Central differences of `loss` with respect to the selected entries of
/// `x`. `valid` may reject a perturbation that crosses a kink.
inline GradCheck finite_difference(std::span<float> x, std::span<const float> analytic,
                                   const std::vector<std::size_t>& entries, const std::function<double()>& loss,
                                   double h, const std::function<bool()>& valid = {}, double floor = 0.0) {
  GradCheck r;
  if (floor <= 0.0) {
    double amax = 0.0;
    for (std::size_t i : entries) amax = std::max(amax, std::abs(static_cast<double>(analytic[i])));
    floor = std::max(1e-3 * amax, 1e-6);
  }
  for (std::size_t i : entries) {
    const float orig = x[i];
    x[i] = static_cast<float>(orig + h);
    const double hp = static_cast<double>(x[i]) - orig;
    const double lp = loss();
    const bool ok_p = !valid || valid();
    x[i] = static_cast<float>(orig - h);
    const double hm = orig - static_cast<double>(x[i]);
    const double lm = loss();
    const bool ok_m = !valid || valid();
    x[i] = orig;
    if (!ok_p || !ok_m) {
      ++r.skipped;
      continue;
    }
    const double numeric = (lp - lm) / (hp + hm);
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic[i], numeric, floor));
    ++r.checked;
  }
  return r;
}

inline std::vector<std::size_t> sample_entries(std::size_t n, std::size_t count, deepball::Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n <= count) return all;
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(all[i], all[i + static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n - i - 1)))]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

/// Weighted sum used as a scalar probe loss for single-kernel checks.
inline double probe(const Tensor4& y, const Tensor4& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * weights[i];
  return s;
}

/// Brute-force negative selection: full sort by -log(c_bg), ties to the
/// lower index.
inline std::vector<int> mine(const Tensor4& conf, const deepball::TargetSet& t, int image) {
  std::vector<std::pair<double, int>> scored;
  const int cells = t.map_h * t.map_w;
  for (int i = 0; i < cells; ++i) {
    if (std::binary_search(t.positives.begin(), t.positives.end(), i)) continue;
    const double bg = conf.at(image, 0, i / t.map_w, i % t.map_w);
    scored.emplace_back(-std::log(bg), i);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t want = t.positives.empty() ? 32 : 3 * t.positives.size();
  std::vector<int> out;
  for (std::size_t i = 0; i < std::min(want, scored.size()); ++i) out.push_back(scored[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

/// Cross entropy in long double straight from the definition.
inline long double loss(const Tensor4& logits, const std::vector<deepball::TargetSet>& targets,
                        const std::vector<std::vector<int>>& negatives) {
  long double sum = 0.0L;
  std::size_t n = 0;
  auto term = [&](int image, int flat, int label, int w) {
    const long double z0 = logits.at(image, 0, flat / w, flat % w);
    const long double z1 = logits.at(image, 1, flat / w, flat % w);
    const long double p = std::exp(label == 1 ? z1 : z0) / (std::exp(z0) + std::exp(z1));
    sum -= std::log(p);
    ++n;
  };
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (int p : targets[i].positives) term(static_cast<int>(i), p, 1, targets[i].map_w);
    for (int q : negatives[i]) term(static_cast<int>(i), q, 0, targets[i].map_w);
  }
  return n == 0 ? 0.0L : sum / static_cast<long double>(n);
}

struct Peak {
  int x, y;
  float value;
};

/// Iterative suppression with an explicit mask.
inline std::vector<Peak> peaks(const std::vector<float>& map, int h, int w, double theta, int max_det, int r) {
  std::vector<bool> dead(map.size(), false);
  std::vector<Peak> out;
  while (static_cast<int>(out.size()) < max_det) {
    int best = -1;
    for (int i = 0; i < h * w; ++i) {
      if (dead[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || map[static_cast<std::size_t>(i)] > map[static_cast<std::size_t>(best)]) best = i;
    }
    if (best < 0 || map[static_cast<std::size_t>(best)] < theta) break;
    const int by = best / w, bx = best % w;
    out.push_back({bx, by, map[static_cast<std::size_t>(best)]});
    for (int i = 0; i < h * w; ++i) {
      if (std::max(std::abs(i / w - by), std::abs(i % w - bx)) <= r) dead[static_cast<std::size_t>(i)] = true;
    }
  }
  return out;
}

/// Precision/recall enumeration for a ranked list of TP/FP flags, then the
/// 11-point mean with p(r) = max precision at recall >= r.
inline double ap_from_flags(const std::vector<bool>& tp, std::size_t total_gt) {
  std::vector<double> prec, rec;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    hits += tp[i];
    prec.push_back(static_cast<double>(hits) / static_cast<double>(i + 1));
    rec.push_back(static_cast<double>(hits) / static_cast<double>(total_gt));
  }
  double sum = 0.0;
  for (int k = 0; k <= 10; ++k) {
    double best = 0.0;
    for (std::size_t i = 0; i < prec.size(); ++i) {
      if (rec[i] * 10.0 >= k - 1e-9) best = std::max(best, prec[i]);
    }
    sum += best;
  }
  return sum / 11.0;
}

/// Single-ball accuracy per frame, decoding by a plain argmax scan.
inline double accuracy(const std::vector<deepball::FrameResult>& frames, double theta, double tol) {
  std::size_t correct = 0;
  for (const auto& f : frames) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.ball_map.size(); ++i) {
      if (f.ball_map[i] > f.ball_map[best]) best = i;
    }
    const bool detected = f.ball_map[best] >= theta;
    if (f.balls.empty()) {
      correct += !detected;
      continue;
    }
    if (!detected) continue;
    const int cx = static_cast<int>(best) % f.map_w, cy = static_cast<int>(best) / f.map_w;
    const int px = std::clamp(static_cast<int>(std::floor(4 * (cx - 0.5))), 0, f.image_w - 1);
    const int py = std::clamp(static_cast<int>(std::floor(4 * (cy - 0.5))), 0, f.image_h - 1);
    bool hit = false;
    for (const auto& b : f.balls) hit |= std::hypot(px - b.x, py - b.y) <= tol;
    correct += hit;
  }
  return static_cast<double>(correct) / static_cast<double>(frames.size());
}

/// Scalar Adam on plain doubles.
struct ScalarAdam {
  std::vector<double> m, v;
  int t = 0;
  void step(std::vector<double>& p, const std::vector<double>& g, double lr) {
    if (m.empty()) m.assign(p.size(), 0.0), v.assign(p.size(), 0.0);
    ++t;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      p[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
};

}  // namespace oracle
