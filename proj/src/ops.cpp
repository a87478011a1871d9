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

#include "deepball/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "gemm.hpp"

namespace deepball {

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

int ConvLayerParams::effective_pad_h() const {
  return padding == PaddingMode::same ? (kernel_h() - 1) / 2 : pad_h;
}

int ConvLayerParams::effective_pad_w() const {
  return padding == PaddingMode::same ? (kernel_w() - 1) / 2 : pad_w;
}

int ConvLayerParams::output_h(int h) const {
  if (padding == PaddingMode::same) return (h + stride - 1) / stride;
  return (h + 2 * pad_h - kernel_h()) / stride + 1;
}

int ConvLayerParams::output_w(int w) const {
  if (padding == PaddingMode::same) return (w + stride - 1) / stride;
  return (w + 2 * pad_w - kernel_w()) / stride + 1;
}

void ConvLayerParams::validate() const {
  if (weights.empty()) throw ShapeError("conv layer has no weights");
  if (kernel_h() % 2 == 0 || kernel_w() % 2 == 0) {
    throw ShapeError("conv kernel must be odd-sized, got " + weights.shape().str());
  }
  if (static_cast<int>(bias.size()) != out_channels()) {
    throw ShapeError("conv bias has " + std::to_string(bias.size()) + " entries for " +
                     std::to_string(out_channels()) + " filters");
  }
  if (stride < 1) throw ParameterError("conv stride must be positive");
  if (padding == PaddingMode::explicit_pad && (pad_h < 0 || pad_w < 0)) {
    throw ParameterError("conv padding must be non-negative");
  }
}

ConvLayerParams make_conv(int in_channels, int out_channels, int kernel, int stride) {
  if (in_channels < 1 || out_channels < 1) throw ParameterError("make_conv: channel counts must be positive");
  if (kernel < 1 || kernel % 2 == 0) {
    throw ParameterError("make_conv: kernel must be odd and positive, got " + std::to_string(kernel));
  }
  if (stride < 1) throw ParameterError("make_conv: stride must be positive, got " + std::to_string(stride));
  ConvLayerParams p;
  p.weights = Tensor4(out_channels, in_channels, kernel, kernel);
  p.bias.assign(static_cast<std::size_t>(out_channels), 0.0f);
  p.stride = stride;
  return p;
}

namespace {

struct ConvGeometry {
  int in_c, in_h, in_w;
  int kh, kw, stride, pad_h, pad_w;
  int out_h, out_w;

  [[nodiscard]] int rows() const { return in_c * kh * kw; }
  [[nodiscard]] int cols() const { return out_h * out_w; }
};

ConvGeometry geometry(const Tensor4& input, const ConvLayerParams& params) {
  params.validate();
  if (input.c() != params.in_channels()) {
    throw ShapeError("conv2d: input " + input.shape().str() + " has " + std::to_string(input.c()) +
                     " channels but kernel " + params.weights.shape().str() + " expects " +
                     std::to_string(params.in_channels()));
  }
  ConvGeometry g{input.c(),
                 input.h(),
                 input.w(),
                 params.kernel_h(),
                 params.kernel_w(),
                 params.stride,
                 params.effective_pad_h(),
                 params.effective_pad_w(),
                 params.output_h(input.h()),
                 params.output_w(input.w())};
  if (g.out_h < 1 || g.out_w < 1) {
    throw ShapeError("conv2d: input " + input.shape().str() + " too small for kernel " +
                     params.weights.shape().str());
  }
  return g;
}

// Valid output range [lo, hi) along one axis for tap offset `tap`.
inline void valid_range(int tap, int pad, int stride, int in_size, int out_size, int& lo, int& hi) {
  // out * stride - pad + tap in [0, in_size)
  const int shift = tap - pad;
  lo = shift >= 0 ? 0 : (-shift + stride - 1) / stride;
  const int last = in_size - 1 - shift;
  hi = last < 0 ? 0 : std::min(out_size, last / stride + 1);
  if (hi < lo) hi = lo;
}

// Output rows [row0, row1) of the column matrix; the chunk has
// (row1 - row0) * out_w columns.
void im2col(const float* in, const ConvGeometry& g, int row0, int row1, float* col) {
  const std::size_t n_cols = static_cast<std::size_t>(row1 - row0) * g.out_w;
  for (int c = 0; c < g.in_c; ++c) {
    const float* plane = in + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kh; ++ky) {
      int y_lo, y_hi;
      valid_range(ky, g.pad_h, g.stride, g.in_h, g.out_h, y_lo, y_hi);
      y_lo = std::clamp(y_lo, row0, row1);
      y_hi = std::clamp(y_hi, y_lo, row1);
      for (int kx = 0; kx < g.kw; ++kx) {
        int x_lo, x_hi;
        valid_range(kx, g.pad_w, g.stride, g.in_w, g.out_w, x_lo, x_hi);
        float* row = col + ((static_cast<std::size_t>(c) * g.kh + ky) * g.kw + kx) * n_cols;
        std::fill(row, row + static_cast<std::size_t>(y_lo - row0) * g.out_w, 0.0f);
        std::fill(row + static_cast<std::size_t>(y_hi - row0) * g.out_w, row + n_cols, 0.0f);
        const int x0 = kx - g.pad_w;
        for (int oy = y_lo; oy < y_hi; ++oy) {
          float* dst = row + static_cast<std::size_t>(oy - row0) * g.out_w;
          const float* src = plane + static_cast<std::size_t>(oy * g.stride - g.pad_h + ky) * g.in_w;
          std::fill(dst, dst + x_lo, 0.0f);
          std::fill(dst + x_hi, dst + g.out_w, 0.0f);
          if (g.stride == 1) {
            std::memcpy(dst + x_lo, src + x_lo + x0, sizeof(float) * static_cast<std::size_t>(x_hi - x_lo));
          } else {
            for (int ox = x_lo; ox < x_hi; ++ox) dst[ox] = src[ox * g.stride + x0];
          }
        }
      }
    }
  }
}

void col2im_acc(const float* col, const ConvGeometry& g, int row0, int row1, float* in) {
  const std::size_t n_cols = static_cast<std::size_t>(row1 - row0) * g.out_w;
  for (int c = 0; c < g.in_c; ++c) {
    float* plane = in + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kh; ++ky) {
      int y_lo, y_hi;
      valid_range(ky, g.pad_h, g.stride, g.in_h, g.out_h, y_lo, y_hi);
      y_lo = std::clamp(y_lo, row0, row1);
      y_hi = std::clamp(y_hi, y_lo, row1);
      for (int kx = 0; kx < g.kw; ++kx) {
        int x_lo, x_hi;
        valid_range(kx, g.pad_w, g.stride, g.in_w, g.out_w, x_lo, x_hi);
        const float* row = col + ((static_cast<std::size_t>(c) * g.kh + ky) * g.kw + kx) * n_cols;
        const int x0 = kx - g.pad_w;
        for (int oy = y_lo; oy < y_hi; ++oy) {
          const float* src = row + static_cast<std::size_t>(oy - row0) * g.out_w;
          float* dst = plane + static_cast<std::size_t>(oy * g.stride - g.pad_h + ky) * g.in_w;
          if (g.stride == 1) {
            for (int ox = x_lo; ox < x_hi; ++ox) dst[ox + x0] += src[ox];
          } else {
            for (int ox = x_lo; ox < x_hi; ++ox) dst[ox * g.stride + x0] += src[ox];
          }
        }
      }
    }
  }
}

// Output rows per im2col chunk, sized so the column buffer stays cache-resident.
int chunk_rows(const ConvGeometry& g) {
  constexpr std::size_t kBudget = 96 * 1024;  // floats
  const std::size_t per_row = static_cast<std::size_t>(g.rows()) * g.out_w;
  return static_cast<int>(std::clamp<std::size_t>(kBudget / std::max<std::size_t>(per_row, 1), 1,
                                                  static_cast<std::size_t>(g.out_h)));
}

}  // namespace

Tensor4 conv2d(const Tensor4& input, const ConvLayerParams& params) {
  const ConvGeometry g = geometry(input, params);
  const int out_c = params.out_channels();
  Tensor4 out(input.n(), out_c, g.out_h, g.out_w);
  const int rows = chunk_rows(g);
  std::vector<float> col(static_cast<std::size_t>(g.rows()) * rows * g.out_w);
  for (int n = 0; n < input.n(); ++n) {
    for (int o = 0; o < out_c; ++o) {
      float* dst = out.plane(n, o);
      std::fill(dst, dst + g.cols(), params.bias[static_cast<std::size_t>(o)]);
    }
    for (int r0 = 0; r0 < g.out_h; r0 += rows) {
      const int r1 = std::min(g.out_h, r0 + rows);
      const int cols = (r1 - r0) * g.out_w;
      im2col(input.plane(n, 0), g, r0, r1, col.data());
      detail::gemm_acc(out_c, cols, g.rows(), params.weights.data(), g.rows(), 1, col.data(), cols,
                       out.plane(n, 0) + static_cast<std::size_t>(r0) * g.out_w, g.cols());
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor4& input, const ConvLayerParams& params, const Tensor4& grad_out,
                          bool compute_input_grad) {
  const ConvGeometry g = geometry(input, params);
  const int out_c = params.out_channels();
  const Shape4 expected{input.n(), out_c, g.out_h, g.out_w};
  if (grad_out.shape() != expected) {
    throw ShapeError("conv2d_backward: grad_out " + grad_out.shape().str() + " does not match output " +
                     expected.str());
  }
  ConvGrads grads;
  grads.weights = Tensor4(params.weights.shape());
  grads.bias.assign(static_cast<std::size_t>(out_c), 0.0f);
  if (compute_input_grad) grads.input = Tensor4(input.shape());

  const int rows = chunk_rows(g);
  std::vector<float> col(static_cast<std::size_t>(g.rows()) * rows * g.out_w);
  std::vector<double> bias_acc(static_cast<std::size_t>(out_c), 0.0);
  for (int n = 0; n < input.n(); ++n) {
    const float* go = grad_out.plane(n, 0);
    for (int o = 0; o < out_c; ++o) {
      const float* row = go + static_cast<std::size_t>(o) * g.cols();
      double s = 0.0;
      for (int i = 0; i < g.cols(); ++i) s += row[i];
      bias_acc[static_cast<std::size_t>(o)] += s;
    }
    for (int r0 = 0; r0 < g.out_h; r0 += rows) {
      const int r1 = std::min(g.out_h, r0 + rows);
      const int cols = (r1 - r0) * g.out_w;
      const float* go_chunk = go + static_cast<std::size_t>(r0) * g.out_w;
      im2col(input.plane(n, 0), g, r0, r1, col.data());
      detail::gemm_acc_nt(out_c, g.rows(), cols, go_chunk, g.cols(), col.data(), cols, grads.weights.data(),
                          g.rows());
      if (compute_input_grad) {
        std::fill(col.begin(), col.end(), 0.0f);
        // col = W^T * grad_out
        detail::gemm_acc(g.rows(), cols, out_c, params.weights.data(), 1, g.rows(), go_chunk, g.cols(),
                         col.data(), cols);
        col2im_acc(col.data(), g, r0, r1, grads.input.plane(n, 0));
      }
    }
  }
  for (int o = 0; o < out_c; ++o) grads.bias[static_cast<std::size_t>(o)] = static_cast<float>(bias_acc[o]);
  return grads;
}

// ---------------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------------

MaxPoolResult maxpool2x2(const Tensor4& input) {
  if (input.h() < 2 || input.w() < 2) {
    throw ShapeError("maxpool2x2: input " + input.shape().str() + " smaller than the 2x2 window");
  }
  const int oh = input.h() / 2;
  const int ow = input.w() / 2;
  MaxPoolResult r{Tensor4(input.n(), input.c(), oh, ow), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (int n = 0; n < input.n(); ++n) {
    for (int c = 0; c < input.c(); ++c) {
      const std::size_t base = input.index(n, c, 0, 0);
      const float* plane = input.data() + base;
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          // Window scanned in flat-index order; strict '>' keeps the lowest index on ties.
          std::size_t best = static_cast<std::size_t>(2 * y) * input.w() + 2 * x;
          float best_v = plane[best];
          const std::size_t cand[3] = {best + 1, best + input.w(), best + input.w() + 1};
          for (std::size_t idx : cand) {
            if (plane[idx] > best_v) {
              best_v = plane[idx];
              best = idx;
            }
          }
          r.output[o] = best_v;
          r.argmax[o] = static_cast<std::int64_t>(base + best);
        }
      }
    }
  }
  return r;
}

Tensor4 maxpool2x2_backward(const Shape4& input_shape, const MaxPoolResult& pooled, const Tensor4& grad_out) {
  require_same_shape(grad_out, pooled.output, "maxpool2x2_backward");
  Tensor4 grad(input_shape);
  if (pooled.argmax.size() != grad_out.size()) throw ShapeError("maxpool2x2_backward: argmax size mismatch");
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad[static_cast<std::size_t>(pooled.argmax[i])] += grad_out[i];
  }
  return grad;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

Tensor4 relu(const Tensor4& input) {
  Tensor4 out = input;
  relu_inplace(out);
  return out;
}

void relu_inplace(Tensor4& t) {
  for (float& v : t.values()) v = v > 0.0f ? v : 0.0f;
}

Tensor4 relu_backward(const Tensor4& input, const Tensor4& grad_out) {
  require_same_shape(input, grad_out, "relu_backward");
  Tensor4 g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > 0.0f ? grad_out[i] : 0.0f;
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

BatchNormParams BatchNormParams::identity(int channels) {
  const auto n = static_cast<std::size_t>(channels);
  BatchNormParams p;
  p.scale.assign(n, 1.0f);
  p.shift.assign(n, 0.0f);
  p.running_mean.assign(n, 0.0f);
  p.running_var.assign(n, 1.0f);
  return p;
}

namespace {
void check_bn(const Tensor4& input, const BatchNormParams& params) {
  const auto c = static_cast<std::size_t>(input.c());
  if (params.scale.size() != c || params.shift.size() != c || params.running_mean.size() != c ||
      params.running_var.size() != c) {
    throw ShapeError("batchnorm: input " + input.shape().str() + " has " + std::to_string(c) +
                     " channels, parameters have " + std::to_string(params.scale.size()));
  }
}
}  // namespace

Tensor4 batchnorm_infer(const Tensor4& input, const BatchNormParams& params) {
  check_bn(input, params);
  Tensor4 out(input.shape());
  const std::size_t plane = input.shape().plane();
  for (int c = 0; c < input.c(); ++c) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(params.running_var[c]) + params.epsilon);
    const auto a = static_cast<float>(params.scale[c] * inv);
    const auto b = static_cast<float>(params.shift[c] - params.scale[c] * params.running_mean[c] * inv);
    for (int n = 0; n < input.n(); ++n) {
      const float* src = input.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = a * src[i] + b;
    }
  }
  return out;
}

Tensor4 batchnorm(const Tensor4& input, BatchNormParams& params, Mode mode, BatchNormCache* cache) {
  if (mode == Mode::infer) return batchnorm_infer(input, params);
  check_bn(input, params);
  const std::size_t plane = input.shape().plane();
  const double count = static_cast<double>(plane) * input.n();
  Tensor4 out(input.shape());
  BatchNormCache local;
  BatchNormCache& bc = cache != nullptr ? *cache : local;
  bc.mean.assign(static_cast<std::size_t>(input.c()), 0.0);
  bc.inv_std.assign(static_cast<std::size_t>(input.c()), 0.0);
  for (int c = 0; c < input.c(); ++c) {
    double sum = 0.0;
    for (int n = 0; n < input.n(); ++n) {
      const float* src = input.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) sum += src[i];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (int n = 0; n < input.n(); ++n) {
      const float* src = input.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = src[i] - mean;
        sq += d * d;
      }
    }
    const double var = sq / count;
    const double inv = 1.0 / std::sqrt(var + params.epsilon);
    bc.mean[c] = mean;
    bc.inv_std[c] = inv;
    const double g = params.scale[c];
    const double b = params.shift[c];
    for (int n = 0; n < input.n(); ++n) {
      const float* src = input.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(g * (src[i] - mean) * inv + b);
    }
    const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
    const double m = params.momentum;
    params.running_mean[c] = static_cast<float>((1.0 - m) * params.running_mean[c] + m * mean);
    params.running_var[c] = static_cast<float>((1.0 - m) * params.running_var[c] + m * unbiased);
  }
  return out;
}

BatchNormGrads batchnorm_backward(const Tensor4& input, const BatchNormParams& params,
                                  const BatchNormCache& cache, const Tensor4& grad_out) {
  check_bn(input, params);
  require_same_shape(input, grad_out, "batchnorm_backward");
  if (cache.mean.size() != static_cast<std::size_t>(input.c())) {
    throw StateError("batchnorm_backward: cache was not produced by a train-mode pass on this input");
  }
  const std::size_t plane = input.shape().plane();
  const double count = static_cast<double>(plane) * input.n();
  BatchNormGrads g{Tensor4(input.shape()), std::vector<float>(static_cast<std::size_t>(input.c())),
                   std::vector<float>(static_cast<std::size_t>(input.c()))};
  for (int c = 0; c < input.c(); ++c) {
    const double mean = cache.mean[c];
    const double inv = cache.inv_std[c];
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < input.n(); ++n) {
      const float* x = input.plane(n, c);
      const float* dy = grad_out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * (x[i] - mean) * inv;
      }
    }
    g.shift[c] = static_cast<float>(sum_dy);
    g.scale[c] = static_cast<float>(sum_dy_xhat);
    const double k = params.scale[c] * inv / count;
    for (int n = 0; n < input.n(); ++n) {
      const float* x = input.plane(n, c);
      const float* dy = grad_out.plane(n, c);
      float* dx = g.input.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        const double xhat = (x[i] - mean) * inv;
        dx[i] = static_cast<float>(k * (count * dy[i] - sum_dy - xhat * sum_dy_xhat));
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Upsampling, concatenation, softmax
// ---------------------------------------------------------------------------

namespace {
std::vector<int> source_index(int target, int source) {
  std::vector<int> idx(static_cast<std::size_t>(target));
  for (int i = 0; i < target; ++i) {
    idx[static_cast<std::size_t>(i)] =
        static_cast<int>(static_cast<long long>(i) * source / target);
  }
  return idx;
}
}  // namespace

Tensor4 upsample_nearest(const Tensor4& input, int target_h, int target_w) {
  if (target_h < input.h() || target_w < input.w()) {
    throw ParameterError("upsample_nearest: target " + std::to_string(target_h) + "x" +
                         std::to_string(target_w) + " smaller than source " + input.shape().str());
  }
  Tensor4 out(input.n(), input.c(), target_h, target_w);
  const auto ys = source_index(target_h, input.h());
  const auto xs = source_index(target_w, input.w());
  for (int n = 0; n < input.n(); ++n) {
    for (int c = 0; c < input.c(); ++c) {
      const float* src = input.plane(n, c);
      float* dst = out.plane(n, c);
      for (int y = 0; y < target_h; ++y) {
        const float* srow = src + static_cast<std::size_t>(ys[y]) * input.w();
        float* drow = dst + static_cast<std::size_t>(y) * target_w;
        for (int x = 0; x < target_w; ++x) drow[x] = srow[xs[x]];
      }
    }
  }
  return out;
}

Tensor4 upsample_nearest_backward(const Shape4& input_shape, const Tensor4& grad_out) {
  if (grad_out.n() != input_shape.n || grad_out.c() != input_shape.c || grad_out.h() < input_shape.h ||
      grad_out.w() < input_shape.w) {
    throw ShapeError("upsample_nearest_backward: gradient " + grad_out.shape().str() +
                     " incompatible with source " + input_shape.str());
  }
  Tensor4 grad(input_shape);
  const auto ys = source_index(grad_out.h(), input_shape.h);
  const auto xs = source_index(grad_out.w(), input_shape.w);
  for (int n = 0; n < input_shape.n; ++n) {
    for (int c = 0; c < input_shape.c; ++c) {
      const float* src = grad_out.plane(n, c);
      float* dst = grad.plane(n, c);
      for (int y = 0; y < grad_out.h(); ++y) {
        const float* srow = src + static_cast<std::size_t>(y) * grad_out.w();
        float* drow = dst + static_cast<std::size_t>(ys[y]) * input_shape.w;
        for (int x = 0; x < grad_out.w(); ++x) drow[xs[x]] += srow[x];
      }
    }
  }
  return grad;
}

Tensor4 concat_channels(const std::vector<const Tensor4*>& inputs) {
  if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape4 ref = inputs.front()->shape();
  int channels = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Shape4& s = inputs[i]->shape();
    if (s.n != ref.n || s.h != ref.h || s.w != ref.w) {
      throw ShapeError("concat_channels: input " + std::to_string(i) + " has shape " + s.str() +
                       ", expected batch/spatial dims of " + ref.str());
    }
    channels += s.c;
  }
  Tensor4 out(ref.n, channels, ref.h, ref.w);
  const std::size_t plane = ref.plane();
  for (int n = 0; n < ref.n; ++n) {
    int c0 = 0;
    for (const Tensor4* t : inputs) {
      std::copy_n(t->plane(n, 0), plane * static_cast<std::size_t>(t->c()), out.plane(n, c0));
      c0 += t->c();
    }
  }
  return out;
}

Tensor4 concat_channels(const std::vector<Tensor4>& inputs) {
  std::vector<const Tensor4*> ptrs;
  ptrs.reserve(inputs.size());
  for (const auto& t : inputs) ptrs.push_back(&t);
  return concat_channels(ptrs);
}

std::vector<Tensor4> split_channels(const Tensor4& input, const std::vector<int>& channel_counts) {
  int total = 0;
  for (int c : channel_counts) {
    if (c < 1) throw ShapeError("split_channels: channel counts must be positive");
    total += c;
  }
  if (total != input.c()) {
    throw ShapeError("split_channels: counts sum to " + std::to_string(total) + " but input " +
                     input.shape().str() + " has " + std::to_string(input.c()) + " channels");
  }
  std::vector<Tensor4> parts;
  parts.reserve(channel_counts.size());
  for (int c : channel_counts) parts.emplace_back(input.n(), c, input.h(), input.w());
  const std::size_t plane = input.shape().plane();
  for (int n = 0; n < input.n(); ++n) {
    int c0 = 0;
    for (auto& p : parts) {
      std::copy_n(input.plane(n, c0), plane * static_cast<std::size_t>(p.c()), p.plane(n, 0));
      c0 += p.c();
    }
  }
  return parts;
}

Tensor4 softmax_channels(const Tensor4& input) {
  Tensor4 out(input.shape());
  const std::size_t plane = input.shape().plane();
  const int channels = input.c();
  std::vector<double> e(static_cast<std::size_t>(channels));
  for (int n = 0; n < input.n(); ++n) {
    const float* src = input.plane(n, 0);
    float* dst = out.plane(n, 0);
    for (std::size_t i = 0; i < plane; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < channels; ++c) mx = std::max(mx, static_cast<double>(src[c * plane + i]));
      double denom = 0.0;
      for (int c = 0; c < channels; ++c) {
        e[c] = std::exp(static_cast<double>(src[c * plane + i]) - mx);
        denom += e[c];
      }
      for (int c = 0; c < channels; ++c) dst[c * plane + i] = static_cast<float>(e[c] / denom);
    }
  }
  return out;
}

}  // namespace deepball
