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

#include "deepball/model.hpp"

#include <cmath>
#include <string>
#include <type_traits>
#include <utility>

#include "deepball/container.hpp"
#include "deepball/random.hpp"

namespace deepball {

namespace {

struct UnitLayout {
  const char* name;
  int out_channels;
  int kernel;
  int stride;
  bool batchnorm;
  bool relu;
};

// Conv1..Conv3 carry BatchNorm; the Conv4 classifier does not, and its final
// layer feeds the softmax directly.
constexpr std::array<UnitLayout, kUnitCount> kUnits = {{
    {"conv1a", 8, 7, 2, true, true},
    {"conv1b", 8, 3, 1, true, true},
    {"conv2a", 16, 3, 1, true, true},
    {"conv2b", 16, 3, 1, true, true},
    {"conv3a", 32, 3, 1, true, true},
    {"conv3b", 32, 3, 1, true, true},
    {"conv4a", 56, 3, 1, false, true},
    {"conv4b", 2, 3, 1, false, false},
}};

constexpr int kConv1Channels = 8;
constexpr int kConv2Channels = 16;
constexpr int kConv3Channels = 32;

}  // namespace

std::size_t Model::trainable_parameter_count() const {
  std::size_t total = 0;
  for (const auto& v : trainable()) total += v.size();
  return total;
}

std::vector<std::span<float>> Model::trainable() {
  std::vector<std::span<float>> out;
  for (auto& u : units) {
    out.emplace_back(u.conv.weights.values());
    out.emplace_back(u.conv.bias);
    if (u.bn) {
      out.emplace_back(u.bn->scale);
      out.emplace_back(u.bn->shift);
    }
  }
  return out;
}

std::vector<std::span<const float>> Model::trainable() const {
  std::vector<std::span<const float>> out;
  for (const auto& u : units) {
    out.emplace_back(u.conv.weights.values());
    out.emplace_back(u.conv.bias);
    if (u.bn) {
      out.emplace_back(u.bn->scale);
      out.emplace_back(u.bn->shift);
    }
  }
  return out;
}

std::vector<std::string> Model::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& u : units) {
    out.push_back(u.name + ".weight");
    out.push_back(u.name + ".bias");
    if (u.bn) {
      out.push_back(u.name + ".bn_scale");
      out.push_back(u.name + ".bn_shift");
    }
  }
  return out;
}

std::vector<std::span<const float>> ParameterGradients::views() const {
  std::vector<std::span<const float>> out;
  for (const auto& u : units) {
    out.emplace_back(u.weights.values());
    out.emplace_back(u.bias);
    if (!u.scale.empty()) {
      out.emplace_back(u.scale);
      out.emplace_back(u.shift);
    }
  }
  return out;
}

Model build_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.input_channels < 1) throw ParameterError("model needs at least one input channel");
  if (config.scaling_factor != kScalingFactor) {
    throw ParameterError("scaling factor is fixed at " + std::to_string(kScalingFactor));
  }
  Model m;
  m.config = config;
  m.init_seed = seed;
  Rng rng(seed);
  int in_channels = config.input_channels;
  for (int i = 0; i < kUnitCount; ++i) {
    const UnitLayout& s = kUnits[static_cast<std::size_t>(i)];
    if (i == kConv4a) {
      in_channels = config.hypercolumn ? kConv1Channels + kConv2Channels + kConv3Channels : kConv3Channels;
    }
    ConvUnit& u = m.units[static_cast<std::size_t>(i)];
    u.name = s.name;
    u.conv = make_conv(in_channels, s.out_channels, s.kernel, s.stride);
    const double fan_in = static_cast<double>(in_channels) * s.kernel * s.kernel;
    const double bound = std::sqrt(6.0 / fan_in);
    for (float& w : u.conv.weights.values()) w = static_cast<float>(rng.uniform(-bound, bound));
    if (s.batchnorm) u.bn = BatchNormParams::identity(s.out_channels);
    u.relu = s.relu;
    in_channels = s.out_channels;
  }
  return m;
}

std::pair<int, int> confidence_map_size(int h, int w) {
  auto axis = [](int v) {
    const int conv1 = (v + 1) / 2;
    const int p1 = conv1 / 2;
    const int p2 = p1 / 2;
    return std::pair{p1, p2};
  };
  const auto [mh, h2] = axis(h);
  const auto [mw, w2] = axis(w);
  if (h2 < 2 || w2 < 2) {
    throw ShapeError("input " + std::to_string(h) + "x" + std::to_string(w) +
                     " is too small for three 2x2 poolings (need at least 15x15)");
  }
  return {mh, mw};
}

namespace {

template <typename M>
Tensor4 run_unit(M& model, int index, const Tensor4& x, Mode mode, UnitCache* cache) {
  auto& u = model.units[static_cast<std::size_t>(index)];
  Tensor4 y = conv2d(x, u.conv);
  if (cache != nullptr) {
    cache->input = x;
    cache->conv_out = y;
  }
  if (u.bn) {
    if constexpr (std::is_const_v<M>) {
      y = batchnorm_infer(y, *u.bn);
    } else {
      y = batchnorm(y, *u.bn, mode, cache != nullptr ? &cache->bn : nullptr);
    }
  }
  if (u.relu) {
    if (cache != nullptr) cache->activation_in = y;
    relu_inplace(y);
  }
  return y;
}

template <typename M>
ForwardOutput forward_impl(M& model, const Tensor4& images, Mode mode, ForwardCache* cache) {
  if (images.c() != model.config.input_channels) {
    throw ShapeError("forward: images " + images.shape().str() + " have " + std::to_string(images.c()) +
                     " channels, model expects " + std::to_string(model.config.input_channels));
  }
  confidence_map_size(images.h(), images.w());
  if (cache != nullptr) cache->valid = false;
  auto unit_cache = [&](int i) -> UnitCache* {
    return cache != nullptr ? &cache->units[static_cast<std::size_t>(i)] : nullptr;
  };
  auto pool = [&](int stage, const Tensor4& x) {
    MaxPoolResult r = maxpool2x2(x);
    Tensor4 out = r.output;
    if (cache != nullptr) {
      cache->pool_inputs[static_cast<std::size_t>(stage)] = x.shape();
      cache->block_outputs[static_cast<std::size_t>(stage)] = out.shape();
      cache->pools[static_cast<std::size_t>(stage)] = std::move(r);
    }
    return out;
  };

  Tensor4 x = run_unit(model, kConv1a, images, mode, unit_cache(kConv1a));
  x = run_unit(model, kConv1b, x, mode, unit_cache(kConv1b));
  const Tensor4 block1 = pool(0, x);
  x = run_unit(model, kConv2a, block1, mode, unit_cache(kConv2a));
  x = run_unit(model, kConv2b, x, mode, unit_cache(kConv2b));
  const Tensor4 block2 = pool(1, x);
  x = run_unit(model, kConv3a, block2, mode, unit_cache(kConv3a));
  x = run_unit(model, kConv3b, x, mode, unit_cache(kConv3b));
  const Tensor4 block3 = pool(2, x);

  const Tensor4 up3 = upsample_nearest(block3, block1.h(), block1.w());
  Tensor4 features;
  if (model.config.hypercolumn) {
    const Tensor4 up2 = upsample_nearest(block2, block1.h(), block1.w());
    features = concat_channels({&block1, &up2, &up3});
  } else {
    features = up3;
  }
  x = run_unit(model, kConv4a, features, mode, unit_cache(kConv4a));
  ForwardOutput out;
  out.logits = run_unit(model, kConv4b, x, mode, unit_cache(kConv4b));
  out.confidence = softmax_channels(out.logits);
  if (cache != nullptr) cache->valid = true;
  return out;
}

// Propagates `grad` (w.r.t. the unit's output) back through ReLU, BN and conv.
Tensor4 unit_backward(const ConvUnit& u, const UnitCache& c, Tensor4 grad, UnitGrads& out, bool need_input) {
  if (u.relu) grad = relu_backward(c.activation_in, grad);
  if (u.bn) {
    BatchNormGrads bg = batchnorm_backward(c.conv_out, *u.bn, c.bn, grad);
    out.scale = std::move(bg.scale);
    out.shift = std::move(bg.shift);
    grad = std::move(bg.input);
  }
  ConvGrads cg = conv2d_backward(c.input, u.conv, grad, need_input);
  out.weights = std::move(cg.weights);
  out.bias = std::move(cg.bias);
  return std::move(cg.input);
}

void add_into(Tensor4& dst, const Tensor4& src) {
  require_same_shape(dst, src, "gradient accumulation");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

ForwardOutput forward(Model& model, const Tensor4& images, Mode mode, ForwardCache* cache) {
  return forward_impl(model, images, mode, cache);
}

ForwardOutput forward(const Model& model, const Tensor4& images) {
  return forward_impl(model, images, Mode::infer, nullptr);
}

ParameterGradients backward(const Model& model, const ForwardCache& cache, const Tensor4& grad_logits) {
  if (!cache.valid) throw StateError("backward: no cached train-mode forward pass");
  const auto& units = model.units;
  const auto& uc = cache.units;
  ParameterGradients g;

  Tensor4 grad = unit_backward(units[kConv4b], uc[kConv4b], grad_logits, g.units[kConv4b], true);
  Tensor4 features_grad = unit_backward(units[kConv4a], uc[kConv4a], std::move(grad), g.units[kConv4a], true);

  const Shape4 b1 = cache.block_outputs[0];
  const Shape4 b2 = cache.block_outputs[1];
  const Shape4 b3 = cache.block_outputs[2];
  if (model.config.hypercolumn) {
    auto parts = split_channels(features_grad, {b1.c, b2.c, b3.c});
    g.hypercolumn.from_conv1 = std::move(parts[0]);
    g.hypercolumn.from_conv2 = upsample_nearest_backward(b2, parts[1]);
    g.hypercolumn.from_conv3 = upsample_nearest_backward(b3, parts[2]);
  } else {
    g.hypercolumn.from_conv1 = Tensor4(b1);
    g.hypercolumn.from_conv2 = Tensor4(b2);
    g.hypercolumn.from_conv3 = upsample_nearest_backward(b3, features_grad);
  }

  grad = maxpool2x2_backward(cache.pool_inputs[2], cache.pools[2], g.hypercolumn.from_conv3);
  grad = unit_backward(units[kConv3b], uc[kConv3b], std::move(grad), g.units[kConv3b], true);
  grad = unit_backward(units[kConv3a], uc[kConv3a], std::move(grad), g.units[kConv3a], true);
  add_into(grad, g.hypercolumn.from_conv2);

  grad = maxpool2x2_backward(cache.pool_inputs[1], cache.pools[1], grad);
  grad = unit_backward(units[kConv2b], uc[kConv2b], std::move(grad), g.units[kConv2b], true);
  grad = unit_backward(units[kConv2a], uc[kConv2a], std::move(grad), g.units[kConv2a], true);
  add_into(grad, g.hypercolumn.from_conv1);

  grad = maxpool2x2_backward(cache.pool_inputs[0], cache.pools[0], grad);
  grad = unit_backward(units[kConv1b], uc[kConv1b], std::move(grad), g.units[kConv1b], true);
  unit_backward(units[kConv1a], uc[kConv1a], std::move(grad), g.units[kConv1a], false);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

NamedArray vec_array(const std::string& name, const std::vector<float>& v) {
  return {name, {static_cast<int>(v.size())}, v};
}

}  // namespace

ModelPayload encode_model(const Model& model) {
  ModelPayload p;
  nlohmann::json& meta = p.meta;
  meta["format"] = "deepball-checkpoint";
  meta["config"] = {{"hypercolumn", model.config.hypercolumn},
                    {"input_channels", model.config.input_channels},
                    {"scaling_factor", model.config.scaling_factor}};
  meta["normalization"] = {{"offset", model.normalization.offset}, {"scale", model.normalization.scale}};
  meta["init_seed"] = model.init_seed;
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : model.units) {
    nlohmann::json ju = {{"name", u.name}, {"stride", u.conv.stride}, {"relu", u.relu}, {"batchnorm", u.bn.has_value()}};
    const Shape4 s = u.conv.weights.shape();
    p.arrays.push_back({u.name + ".weight", {s.n, s.c, s.h, s.w}, {u.conv.weights.values().begin(), u.conv.weights.values().end()}});
    p.arrays.push_back(vec_array(u.name + ".bias", u.conv.bias));
    if (u.bn) {
      ju["bn_epsilon"] = u.bn->epsilon;
      ju["bn_momentum"] = u.bn->momentum;
      p.arrays.push_back(vec_array(u.name + ".bn_scale", u.bn->scale));
      p.arrays.push_back(vec_array(u.name + ".bn_shift", u.bn->shift));
      p.arrays.push_back(vec_array(u.name + ".bn_running_mean", u.bn->running_mean));
      p.arrays.push_back(vec_array(u.name + ".bn_running_var", u.bn->running_var));
    }
    units.push_back(std::move(ju));
  }
  meta["units"] = std::move(units);
  return p;
}

Model decode_model(const nlohmann::json& meta, const std::vector<NamedArray>& arrays, std::size_t& next,
                   const std::string& where) {
  auto bad = [&](const std::string& what) -> FormatError {
    return FormatError(where + ": " + what + " at byte offset 12");
  };
  Model m;
  try {
    if (meta.value("format", "") != "deepball-checkpoint") throw bad("not a model checkpoint");
    const auto& cfg = meta.at("config");
    ModelConfig config;
    config.hypercolumn = cfg.at("hypercolumn").get<bool>();
    config.input_channels = cfg.at("input_channels").get<int>();
    config.scaling_factor = cfg.at("scaling_factor").get<int>();
    m = build_model(config, meta.at("init_seed").get<std::uint64_t>());
    m.normalization.offset = meta.at("normalization").at("offset").get<float>();
    m.normalization.scale = meta.at("normalization").at("scale").get<float>();
    const auto& units = meta.at("units");
    if (units.size() != m.units.size()) throw bad("unexpected unit count");
    for (std::size_t i = 0; i < m.units.size(); ++i) {
      if (units[i].at("name").get<std::string>() != m.units[i].name) throw bad("unit order mismatch");
      if (m.units[i].bn) {
        m.units[i].bn->epsilon = units[i].at("bn_epsilon").get<float>();
        m.units[i].bn->momentum = units[i].at("bn_momentum").get<float>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("malformed header field (") + e.what() + ")");
  } catch (const ParameterError& e) {
    throw bad(e.what());
  }

  auto take = [&](const std::string& name, std::span<float> dst) {
    if (next >= arrays.size()) throw bad("missing array " + name);
    const NamedArray& a = arrays[next++];
    if (a.name != name) throw bad("expected array " + name + ", found " + a.name);
    if (a.values.size() != dst.size()) throw bad("array " + name + " has the wrong size");
    std::copy(a.values.begin(), a.values.end(), dst.begin());
  };
  for (auto& u : m.units) {
    take(u.name + ".weight", u.conv.weights.values());
    take(u.name + ".bias", u.conv.bias);
    if (u.bn) {
      take(u.name + ".bn_scale", u.bn->scale);
      take(u.name + ".bn_shift", u.bn->shift);
      take(u.name + ".bn_running_mean", u.bn->running_mean);
      take(u.name + ".bn_running_var", u.bn->running_var);
    }
  }
  return m;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const ModelPayload p = encode_model(model);
  write_container(path, kCheckpointVersion, p.meta, p.arrays);
}

Model load_checkpoint(const std::filesystem::path& path) {
  ContainerContents c = read_container(path);
  if (c.version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(c.version) +
                      " at byte offset 4");
  }
  std::size_t next = 0;
  Model m = decode_model(c.meta, c.arrays, next, path.string());
  if (next != c.arrays.size()) throw FormatError(path.string() + ": unexpected extra arrays at byte offset 12");
  return m;
}

}  // namespace deepball
