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

#include "deepball/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "deepball/container.hpp"
#include "deepball/evalkit.hpp"
#include "deepball/loss.hpp"

namespace deepball {

void TrainConfig::validate() const {
  if (!(initial_lr > 0) || !(lr_drop_factor > 0)) throw ParameterError("learning rate and drop factor must be positive");
  if (total_epochs < 1) throw ParameterError("total_epochs must be at least 1");
  if (lr_drop_epoch < 0 || lr_drop_epoch >= total_epochs) {
    throw ParameterError("lr drop epoch " + std::to_string(lr_drop_epoch) + " must precede the final epoch " +
                         std::to_string(total_epochs));
  }
  if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.epsilon > 0)) {
    throw ParameterError("Adam constants out of range");
  }
  if (workers < 1) throw ParameterError("workers must be at least 1");
  if (checkpoint_every < 0) throw ParameterError("checkpoint cadence must be non-negative");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) throw ParameterError("checkpoint cadence set without a directory");
  if (augment) augmentation.validate();
}

double learning_rate(const TrainConfig& cfg, int epoch) {
  return epoch <= cfg.lr_drop_epoch ? cfg.initial_lr : cfg.initial_lr / cfg.lr_drop_factor;
}

void adam_step(std::span<const std::span<float>> params, std::span<const std::span<const float>> grads,
               OptimizerState& state, const AdamConfig& cfg, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameter tensors but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0f);
      state.v.emplace_back(p.size(), 0.0f);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state holds " + std::to_string(state.m.size()) + " tensors, expected " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].size() || state.m[i].size() != params[i].size() ||
        state.v[i].size() != params[i].size()) {
      throw ShapeError("adam_step: size mismatch in tensor " + std::to_string(i));
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    float* p = params[i].data();
    const float* g = grads[i].data();
    float* m = state.m[i].data();
    float* v = state.v[i].data();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      const double gj = g[j];
      const double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
      const double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      p[j] = static_cast<float>(p[j] - lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg.epsilon));
    }
  }
}

std::string format_log_record(const TrainLogRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%lld,%.6g,%.8f,%zu,%zu", r.epoch, static_cast<long long>(r.step), r.lr, r.loss,
                r.pos_count, r.neg_count);
  return buf;
}

namespace {

constexpr const char* kStateFormat = "deepball-train-state";

nlohmann::json config_json(const TrainConfig& cfg) {
  return {{"initial_lr", cfg.initial_lr},     {"lr_drop_factor", cfg.lr_drop_factor},
          {"lr_drop_epoch", cfg.lr_drop_epoch}, {"total_epochs", cfg.total_epochs},
          {"batch_size", cfg.batch_size},     {"beta1", cfg.adam.beta1},
          {"beta2", cfg.adam.beta2},          {"epsilon", cfg.adam.epsilon},
          {"seed", cfg.seed},                 {"augment", cfg.augment}};
}

std::string epoch_tag(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d", epoch);
  return buf;
}

std::vector<AnnotatedFrame> prepare_batch(const std::vector<AnnotatedFrame>& dataset,
                                          const std::vector<std::size_t>& indices, const TrainConfig& cfg,
                                          int epoch) {
  std::vector<AnnotatedFrame> out(indices.size());
  auto prepare = [&](std::size_t j) {
    const std::size_t idx = indices[j];
    if (!cfg.augment) {
      out[j] = dataset[idx];
      return;
    }
    Rng rng(derive_seed({cfg.seed, static_cast<std::uint64_t>(epoch), idx}));
    out[j] = augment(dataset[idx], cfg.augmentation, rng);
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), indices.size());
  if (workers <= 1) {
    for (std::size_t j = 0; j < indices.size(); ++j) prepare(j);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t j = t; j < indices.size(); j += workers) prepare(j);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

bool all_finite(const ParameterGradients& g) {
  for (const auto& view : g.views()) {
    for (float v : view) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace

void save_train_state(const TrainState& state, const TrainConfig& cfg, const std::filesystem::path& path) {
  ModelPayload payload = encode_model(state.model);
  nlohmann::json meta;
  meta["format"] = kStateFormat;
  meta["epochs_done"] = state.epochs_done;
  meta["steps_done"] = state.steps_done;
  meta["adam_t"] = state.optimizer.t;
  meta["train_config"] = config_json(cfg);
  meta["model"] = std::move(payload.meta);
  const auto names = state.model.trainable_names();
  if (!state.optimizer.m.empty() && state.optimizer.m.size() != names.size()) {
    throw StateError("save_train_state: optimizer state does not match the model");
  }
  for (std::size_t i = 0; i < state.optimizer.m.size(); ++i) {
    const auto& m = state.optimizer.m[i];
    const auto& v = state.optimizer.v[i];
    payload.arrays.push_back({"adam_m." + names[i], {static_cast<int>(m.size())}, m});
    payload.arrays.push_back({"adam_v." + names[i], {static_cast<int>(v.size())}, v});
  }
  write_container(path, kCheckpointVersion, meta, payload.arrays);
}

TrainState load_train_state(const std::filesystem::path& path) {
  const ContainerContents c = read_container(path);
  auto bad = [&](const std::string& what) {
    return FormatError(path.string() + ": " + what + " at byte offset 12");
  };
  if (c.version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(c.version) + " at byte offset 4");
  }
  if (c.meta.value("format", "") != kStateFormat) throw bad("not a training-state file");
  TrainState s;
  std::size_t next = 0;
  try {
    s.model = decode_model(c.meta.at("model"), c.arrays, next, path.string());
    s.epochs_done = c.meta.at("epochs_done").get<int>();
    s.steps_done = c.meta.at("steps_done").get<std::int64_t>();
    s.optimizer.t = c.meta.at("adam_t").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("malformed header field (") + e.what() + ")");
  }
  const auto names = s.model.trainable_names();
  const auto params = s.model.trainable();
  if (next == c.arrays.size()) return s;  // saved before the first step
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (auto* dst : {&s.optimizer.m, &s.optimizer.v}) {
      const std::string expect = (dst == &s.optimizer.m ? "adam_m." : "adam_v.") + names[i];
      if (next >= c.arrays.size()) throw bad("missing array " + expect);
      const NamedArray& a = c.arrays[next++];
      if (a.name != expect) throw bad("expected array " + expect + ", found " + a.name);
      if (a.values.size() != params[i].size()) throw bad("array " + expect + " has the wrong size");
      dst->push_back(a.values);
    }
  }
  if (next != c.arrays.size()) throw bad("unexpected extra arrays");
  return s;
}

TrainResult train(Model model, const std::vector<AnnotatedFrame>& dataset, const TrainConfig& cfg,
                  const std::vector<AnnotatedFrame>* validation, const TrainHooks& hooks) {
  TrainState s;
  s.model = std::move(model);
  return train(std::move(s), dataset, cfg, validation, hooks);
}

TrainResult train(TrainState state, const std::vector<AnnotatedFrame>& dataset, const TrainConfig& cfg,
                  const std::vector<AnnotatedFrame>* validation, const TrainHooks& hooks) {
  cfg.validate();
  if (dataset.empty()) throw ParameterError("train: empty dataset");
  if (state.epochs_done < 0 || state.epochs_done > cfg.total_epochs) {
    throw ParameterError("train: resume point " + std::to_string(state.epochs_done) + " outside the schedule");
  }
  TrainResult result;
  Model& model = state.model;
  const int k = model.config.scaling_factor;

  for (int epoch = state.epochs_done + 1; epoch <= cfg.total_epochs; ++epoch) {
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed({cfg.seed, 0x5348554646ULL, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i - 1)))]);
    }
    const double lr = learning_rate(cfg, epoch);
    double loss_sum = 0.0;
    int batches = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<std::size_t> indices(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(end));
      const std::vector<AnnotatedFrame> batch = prepare_batch(dataset, indices, cfg, epoch);
      std::vector<const Image*> images;
      for (const auto& f : batch) images.push_back(&f.image);

      ForwardCache cache;
      const ForwardOutput out = forward(model, normalize_batch(images, model.normalization), Mode::train, &cache);
      const Shape4 ms = out.logits.shape();
      std::vector<TargetSet> targets;
      std::vector<std::vector<int>> negatives;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        targets.push_back(build_targets(batch[i].balls, ms.h, ms.w, k));
        negatives.push_back(mine_negatives(out.confidence, targets.back(), static_cast<int>(i)));
      }
      LossOutput loss = detection_loss(out.logits, targets, negatives);
      const std::int64_t step = state.steps_done + 1;
      auto describe = [&] {
        std::string ids;
        for (const auto& f : batch) ids += (ids.empty() ? "" : " ") + f.source_id;
        return "epoch " + std::to_string(epoch) + " step " + std::to_string(step) + " (frames: " + ids + ")";
      };
      if (!std::isfinite(loss.value)) throw NumericError("non-finite loss at " + describe());
      const ParameterGradients grads = backward(model, cache, loss.grad_logits);
      if (!all_finite(grads)) throw NumericError("non-finite gradient at " + describe());
      const auto params = model.trainable();
      const auto views = grads.views();
      adam_step(params, views, state.optimizer, cfg.adam, lr);
      state.steps_done = step;

      const TrainLogRecord rec{epoch, step, lr, loss.value, loss.pos_count, loss.neg_count};
      result.log.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
      loss_sum += loss.value;
      ++batches;
    }
    state.epochs_done = epoch;
    const double mean = loss_sum / batches;
    result.epoch_mean_loss.push_back(mean);
    if (hooks.on_epoch) hooks.on_epoch(epoch, mean);

    if (cfg.checkpoint_every > 0 && (epoch % cfg.checkpoint_every == 0 || epoch == cfg.total_epochs)) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      save_checkpoint(model, cfg.checkpoint_dir / (epoch_tag(epoch) + ".ckpt"));
      save_train_state(state, cfg, cfg.checkpoint_dir / (epoch_tag(epoch) + ".state"));
    }
    if (validation != nullptr && !validation->empty()) {
      const std::vector<FrameResult> frames = infer_frames(model, *validation);
      const double theta = calibrate_threshold(frames, cfg.validation_tolerance_px);
      const double acc = accuracy(frames, theta, cfg.validation_tolerance_px).accuracy;
      if (acc > result.best_validation_accuracy) {
        result.best_validation_accuracy = acc;
        result.best_epoch = epoch;
        result.best_model = model;
        if (!cfg.checkpoint_dir.empty()) {
          std::filesystem::create_directories(cfg.checkpoint_dir);
          save_checkpoint(model, cfg.checkpoint_dir / "best.ckpt");
        }
      }
    }
  }
  result.model = std::move(state.model);
  result.optimizer = std::move(state.optimizer);
  return result;
}

}  // namespace deepball
