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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepball/dataio.hpp"
#include "deepball/model.hpp"

namespace deepball {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  double initial_lr = 0.001;
  double lr_drop_factor = 10.0;
  int lr_drop_epoch = 50;  // last epoch (1-based) trained at initial_lr
  int total_epochs = 75;
  int batch_size = 16;
  AdamConfig adam;
  std::uint64_t seed = 1;
  bool augment = true;
  AugmentConfig augmentation;
  int workers = 1;
  int checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints
  std::filesystem::path checkpoint_dir;
  double validation_tolerance_px = 16.0;

  void validate() const;
};

/// Learning rate for a 1-based epoch index.
double learning_rate(const TrainConfig& cfg, int epoch);

struct OptimizerState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::int64_t t = 0;
};

/// One Adam update. An empty state is sized from `params` on first use.
void adam_step(std::span<const std::span<float>> params, std::span<const std::span<const float>> grads,
               OptimizerState& state, const AdamConfig& cfg, double lr);

struct TrainLogRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::size_t pos_count = 0;
  std::size_t neg_count = 0;
};

/// `epoch,step,lr,loss,pos,neg` with fixed formatting.
std::string format_log_record(const TrainLogRecord& r);

/// Everything needed to continue a run at an epoch boundary.
struct TrainState {
  Model model;
  OptimizerState optimizer;
  int epochs_done = 0;
  std::int64_t steps_done = 0;
};

void save_train_state(const TrainState& state, const TrainConfig& cfg, const std::filesystem::path& path);
/// Loads a state written by save_train_state; the optimizer moments must
/// match the stored model.
TrainState load_train_state(const std::filesystem::path& path);

struct TrainHooks {
  std::function<void(const TrainLogRecord&)> on_step;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct TrainResult {
  Model model;
  OptimizerState optimizer;
  std::vector<TrainLogRecord> log;
  std::vector<double> epoch_mean_loss;
  std::optional<Model> best_model;  // only with a validation set
  double best_validation_accuracy = -1.0;
  int best_epoch = 0;
};

/// Runs epochs state.epochs_done + 1 .. cfg.total_epochs. Each frame's
/// augmentation is seeded from (seed, epoch, frame index), so results do not
/// depend on the worker count.
TrainResult train(TrainState state, const std::vector<AnnotatedFrame>& dataset, const TrainConfig& cfg,
                  const std::vector<AnnotatedFrame>* validation = nullptr, const TrainHooks& hooks = {});

/// Fresh run from `model`.
TrainResult train(Model model, const std::vector<AnnotatedFrame>& dataset, const TrainConfig& cfg,
                  const std::vector<AnnotatedFrame>* validation = nullptr, const TrainHooks& hooks = {});

}  // namespace deepball
