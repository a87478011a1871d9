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

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "deepball/container.hpp"
#include "deepball/dataio.hpp"
#include "deepball/detector.hpp"
#include "deepball/evalkit.hpp"
#include "deepball/model.hpp"
#include "deepball/trainer.hpp"

namespace fs = std::filesystem;
using namespace deepball;

namespace {

void banner(const std::string& command, const nlohmann::json& config, const std::string& checkpoint_hash) {
  std::cerr << "deepball " << command << " config=" << config.dump()
            << " checkpoint=" << (checkpoint_hash.empty() ? "-" : checkpoint_hash) << "\n";
}

struct LoadedSet {
  std::vector<AnnotatedFrame> frames;
  std::vector<std::string> ids;
};

LoadedSet load_set(const fs::path& manifest) {
  LoadedSet s;
  for (const FrameDescriptor& d : load_annotations(manifest)) {
    s.frames.push_back(load_frame(d));
    s.ids.push_back(d.source_id);
  }
  if (s.frames.empty()) throw ParameterError(manifest.string() + ": manifest lists no frames");
  return s;
}

std::string to_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// File written on success only; removed when the command fails.
class StagedFile {
 public:
  explicit StagedFile(fs::path target) : target_(std::move(target)), staging_(target_.string() + ".partial") {
    out_.open(staging_);
    if (!out_) throw FormatError("cannot write " + staging_.string());
  }
  ~StagedFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      fs::remove(staging_, ec);
    }
  }
  std::ofstream& stream() { return out_; }
  void commit() {
    out_.close();
    if (!out_) throw FormatError("write failed for " + staging_.string());
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  std::ofstream out_;
  bool committed_ = false;
};

// --------------------------------------------------------------------------

struct TrainArgs {
  fs::path manifest, out_checkpoint, log, checkpoint_dir, resume, val_manifest;
  int epochs = 75;
  int lr_drop_epoch = -1;
  int batch_size = 16;
  double lr = 0.001;
  std::uint64_t seed = 1;
  bool no_augment = false;
  bool no_hypercolumn = false;
  int crop = 0;
  double scale_min = 0.5;
  double scale_max = 1.1;
  int workers = 1;
  int checkpoint_every = 0;
};

int run_train(const TrainArgs& a) {
  const LoadedSet data = load_set(a.manifest);
  TrainConfig cfg;
  cfg.total_epochs = a.epochs;
  cfg.lr_drop_epoch = a.lr_drop_epoch >= 0 ? a.lr_drop_epoch : static_cast<int>(std::lround(a.epochs * 2.0 / 3.0));
  cfg.initial_lr = a.lr;
  cfg.batch_size = a.batch_size;
  cfg.seed = a.seed;
  cfg.augment = !a.no_augment;
  cfg.workers = a.workers;
  cfg.checkpoint_every = a.checkpoint_every;
  cfg.checkpoint_dir = a.checkpoint_dir;
  cfg.augmentation.scale_min = a.scale_min;
  cfg.augmentation.scale_max = a.scale_max;
  int crop = a.crop;
  if (crop == 0) {
    int min_side = 1 << 30;
    for (const auto& f : data.frames) min_side = std::min({min_side, f.image.width, f.image.height});
    crop = std::min(512, static_cast<int>(std::floor(min_side * a.scale_min)) / 8 * 8);
  }
  cfg.augmentation.crop_h = cfg.augmentation.crop_w = crop;

  TrainState state;
  std::string resume_hash;
  if (!a.resume.empty()) {
    state = load_train_state(a.resume);
    resume_hash = file_digest(a.resume);
  } else {
    state.model = build_model(ModelConfig{!a.no_hypercolumn, 3, kScalingFactor}, derive_seed({a.seed, 0x1417}));
  }
  nlohmann::json jc = {{"seed", cfg.seed},
                       {"epochs", cfg.total_epochs},
                       {"lr", cfg.initial_lr},
                       {"lr_drop_epoch", cfg.lr_drop_epoch},
                       {"batch_size", cfg.batch_size},
                       {"augment", cfg.augment},
                       {"crop", crop},
                       {"scale", {a.scale_min, a.scale_max}},
                       {"hypercolumn", state.model.config.hypercolumn},
                       {"frames", data.frames.size()},
                       {"workers", cfg.workers},
                       {"resume_epoch", state.epochs_done}};
  banner("train", jc, resume_hash);

  std::optional<LoadedSet> val;
  if (!a.val_manifest.empty()) val = load_set(a.val_manifest);

  std::optional<StagedFile> log;
  if (!a.log.empty()) log.emplace(a.log);
  std::ostream& log_out = log ? static_cast<std::ostream&>(log->stream()) : std::cout;
  TrainHooks hooks;
  hooks.on_step = [&](const TrainLogRecord& r) { log_out << format_log_record(r) << "\n"; };
  hooks.on_epoch = [](int epoch, double mean) {
    std::cerr << "epoch " << epoch << " mean_loss " << to_fixed(mean, 6) << "\n";
  };
  const TrainResult result = train(std::move(state), data.frames, cfg, val ? &val->frames : nullptr, hooks);
  save_checkpoint(result.model, a.out_checkpoint);
  if (log) log->commit();
  std::cerr << "final checkpoint " << a.out_checkpoint.string() << " " << file_digest(a.out_checkpoint) << "\n";
  if (result.best_model) {
    std::cerr << "best validation accuracy " << to_fixed(result.best_validation_accuracy, 6) << " at epoch "
              << result.best_epoch << "\n";
  }
  return 0;
}

// --------------------------------------------------------------------------

void overlay_heatmap(Image& img, const FrameResult& fr, const std::vector<Detection>& dets) {
  const int k = kScalingFactor;
  for (int y = 0; y < img.height; ++y) {
    const int my = std::min(y / k, fr.map_h - 1);
    for (int x = 0; x < img.width; ++x) {
      const int mx = std::min(x / k, fr.map_w - 1);
      const float c = fr.view().at(my, mx);
      const float heat[3] = {std::clamp(3 * c, 0.0f, 1.0f), std::clamp(3 * c - 1, 0.0f, 1.0f),
                             std::clamp(3 * c - 2, 0.0f, 1.0f)};
      std::uint8_t* p = img.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) p[ch] = static_cast<std::uint8_t>(std::lround(0.5 * p[ch] + 0.5 * 255 * heat[ch]));
    }
  }
  for (const Detection& d : dets) {
    for (int t = 0; t < 64; ++t) {
      const double ang = t * 6.283185307179586 / 64;
      const int x = d.x_px + static_cast<int>(std::lround(12 * std::cos(ang)));
      const int y = d.y_px + static_cast<int>(std::lround(12 * std::sin(ang)));
      if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
      std::uint8_t* p = img.pixel(x, y);
      p[0] = 0;
      p[1] = 255;
      p[2] = 0;
    }
  }
}

int run_detect(const fs::path& checkpoint, const fs::path& image_path, double theta, int max_balls, int radius,
               const fs::path& overlay) {
  const std::string hash = file_digest(checkpoint);
  const Model model = load_checkpoint(checkpoint);
  banner("detect", {{"theta", theta}, {"max_balls", max_balls}, {"radius", radius}}, hash);
  const Image img = read_image(image_path);
  const FrameResult fr = infer_frame(model, img);
  const DecodeConfig cfg{theta, max_balls, radius};
  const auto dets = extract_peaks(fr.view(), cfg, fr.image_w, fr.image_h);
  for (const Detection& d : dets) std::cout << d.x_px << " " << d.y_px << " " << to_fixed(d.confidence, 6) << "\n";
  if (!overlay.empty()) {
    Image out = img;
    overlay_heatmap(out, fr, dets);
    write_png(overlay, out);
  }
  return 0;
}

int run_eval(const fs::path& checkpoint, const fs::path& manifest, double theta, double tol, const fs::path& csv,
             bool measure_fps) {
  const std::string hash = file_digest(checkpoint);
  const Model model = load_checkpoint(checkpoint);
  banner("eval", {{"theta", theta}, {"tolerance_px", tol}, {"manifest", manifest.string()}}, hash);
  const LoadedSet set = load_set(manifest);
  const std::vector<FrameResult> frames = infer_frames(model, set.frames);
  EvalReport report = evaluate(frames, theta, tol);
  if (measure_fps) {
    const Image& first = set.frames.front().image;
    report.fps = benchmark(model, first.height, first.width, 1, 5).fps;
  }
  if (!csv.empty()) {
    StagedFile out(csv);
    out.stream() << format_outcomes_csv(report, set.ids);
    out.commit();
  }
  std::cout << format_report(report);
  return 0;
}

int run_calibrate(const fs::path& checkpoint, const fs::path& manifest, double tol) {
  const std::string hash = file_digest(checkpoint);
  const Model model = load_checkpoint(checkpoint);
  banner("calibrate", {{"tolerance_px", tol}, {"manifest", manifest.string()}}, hash);
  const LoadedSet set = load_set(manifest);
  std::cout << to_fixed(calibrate_threshold(infer_frames(model, set.frames), tol), 2) << "\n";
  return 0;
}

int run_bench(const fs::path& checkpoint, const std::string& size, int iters, int warmup, bool no_hypercolumn) {
  int h = 0, w = 0;
  char x = 0;
  std::istringstream in(size);
  if (!(in >> h >> x >> w) || x != 'x' || h < 1 || w < 1 || in.rdbuf()->in_avail() != 0) {
    throw ParameterError("--size must look like HxW, got '" + size + "'");
  }
  Model model;
  std::string hash;
  if (!checkpoint.empty()) {
    hash = file_digest(checkpoint);
    model = load_checkpoint(checkpoint);
  } else {
    model = build_model(ModelConfig{!no_hypercolumn, 3, kScalingFactor}, 1);
  }
  banner("bench", {{"height", h}, {"width", w}, {"iters", iters}, {"warmup", warmup}, {"threads", 1},
                   {"hypercolumn", model.config.hypercolumn}}, hash);
  const BenchResult r = benchmark(model, h, w, warmup, iters);
  std::cout << "fps = " << to_fixed(r.fps, 3) << "\n";
  return 0;
}

int run_synth(const fs::path& out_dir, int count, std::uint64_t seed, int width, int height) {
  if (count < 1) throw ParameterError("--count must be at least 1");
  SynthConfig cfg;
  cfg.width = width;
  cfg.height = height;
  cfg.validate();
  banner("synth", {{"count", count}, {"seed", seed}, {"width", width}, {"height", height}}, "");
  if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
    throw ParameterError("output directory " + out_dir.string() + " exists and is not empty");
  }
  const fs::path staging = out_dir.string() + ".partial";
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    std::string manifest;
    for (int i = 0; i < count; ++i) {
      Rng rng(derive_seed({seed, static_cast<std::uint64_t>(i)}));
      const AnnotatedFrame f = synthesize_frame(cfg, rng);
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05d.png", i);
      write_png(staging / name, f.image);
      manifest += format_manifest_line(name, f.balls) + "\n";
    }
    write_file_atomic(staging / "manifest.txt", manifest);
    if (fs::exists(out_dir)) fs::remove(out_dir);
    if (out_dir.has_parent_path()) fs::create_directories(out_dir.parent_path());
    fs::rename(staging, out_dir);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DeepBall ball detector"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model on an annotated manifest");
  train_cmd->add_option("--manifest", ta.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out-checkpoint", ta.out_checkpoint, "Final checkpoint path")->required();
  train_cmd->add_option("--epochs", ta.epochs, "Total epochs")->capture_default_str();
  train_cmd->add_option("--lr-drop-epoch", ta.lr_drop_epoch, "Last epoch at the initial rate (default 2/3 of epochs)");
  train_cmd->add_option("--lr", ta.lr, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--batch-size", ta.batch_size, "Frames per step")->capture_default_str();
  train_cmd->add_option("--seed", ta.seed, "Run seed")->capture_default_str();
  train_cmd->add_flag("--no-augment", ta.no_augment, "Train on unmodified full frames");
  train_cmd->add_flag("--no-hypercolumn", ta.no_hypercolumn, "Conv4 sees only the Conv3 features");
  train_cmd->add_option("--crop", ta.crop, "Square crop side (0: largest multiple of 8 that fits, at most 512)");
  train_cmd->add_option("--scale-min", ta.scale_min, "Lower random-scale bound")->capture_default_str();
  train_cmd->add_option("--scale-max", ta.scale_max, "Upper random-scale bound")->capture_default_str();
  train_cmd->add_option("--workers", ta.workers, "Threads for batch preparation")->capture_default_str();
  train_cmd->add_option("--log", ta.log, "Training log file (default: stdout)");
  train_cmd->add_option("--checkpoint-dir", ta.checkpoint_dir, "Directory for periodic and best checkpoints");
  train_cmd->add_option("--checkpoint-every", ta.checkpoint_every, "Epochs between periodic checkpoints");
  train_cmd->add_option("--resume", ta.resume, "Training-state file to continue from")->check(CLI::ExistingFile);
  train_cmd->add_option("--val-manifest", ta.val_manifest, "Validation manifest for best-model selection")
      ->check(CLI::ExistingFile);

  fs::path checkpoint, image, overlay, manifest, csv, out_dir;
  double theta = 0.5, tol = kDefaultTolerancePx;
  int max_balls = 1, radius = 3, iters = 10, warmup = 2, count = 10, width = 256, height = 256;
  std::uint64_t seed = 1;
  std::string size = "1080x1920";
  bool measure_fps = false, no_hypercolumn = false;

  auto* detect_cmd = app.add_subcommand("detect", "Detect balls in one image");
  detect_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--image", image)->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--theta", theta)->capture_default_str();
  detect_cmd->add_option("--max-balls", max_balls)->capture_default_str();
  detect_cmd->add_option("--radius", radius, "Suppression radius in map cells")->capture_default_str();
  detect_cmd->add_option("--overlay", overlay, "Write a confidence heatmap overlay PNG");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate AP and accuracy on a manifest");
  eval_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--theta", theta)->capture_default_str();
  eval_cmd->add_option("--tol", tol, "Match tolerance in pixels")->capture_default_str();
  eval_cmd->add_option("--csv", csv, "Per-frame outcome CSV");
  eval_cmd->add_flag("--measure-fps", measure_fps, "Add an fps line (timing varies between runs)");

  auto* calib_cmd = app.add_subcommand("calibrate", "Pick the accuracy-maximizing threshold");
  calib_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  calib_cmd->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  calib_cmd->add_option("--tol", tol)->capture_default_str();

  auto* bench_cmd = app.add_subcommand("bench", "Measure forward + decode throughput");
  bench_cmd->add_option("--checkpoint", checkpoint)->check(CLI::ExistingFile);
  bench_cmd->add_option("--size", size, "Input size HxW")->capture_default_str();
  bench_cmd->add_option("--iters", iters)->capture_default_str();
  bench_cmd->add_option("--warmup", warmup)->capture_default_str();
  bench_cmd->add_flag("--no-hypercolumn", no_hypercolumn, "Untrained ablation model when no checkpoint is given");

  auto* synth_cmd = app.add_subcommand("synth", "Write synthetic annotated frames and a manifest");
  synth_cmd->add_option("--out-dir", out_dir)->required();
  synth_cmd->add_option("--count", count)->capture_default_str();
  synth_cmd->add_option("--seed", seed)->capture_default_str();
  synth_cmd->add_option("--width", width)->capture_default_str();
  synth_cmd->add_option("--height", height)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, std::cerr, std::cerr);
  }

  try {
    if (*train_cmd) return run_train(ta);
    if (*detect_cmd) return run_detect(checkpoint, image, theta, max_balls, radius, overlay);
    if (*eval_cmd) return run_eval(checkpoint, manifest, theta, tol, csv, measure_fps);
    if (*calib_cmd) return run_calibrate(checkpoint, manifest, tol);
    if (*bench_cmd) return run_bench(checkpoint, size, iters, warmup, no_hypercolumn);
    if (*synth_cmd) return run_synth(out_dir, count, seed, width, height);
  } catch (const std::exception& e) {
    std::cerr << "deepball: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
