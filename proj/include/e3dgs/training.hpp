// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "e3dgs/event_model.hpp"
#include "e3dgs/exposure_mapping.hpp"
#include "e3dgs/image.hpp"
#include "e3dgs/random.hpp"
#include "e3dgs/splat_core.hpp"
#include "e3dgs/trajectory.hpp"

namespace e3dgs::train {

// ---------------------------------------------------------------- windows

struct WindowSpec {
  double t0 = 0.0;  // seconds
  double t1 = 0.0;
  splat::CameraModel cam0;
  splat::CameraModel cam1;
};

struct SamplerConfig {
  int n_windows = 200;
  double l_max = 0.5;  // seconds

  void validate() const;
};

/// (t0, t1) with t1 = t_end_of_window and t1 - t0 uniform on (0, l_max].
std::pair<double, double> sample_window(Rng& rng, double t_end_of_window, double l_max);

/// Window end times start + i / n_windows * span for i = 1..n_windows.
std::vector<double> window_endpoints(double start, double end, int n_windows);

// ----------------------------------------------------------------- losses

struct MapLoss {
  double value = 0.0;
  DeltaLogMap grad;
  /// Exactly one of the two maps had zero norm; value and grad are zero.
  bool skipped = false;
};

/// Squared distance between the L2-normalized prediction and ground truth,
/// over all pixels or only those set in `subset`.
MapLoss motion_event_loss(const DeltaLogMap& pred, const DeltaLogMap& gt, const PixelMask* subset = nullptr);

struct ImageLoss {
  double value = 0.0;
  IntensityImage grad;
};

/// Mean squared error over the frame's valid pixels. Throws for an empty mask.
ImageLoss exposure_loss(const IntensityImage& pred, const exposure::ExposureFrame& frame);

/// lambda * l_evs + (1 - lambda) * l_img, lambda in [0, 1].
double combined_loss(double l_evs, double l_img, double lambda);

/// log_intensity(render(cam1)) - log_intensity(render(cam0)).
DeltaLogMap predicted_delta_log(const splat::GaussianScene& scene, const WindowSpec& window,
                                const events::EventModelConfig& cfg, const splat::RenderSettings& settings = {});

// -------------------------------------------------------------- optimizer

struct LearningRates {
  double mean = 1.6e-4;
  double rotation = 0.001;
  double scale = 0.005;
  double opacity = 0.05;
  double intensity = 0.0025;
};

struct LrSchedule {
  LearningRates initial;
  int warmup_iters = 500;
  int total_iters = 30000;
  double final_mean_ratio = 0.01;

  /// Linear ramp from 0 over the warmup on every group, then exponential decay
  /// of the mean group to initial.mean * final_mean_ratio at total_iters - 1.
  LearningRates at(int iter) const;
};

/// Per-splat parameter vector layout used by the optimizer moments.
inline constexpr int kParamsPerGaussian = 12;  // mean 3, rotation 4, log_scale 3, opacity 1, intensity 1

struct OptimizerState {
  std::vector<std::array<double, kParamsPerGaussian>> m;
  std::vector<std::array<double, kParamsPerGaussian>> v;
  std::int64_t step = 0;
  std::int64_t nonfinite_skipped = 0;

  explicit OptimizerState(std::size_t n = 0) : m(n, std::array<double, kParamsPerGaussian>{}), v(m) {}
  std::size_t size() const { return m.size(); }
};

/// One Adam update (beta1 0.9, beta2 0.999, eps 1e-15) at the learning rates of
/// schedule.at(iter). Non-finite partials leave their parameter untouched and
/// bump state.nonfinite_skipped. Quaternions are renormalized and intensities
/// clamped at 0 afterwards.
void adam_step(splat::GaussianScene& scene, const splat::GradientBuffer& grads, OptimizerState& state,
               const LrSchedule& schedule, int iter);

// ----------------------------------------------------------- densification

struct DensifyConfig {
  int interval = 100;
  int start_iter = 500;
  int stop_iter = 15000;
  double grad_threshold = 2e-4;  // mean screen-space gradient norm, per pixel
  double min_opacity = 0.005;
  std::size_t max_count = 20000;
  double percent_dense = 0.01;
  int opacity_reset_interval = 3000;  // 0 disables

  void validate() const;
  bool due(int iter) const { return iter > 0 && iter >= start_iter && iter <= stop_iter && iter % interval == 0; }
};

/// Running sum of per-view screen-space gradient norms.
struct DensityStats {
  std::vector<double> grad_sum;
  std::vector<int> count;

  explicit DensityStats(std::size_t n = 0) { reset(n); }
  void reset(std::size_t n);
  void add(const splat::GradientBuffer& grads);
};

struct DensifyResult {
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
};

/// Clones small and splits large high-gradient splats, prunes transparent
/// ones, and keeps the optimizer moments aligned. Growth is limited to
/// max_count, highest gradients first. Throws unless cfg.due(iter).
DensifyResult densify_and_prune(splat::GaussianScene& scene, DensityStats& stats, OptimizerState& state,
                                const DensifyConfig& cfg, int iter, double scene_extent, Rng& rng);

/// Caps every opacity at `ceiling` and clears the opacity moments.
void reset_opacity(splat::GaussianScene& scene, OptimizerState& state, double ceiling = 0.01);

/// 1.1 times the largest distance of a camera center from their centroid.
double camera_extent(const std::vector<splat::CameraModel>& cams);

// ----------------------------------------------------------------- trainer

enum class Mode { kFast, kHighQuality, kHybrid };

Mode parse_mode(std::string_view s);
std::string to_string(Mode mode);
double mode_lambda(Mode mode);

struct TrainConfig {
  Mode mode = Mode::kHighQuality;
  double lambda = 0.0;
  int iterations = 30000;
  int warmup_iters = 500;
  LearningRates lr;
  /// Multiply the mean learning rate by the camera extent.
  bool spatial_lr_scale = true;
  DensifyConfig densify;
  SamplerConfig sampler;
  events::EventModelConfig event_model;
  /// Fraction of pixels entering the motion loss, redrawn every window.
  double pixel_subset = 1.0;
  std::uint64_t seed = 0;
  int log_interval = 500;
  int eval_interval = 0;  // held-out PSNR every N iterations; 0 only at the end
  splat::RenderSettings render;

  /// The mode's schedule: fast 10000 iterations at lr 1.6e-5 without opacity
  /// resets, hq 30000 at 1.6e-4, hybrid 30000 at 1.6e-4; warmup 500 in all.
  /// Modes using the event loss densify at a higher gradient threshold.
  static TrainConfig for_mode(Mode mode);
  void validate() const;
};

/// One exposure stop: a pose on the trajectory with an optional mapped
/// exposure frame and an optional reference image for evaluation.
struct Stop {
  int id = 0;
  double t = 0.0;
  splat::CameraModel camera;
  std::optional<exposure::ExposureFrame> exposure;
  std::optional<IntensityImage> reference;
};

struct TrainingData {
  Trajectory trajectory;
  Intrinsics intrinsics;
  std::optional<events::EventStream> motion_events;
  std::vector<Stop> stops;
  std::vector<int> given;  // stop ids used for training; empty means all
  std::vector<int> novel;  // stop ids held out for evaluation
  splat::GaussianScene initial;
};

struct LogRecord {
  int iter = 0;
  double loss_evs = 0.0;
  double loss_img = 0.0;
  double loss = 0.0;
  double lambda = 0.0;
  std::size_t count = 0;
  double lr_mean = 0.0;
  double elapsed = 0.0;
  std::optional<double> heldout_psnr;
};

struct TrainingLog {
  std::vector<LogRecord> records;
  std::int64_t skipped_windows = 0;
  std::int64_t nonfinite_skipped = 0;
  std::optional<double> given_psnr;
  std::optional<double> novel_psnr;

  /// One line per record plus a summary line. Without timing the text is a
  /// pure function of the inputs.
  std::string to_text(bool include_timing = true) const;
};

struct TrainResult {
  splat::GaussianScene scene;
  TrainingLog log;
};

/// Mean PSNR of renders at the listed stops against their reference images;
/// nullopt when none of them has a reference.
std::optional<double> mean_psnr_at(const splat::GaussianScene& scene, const std::vector<Stop>& stops,
                                   const std::vector<int>& ids, const splat::RenderSettings& settings = {});

/// Runs the configured schedule. Throws std::invalid_argument before the
/// first step when the mode's supervision is missing.
TrainResult train(const TrainingData& data, const TrainConfig& config);

}  // namespace e3dgs::train
