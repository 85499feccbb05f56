// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_set>

#include "e3dgs/metrics.hpp"
#include "e3dgs/training.hpp"

namespace e3dgs::train {

Mode parse_mode(std::string_view s) {
  if (s == "fast") return Mode::kFast;
  if (s == "hq") return Mode::kHighQuality;
  if (s == "hybrid") return Mode::kHybrid;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected fast, hq or hybrid)");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kFast:
      return "fast";
    case Mode::kHighQuality:
      return "hq";
    case Mode::kHybrid:
      return "hybrid";
  }
  return "?";
}

double mode_lambda(Mode mode) {
  switch (mode) {
    case Mode::kFast:
      return 1.0;
    case Mode::kHighQuality:
      return 0.0;
    case Mode::kHybrid:
      return 0.5;
  }
  return 0.0;
}

TrainConfig TrainConfig::for_mode(Mode mode) {
  TrainConfig c;
  c.mode = mode;
  c.lambda = mode_lambda(mode);
  c.warmup_iters = 500;
  if (mode == Mode::kFast) {
    c.iterations = 10000;
    c.lr.mean = 1.6e-5;
    c.densify.opacity_reset_interval = 0;
    c.densify.stop_iter = 5000;
  } else {
    c.iterations = 30000;
    c.lr.mean = 1.6e-4;
  }
  // The normalized event loss yields screen-space gradients orders of
  // magnitude above the photometric loss.
  if (c.lambda > 0.0) c.densify.grad_threshold = 0.05;
  return c;
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("train: lambda outside [0, 1]");
  if (warmup_iters < 0 || iterations <= warmup_iters) throw std::invalid_argument("train: need iterations > warmup_iters >= 0");
  for (double r : {lr.mean, lr.rotation, lr.scale, lr.opacity, lr.intensity}) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("train: learning rates must be finite and >= 0");
  }
  if (!(pixel_subset > 0.0 && pixel_subset <= 1.0)) throw std::invalid_argument("train: pixel_subset outside (0, 1]");
  if (log_interval < 1) throw std::invalid_argument("train: log_interval must be >= 1");
  if (eval_interval < 0) throw std::invalid_argument("train: eval_interval must be >= 0");
  densify.validate();
  sampler.validate();
  event_model.validate();
}

std::string TrainingLog::to_text(bool include_timing) const {
  std::string out;
  char line[320];
  for (const auto& r : records) {
    std::snprintf(line, sizeof(line),
                  "iter=%d loss_evs=%.6g loss_img=%.6g loss=%.6g lambda=%g count=%zu lr=%.6g", r.iter, r.loss_evs,
                  r.loss_img, r.loss, r.lambda, r.count, r.lr_mean);
    out += line;
    if (include_timing) {
      std::snprintf(line, sizeof(line), " elapsed=%.3fs", r.elapsed);
      out += line;
    }
    if (r.heldout_psnr) {
      std::snprintf(line, sizeof(line), " heldout_psnr=%.3f", *r.heldout_psnr);
      out += line;
    }
    out += '\n';
  }
  std::snprintf(line, sizeof(line), "summary skipped_windows=%lld nonfinite_skipped=%lld",
                static_cast<long long>(skipped_windows), static_cast<long long>(nonfinite_skipped));
  out += line;
  if (given_psnr) {
    std::snprintf(line, sizeof(line), " given_psnr=%.3f", *given_psnr);
    out += line;
  }
  if (novel_psnr) {
    std::snprintf(line, sizeof(line), " novel_psnr=%.3f", *novel_psnr);
    out += line;
  }
  out += '\n';
  return out;
}

std::optional<double> mean_psnr_at(const splat::GaussianScene& scene, const std::vector<Stop>& stops,
                                   const std::vector<int>& ids, const splat::RenderSettings& settings) {
  const std::unordered_set<int> wanted(ids.begin(), ids.end());
  double total = 0.0;
  int n = 0;
  for (const auto& s : stops) {
    if (!s.reference || !wanted.contains(s.id)) continue;
    total += metrics::psnr(splat::render(scene, s.camera, settings).image, *s.reference);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / n;
}

namespace {

// dLoss/dI for one end of the window given dLoss/dDelta; sign is +1 at t1.
IntensityImage log_adjoint(const IntensityImage& img, const DeltaLogMap& g, double sign,
                           const events::EventModelConfig& cfg) {
  IntensityImage out(img.resolution(), 0.0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (img[i] > cfg.intensity_floor) out[i] = sign * g[i] / (cfg.gamma * img[i]);
  }
  return out;
}

}  // namespace

TrainResult train(const TrainingData& data, const TrainConfig& config) {
  config.validate();
  const double lambda = config.lambda;
  const bool use_events = lambda > 0.0;
  const bool use_frames = lambda < 1.0;
  if (use_events && !data.motion_events) throw std::invalid_argument("train: mode needs a motion event stream");

  const std::unordered_set<int> given(data.given.begin(), data.given.end());
  std::vector<const Stop*> frames;
  for (const auto& s : data.stops) {
    if (s.exposure && (given.empty() || given.contains(s.id))) frames.push_back(&s);
  }
  if (use_frames && frames.empty()) throw std::invalid_argument("train: mode needs exposure frames");
  if (data.initial.size() == 0) throw std::invalid_argument("train: empty initial scene");

  const double t_start = trajectory_start(data.trajectory);
  const double t_end = trajectory_end(data.trajectory);
  std::vector<double> endpoints;
  if (use_events) {
    const auto all = window_endpoints(t_start, t_end, config.sampler.n_windows);
    for (std::size_t i = 0; i < all.size(); ++i) {
      // Endpoint i + 1 lands on stop (i + 1) mod n_windows; keep the given parity.
      if (given.empty() || (i + 1) % 2 == 1) endpoints.push_back(all[i]);
    }
    if (endpoints.empty()) endpoints = all;
  }

  std::vector<splat::CameraModel> cams;
  for (const auto& s : data.stops) cams.push_back(s.camera);
  if (cams.empty()) {
    for (int i = 0; i <= 16; ++i) cams.push_back(pose_at_time(data.trajectory, data.intrinsics, t_start + (t_end - t_start) * i / 16.0));
  }
  const double extent = camera_extent(cams);

  LrSchedule schedule;
  schedule.initial = config.lr;
  if (config.spatial_lr_scale) schedule.initial.mean *= extent;
  schedule.warmup_iters = config.warmup_iters;
  schedule.total_iters = config.iterations;

  TrainResult result;
  splat::GaussianScene& scene = result.scene;
  scene = data.initial;
  OptimizerState state(scene.size());
  DensityStats stats(scene.size());
  Rng rng(config.seed);
  const auto clock_start = std::chrono::steady_clock::now();

  std::vector<int> heldout = data.novel;
  double acc_evs = 0.0;
  double acc_img = 0.0;
  int acc_n = 0;

  for (int iter = 0; iter < config.iterations; ++iter) {
    splat::GradientBuffer grads(scene.size());
    double l_evs = 0.0;
    double l_img = 0.0;

    if (use_events) {
      const double t1 = endpoints[rng.index(endpoints.size())];
      auto [t0, t1w] = sample_window(rng, t1, config.sampler.l_max);
      t0 = std::max(t0, t_start);
      const events::Micros u0 = events::to_micros(t0);
      const events::Micros u1 = events::to_micros(t1w);
      PixelMask subset;
      if (config.pixel_subset < 1.0) {
        subset.resize(data.intrinsics.resolution().pixels());
        for (auto& m : subset) m = rng.uniform() < config.pixel_subset ? 1 : 0;
      }
      if (u0 >= u1) {
        ++result.log.skipped_windows;
      } else {
        const auto gt = events::accumulate_events(*data.motion_events, u0, u1, config.event_model);
        const auto cam0 = pose_at_time(data.trajectory, data.intrinsics, t0);
        const auto cam1 = pose_at_time(data.trajectory, data.intrinsics, t1w);
        const auto img0 = splat::render(scene, cam0, config.render).image;
        const auto img1 = splat::render(scene, cam1, config.render).image;
        const LogImage log0 = events::log_intensity(img0, config.event_model);
        const LogImage log1 = events::log_intensity(img1, config.event_model);
        DeltaLogMap pred(log1.resolution(), 0.0);
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = log1[i] - log0[i];
        const auto loss = motion_event_loss(pred, gt.delta, subset.empty() ? nullptr : &subset);
        if (loss.skipped) {
          ++result.log.skipped_windows;
        } else {
          l_evs = loss.value;
          DeltaLogMap g = loss.grad;
          for (auto& v : g.values()) v *= lambda;
          const auto b1 = splat::render_backward(scene, cam1, log_adjoint(img1, g, 1.0, config.event_model), config.render);
          const auto b0 = splat::render_backward(scene, cam0, log_adjoint(img0, g, -1.0, config.event_model), config.render);
          grads.accumulate(b1);
          grads.accumulate(b0);
          stats.add(b1);
          stats.add(b0);
        }
      }
    }

    if (use_frames) {
      const Stop& stop = *frames[rng.index(frames.size())];
      const auto img = splat::render(scene, stop.camera, config.render).image;
      auto loss = exposure_loss(img, *stop.exposure);
      l_img = loss.value;
      for (auto& v : loss.grad.values()) v *= (1.0 - lambda);
      const auto b = splat::render_backward(scene, stop.camera, loss.grad, config.render);
      grads.accumulate(b);
      stats.add(b);
    }

    adam_step(scene, grads, state, schedule, iter);

    if (config.densify.due(iter)) {
      densify_and_prune(scene, stats, state, config.densify, iter, extent, rng);
    }
    if (config.densify.opacity_reset_interval > 0 && iter > 0 && iter <= config.densify.stop_iter &&
        iter % config.densify.opacity_reset_interval == 0) {
      reset_opacity(scene, state);
    }

    acc_evs += l_evs;
    acc_img += l_img;
    ++acc_n;
    const bool last = iter + 1 == config.iterations;
    if ((iter + 1) % config.log_interval == 0 || last) {
      LogRecord r;
      r.iter = iter + 1;
      r.loss_evs = acc_evs / acc_n;
      r.loss_img = acc_img / acc_n;
      r.lambda = lambda;
      r.loss = combined_loss(r.loss_evs, r.loss_img, lambda);
      r.count = scene.size();
      r.lr_mean = schedule.at(iter).mean;
      r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
      if (config.eval_interval > 0 && (iter + 1) % config.eval_interval == 0) {
        r.heldout_psnr = mean_psnr_at(scene, data.stops, heldout, config.render);
      }
      result.log.records.push_back(r);
      acc_evs = acc_img = 0.0;
      acc_n = 0;
    }
  }

  result.log.nonfinite_skipped = state.nonfinite_skipped;
  std::vector<int> given_ids = data.given;
  if (given_ids.empty()) {
    for (const auto& s : data.stops) given_ids.push_back(s.id);
  }
  result.log.given_psnr = mean_psnr_at(scene, data.stops, given_ids, config.render);
  result.log.novel_psnr = mean_psnr_at(scene, data.stops, heldout, config.render);
  return result;
}

}  // namespace e3dgs::train
