// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include "e3dgs/training.hpp"

namespace e3dgs::train {

void SamplerConfig::validate() const {
  if (n_windows < 1) throw std::invalid_argument("sampler: n_windows must be >= 1");
  if (!(l_max > 0.0)) throw std::invalid_argument("sampler: l_max must be positive");
}

std::pair<double, double> sample_window(Rng& rng, double t_end_of_window, double l_max) {
  if (!(l_max > 0.0)) throw std::invalid_argument("sample_window: l_max must be positive");
  const double length = l_max * (1.0 - rng.uniform());
  return {t_end_of_window - length, t_end_of_window};
}

std::vector<double> window_endpoints(double start, double end, int n_windows) {
  if (n_windows < 1) throw std::invalid_argument("window_endpoints: n_windows must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(n_windows));
  for (int i = 1; i <= n_windows; ++i) out[i - 1] = start + (end - start) * static_cast<double>(i) / n_windows;
  return out;
}

MapLoss motion_event_loss(const DeltaLogMap& pred, const DeltaLogMap& gt, const PixelMask* subset) {
  require_same_resolution(pred, gt, "motion_event_loss");
  if (subset && subset->size() != pred.size()) throw std::invalid_argument("motion_event_loss: subset size mismatch");
  auto used = [&](std::size_t i) { return !subset || (*subset)[i] != 0; };

  MapLoss out{0.0, DeltaLogMap(pred.resolution(), 0.0), false};
  double pp = 0.0;
  double gg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!used(i)) continue;
    pp += pred[i] * pred[i];
    gg += gt[i] * gt[i];
  }
  if (pp == 0.0 && gg == 0.0) return out;
  if (pp == 0.0 || gg == 0.0) {
    out.skipped = true;
    return out;
  }
  const double np = std::sqrt(pp);
  const double ng = std::sqrt(gg);
  double dot = 0.0;  // p_hat . g_hat
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!used(i)) continue;
    const double d = pred[i] / np - gt[i] / ng;
    out.value += d * d;
    dot += (pred[i] / np) * (gt[i] / ng);
  }
  // d/dp ||p/|p| - g_hat||^2 = -2 / |p| * (g_hat - (p_hat . g_hat) p_hat)
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!used(i)) continue;
    out.grad[i] = -2.0 / np * (gt[i] / ng - dot * pred[i] / np);
  }
  return out;
}

ImageLoss exposure_loss(const IntensityImage& pred, const exposure::ExposureFrame& frame) {
  require_same_resolution(pred, frame.image, "exposure_loss");
  if (frame.valid.size() != pred.size()) throw std::invalid_argument("exposure_loss: mask size mismatch");
  const std::size_t n = frame.valid_count();
  if (n == 0) throw std::invalid_argument("exposure_loss: empty mask");
  ImageLoss out{0.0, IntensityImage(pred.resolution(), 0.0)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!frame.valid[i]) continue;
    const double d = pred[i] - frame.image[i];
    out.value += d * d;
    out.grad[i] = 2.0 * d * inv_n;
  }
  out.value *= inv_n;
  return out;
}

double combined_loss(double l_evs, double l_img, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("combined_loss: lambda outside [0, 1]");
  if (lambda == 1.0) return l_evs;
  if (lambda == 0.0) return l_img;
  return lambda * l_evs + (1.0 - lambda) * l_img;
}

DeltaLogMap predicted_delta_log(const splat::GaussianScene& scene, const WindowSpec& window,
                                const events::EventModelConfig& cfg, const splat::RenderSettings& settings) {
  if (!(window.t0 < window.t1)) throw std::invalid_argument("predicted_delta_log: t0 must precede t1");
  const LogImage l1 = events::log_intensity(splat::render(scene, window.cam1, settings).image, cfg);
  const LogImage l0 = events::log_intensity(splat::render(scene, window.cam0, settings).image, cfg);
  DeltaLogMap out(l1.resolution(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = l1[i] - l0[i];
  return out;
}

}  // namespace e3dgs::train
