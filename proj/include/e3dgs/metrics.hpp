// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "e3dgs/image.hpp"

namespace e3dgs::metrics {

constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / MSE), capped at 99 dB when MSE < 1e-10.
double psnr(const IntensityImage& a, const IntensityImage& b, double peak = 1.0);

/// Mean SSIM over all 11x11 Gaussian windows (sigma 1.5) lying fully inside
/// the image; K1 = 0.01, K2 = 0.03, dynamic range 1.
double ssim(const IntensityImage& a, const IntensityImage& b);

struct FrameMetrics {
  int frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::string label;
  std::vector<FrameMetrics> frames;

  double mean_psnr() const;
  double mean_ssim() const;
  void add(int frame, const IntensityImage& prediction, const IntensityImage& reference);

  std::string to_json() const;
};

/// Aligned console table, one row per report (label, frame count, averages).
std::string format_table(const std::vector<MetricReport>& reports);

/// JSON document holding several reports keyed by label.
std::string reports_to_json(const std::vector<MetricReport>& reports);

}  // namespace e3dgs::metrics
