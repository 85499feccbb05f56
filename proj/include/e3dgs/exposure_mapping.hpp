// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "e3dgs/event_model.hpp"
#include "e3dgs/image.hpp"

namespace e3dgs::exposure {

/// Aperture transmittance over the opening ramp. Before t_end it follows
/// either t / t_end or a monotone sample table; afterwards it is fully open.
class TransmittanceProfile {
 public:
  enum class Kind { kLinear, kSampled };

  static TransmittanceProfile linear(double t_end);
  /// Rows of (t, TR); t strictly increasing from 0, TR non-decreasing in [0, 1].
  static TransmittanceProfile sampled(std::vector<std::pair<double, double>> samples);

  Kind kind() const { return kind_; }
  double t_end() const { return t_end_; }
  const std::vector<std::pair<double, double>>& samples() const { return samples_; }

 private:
  TransmittanceProfile() = default;

  Kind kind_ = Kind::kLinear;
  double t_end_ = 1.0;
  std::vector<std::pair<double, double>> samples_;
};

/// TR(t) in [0, 1]. Throws for t < 0.
double transmittance_at(const TransmittanceProfile& profile, double t);

/// h(t*) = integral of TR over [0, t*], in seconds of fully-open exposure.
double cumulative_exposure(const TransmittanceProfile& profile, double t_star);

/// Per-pixel time of the initial positive event, relative to the aperture
/// opening, in seconds. Pixels that never fired are invalid.
class TemporalMatrix {
 public:
  TemporalMatrix() = default;
  explicit TemporalMatrix(Resolution res);

  Resolution resolution() const { return res_; }
  std::optional<double> at(int x, int y) const;
  void set(int x, int y, double t_star);
  void invalidate(int x, int y);
  std::size_t valid_count() const;

 private:
  Resolution res_;
  std::vector<double> t_star_;  // negative marks invalid
};

struct ExposureFrame {
  IntensityImage image;  // normalized to [0, 1]
  PixelMask valid;       // 0 where the pixel had no IPE
  int pose_id = -1;

  Resolution resolution() const { return image.resolution(); }
  std::size_t valid_count() const;
};

/// First positive event at or after t_open for every pixel.
TemporalMatrix extract_ipe(const events::EventStream& stream, events::Micros t_open);

struct MappingOptions {
  /// Clip intensity-proportional values at this percentile (e.g. 99.9) before
  /// normalizing. Disabled when unset.
  std::optional<double> percentile_clip;
};

/// I_max = C / h(t*) for valid pixels, then divided by the largest valid value.
/// Throws when no pixel is valid.
ExposureFrame map_temporal_to_intensity(const TemporalMatrix& tm, const TransmittanceProfile& profile,
                                        double contrast_threshold, const MappingOptions& opts = {});

/// Exposure-event sensor for a static view behind an opening aperture. The
/// ramp is split into `levels` equal steps with the mean transmittance of the
/// step held constant across it; a pixel fires a positive event every time
/// I * h(t) passes another multiple of C. Timestamps are relative to t_open.
events::EventStream simulate_exposure_events(const IntensityImage& img, const TransmittanceProfile& profile,
                                             const events::EventModelConfig& cfg, int levels = 100,
                                             events::Micros t_open = 0);

/// Multiplies masked pixels by factor, optionally clipping the result at a
/// saturation ceiling. Unmasked pixels pass through.
IntensityImage scale_foreground(const IntensityImage& img, const PixelMask& mask, double factor,
                                std::optional<double> ceiling = std::nullopt);

}  // namespace e3dgs::exposure
