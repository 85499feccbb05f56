// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e3dgs/exposure_mapping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace e3dgs::exposure {

TransmittanceProfile TransmittanceProfile::linear(double t_end) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("transmittance profile: t_end must be > 0");
  TransmittanceProfile p;
  p.kind_ = Kind::kLinear;
  p.t_end_ = t_end;
  return p;
}

TransmittanceProfile TransmittanceProfile::sampled(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) throw std::invalid_argument("sampled profile: need at least two rows");
  if (samples.front().first != 0.0) throw std::invalid_argument("sampled profile: first row must be at t = 0");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto [t, tr] = samples[i];
    if (!std::isfinite(t) || !(tr >= 0.0 && tr <= 1.0)) {
      throw std::invalid_argument("sampled profile: row " + std::to_string(i) + " out of range");
    }
    if (i > 0 && (t <= samples[i - 1].first || tr < samples[i - 1].second)) {
      throw std::invalid_argument("sampled profile: row " + std::to_string(i) + " breaks monotonicity");
    }
  }
  TransmittanceProfile p;
  p.kind_ = Kind::kSampled;
  p.t_end_ = samples.back().first;
  p.samples_ = std::move(samples);
  return p;
}

namespace {

// Index of the segment [s[i], s[i+1]] containing t, for 0 <= t <= t_end.
std::size_t segment_of(const std::vector<std::pair<double, double>>& s, double t) {
  auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const auto& row) { return v < row.first; });
  const auto i = static_cast<std::size_t>(std::distance(s.begin(), it));
  return std::min(i == 0 ? 0 : i - 1, s.size() - 2);
}

double interpolate(const std::pair<double, double>& a, const std::pair<double, double>& b, double t) {
  const double w = (t - a.first) / (b.first - a.first);
  return a.second + w * (b.second - a.second);
}

}  // namespace

double transmittance_at(const TransmittanceProfile& profile, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("transmittance_at: t must be >= 0");
  if (t > profile.t_end()) return 1.0;
  if (profile.kind() == TransmittanceProfile::Kind::kLinear) return t / profile.t_end();
  const auto& s = profile.samples();
  const std::size_t i = segment_of(s, t);
  return interpolate(s[i], s[i + 1], t);
}

double cumulative_exposure(const TransmittanceProfile& profile, double t_star) {
  if (!(t_star >= 0.0)) throw std::invalid_argument("cumulative_exposure: t* must be >= 0");
  const double t_end = profile.t_end();
  const double ramp_t = std::min(t_star, t_end);
  double h = 0.0;
  if (profile.kind() == TransmittanceProfile::Kind::kLinear) {
    h = ramp_t * ramp_t / (2.0 * t_end);
  } else {
    const auto& s = profile.samples();
    for (std::size_t i = 0; i + 1 < s.size() && s[i].first < ramp_t; ++i) {
      const double b = std::min(s[i + 1].first, ramp_t);
      const double tr_b = b == s[i + 1].first ? s[i + 1].second : interpolate(s[i], s[i + 1], b);
      h += 0.5 * (s[i].second + tr_b) * (b - s[i].first);
    }
  }
  if (t_star > t_end) h += t_star - t_end;
  return h;
}

TemporalMatrix::TemporalMatrix(Resolution res) : res_(res), t_star_(res.pixels(), -1.0) {}

std::optional<double> TemporalMatrix::at(int x, int y) const {
  const double v = t_star_[static_cast<std::size_t>(y) * res_.width + x];
  if (v < 0.0) return std::nullopt;
  return v;
}

void TemporalMatrix::set(int x, int y, double t_star) {
  if (!(t_star >= 0.0)) throw std::invalid_argument("temporal matrix: t* must be >= 0");
  t_star_[static_cast<std::size_t>(y) * res_.width + x] = t_star;
}

void TemporalMatrix::invalidate(int x, int y) { t_star_[static_cast<std::size_t>(y) * res_.width + x] = -1.0; }

std::size_t TemporalMatrix::valid_count() const {
  return static_cast<std::size_t>(std::count_if(t_star_.begin(), t_star_.end(), [](double v) { return v >= 0.0; }));
}

std::size_t ExposureFrame::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), static_cast<unsigned char>(1)));
}

TemporalMatrix extract_ipe(const events::EventStream& stream, events::Micros t_open) {
  TemporalMatrix tm(stream.resolution());
  for (const auto& e : stream.events()) {
    if (e.p != 1 || e.t < t_open) continue;
    if (tm.at(e.x, e.y)) continue;
    tm.set(e.x, e.y, events::to_seconds(e.t - t_open));
  }
  return tm;
}

ExposureFrame map_temporal_to_intensity(const TemporalMatrix& tm, const TransmittanceProfile& profile,
                                        double contrast_threshold, const MappingOptions& opts) {
  if (!(contrast_threshold > 0.0)) throw std::invalid_argument("map_temporal_to_intensity: C must be positive");
  const Resolution res = tm.resolution();
  ExposureFrame frame{IntensityImage(res), PixelMask(res.pixels(), 0), -1};
  std::vector<double> valid_values;
  for (int y = 0; y < res.height; ++y) {
    for (int x = 0; x < res.width; ++x) {
      const auto t_star = tm.at(x, y);
      if (!t_star || *t_star <= 0.0) continue;
      const double h = cumulative_exposure(profile, *t_star);
      if (!(h > 0.0)) continue;
      const double i_max = contrast_threshold / h;
      frame.image(x, y) = i_max;
      frame.valid[static_cast<std::size_t>(y) * res.width + x] = 1;
      valid_values.push_back(i_max);
    }
  }
  if (valid_values.empty()) throw std::runtime_error("map_temporal_to_intensity: no pixel has an initial positive event");

  double normalizer = *std::max_element(valid_values.begin(), valid_values.end());
  if (opts.percentile_clip) {
    const double pct = std::clamp(*opts.percentile_clip, 0.0, 100.0);
    std::sort(valid_values.begin(), valid_values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(valid_values.size())));
    normalizer = valid_values[std::clamp<std::size_t>(rank, 1, valid_values.size()) - 1];
  }
  auto img = frame.image.values();
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (frame.valid[i]) img[i] = std::min(img[i], normalizer) / normalizer;
  }
  return frame;
}

events::EventStream simulate_exposure_events(const IntensityImage& img, const TransmittanceProfile& profile,
                                             const events::EventModelConfig& cfg, int levels, events::Micros t_open) {
  cfg.validate();
  if (levels < 2) throw std::invalid_argument("simulate_exposure_events: levels must be >= 2");
  const Resolution res = img.resolution();
  const double step = profile.t_end() / levels;
  // Exposure at step boundaries; holding each step's mean transmittance keeps
  // these exact for any profile.
  std::vector<double> boundary(static_cast<std::size_t>(levels) + 1);
  for (int k = 0; k <= levels; ++k) boundary[k] = cumulative_exposure(profile, k == levels ? profile.t_end() : k * step);
  const double h_total = boundary.back();
  const double c = cfg.contrast_threshold;

  std::vector<events::Event> out;
  for (int y = 0; y < res.height; ++y) {
    for (int x = 0; x < res.width; ++x) {
      const double intensity = img(x, y);
      if (!(intensity > 0.0)) continue;
      for (long n = 1;; ++n) {
        const double target = static_cast<double>(n) * c / intensity;  // required h
        if (target > h_total) break;
        auto it = std::lower_bound(boundary.begin() + 1, boundary.end(), target);
        const auto k = static_cast<std::size_t>(std::distance(boundary.begin(), it)) - 1;
        const double rate = (boundary[k + 1] - boundary[k]) / step;
        const double t = static_cast<double>(k) * step + (target - boundary[k]) / rate;
        const events::Micros dt = std::max<events::Micros>(1, events::to_micros(t));
        out.push_back({t_open + dt, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), 1});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const events::Event& a, const events::Event& b) { return a.t < b.t; });
  return events::EventStream(res, std::move(out));
}

IntensityImage scale_foreground(const IntensityImage& img, const PixelMask& mask, double factor,
                                std::optional<double> ceiling) {
  if (!(factor > 0.0)) throw std::invalid_argument("scale_foreground: factor must be positive");
  if (mask.size() != img.size()) throw std::invalid_argument("scale_foreground: mask resolution mismatch");
  IntensityImage out = img;
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!mask[i]) continue;
    v[i] *= factor;
    if (ceiling) v[i] = std::min(v[i], *ceiling);
  }
  return out;
}

}  // namespace e3dgs::exposure
