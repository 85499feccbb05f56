// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "e3dgs/image.hpp"

namespace e3dgs::events {

/// Timestamps are integer microseconds.
using Micros = std::int64_t;

constexpr double kMicrosPerSecond = 1e6;

inline double to_seconds(Micros t) { return static_cast<double>(t) / kMicrosPerSecond; }
inline Micros to_micros(double seconds) { return static_cast<Micros>(std::llround(seconds * kMicrosPerSecond)); }

struct Event {
  Micros t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;

  bool operator==(const Event&) const = default;
};

/// Index of the first event that breaks the stream invariants (time order,
/// bounds, polarity), or nullopt when all hold.
std::optional<std::size_t> find_invalid_event(Resolution res, std::span<const Event> events);

/// Time-sorted events of one sensor. Construction validates every record.
class EventStream {
 public:
  EventStream() = default;
  explicit EventStream(Resolution res) : res_(res) {}
  EventStream(Resolution res, std::vector<Event> events);

  Resolution resolution() const { return res_; }
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  bool operator==(const EventStream&) const = default;

 private:
  Resolution res_;
  std::vector<Event> events_;
};

struct EventModelConfig {
  double contrast_threshold = 0.1;
  double gamma = 2.2;
  double intensity_floor = 1e-6;

  void validate() const;
};

/// ln(max(I, floor)) / gamma per pixel.
LogImage log_intensity(const IntensityImage& img, const EventModelConfig& cfg);

struct EventAccumulation {
  DeltaLogMap delta;
  /// Set when (t0, t1] does not overlap the span covered by the stream.
  bool outside_stream = false;
};

/// Sum of p * C over events with t0 < t <= t1, per pixel.
EventAccumulation accumulate_events(const EventStream& stream, Micros t0, Micros t1, const EventModelConfig& cfg);

struct TimedFrame {
  Micros t = 0;
  IntensityImage image;
};

/// Ideal contrast-threshold sensor driven by a frame sequence. Each pixel
/// keeps a reference log level; every crossing of reference +/- C emits one
/// event at the time obtained by linear interpolation of the log signal
/// between the bracketing frames, and the reference moves to the crossed level.
EventStream simulate_motion_events(std::span<const TimedFrame> frames, const EventModelConfig& cfg);

}  // namespace e3dgs::events
