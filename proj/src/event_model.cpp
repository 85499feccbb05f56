// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e3dgs/event_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "e3dgs/parallel.hpp"

namespace e3dgs::events {

std::optional<std::size_t> find_invalid_event(Resolution res, std::span<const Event> events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.p != 1 && e.p != -1) return i;
    if (!res.contains(e.x, e.y)) return i;
    if (i > 0 && e.t < events[i - 1].t) return i;
  }
  return std::nullopt;
}

EventStream::EventStream(Resolution res, std::vector<Event> events) : res_(res), events_(std::move(events)) {
  if (auto bad = find_invalid_event(res_, events_)) {
    throw std::invalid_argument("event stream: invalid record at index " + std::to_string(*bad));
  }
}

void EventModelConfig::validate() const {
  if (!(contrast_threshold > 0.0)) throw std::invalid_argument("contrast_threshold must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(intensity_floor > 0.0)) throw std::invalid_argument("intensity_floor must be positive");
}

LogImage log_intensity(const IntensityImage& img, const EventModelConfig& cfg) {
  cfg.validate();
  LogImage out(img.resolution());
  const auto src = img.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = std::log(std::max(src[i], cfg.intensity_floor)) / cfg.gamma;
  }
  return out;
}

EventAccumulation accumulate_events(const EventStream& stream, Micros t0, Micros t1, const EventModelConfig& cfg) {
  if (!(t0 < t1)) throw std::invalid_argument("accumulate_events: window requires t0 < t1");
  cfg.validate();
  EventAccumulation acc{DeltaLogMap(stream.resolution()), false};
  const auto& ev = stream.events();
  if (ev.empty() || t1 < ev.front().t || t0 >= ev.back().t) {
    acc.outside_stream = true;
    return acc;
  }
  auto by_time = [](const Event& e, Micros t) { return e.t <= t; };
  auto first = std::partition_point(ev.begin(), ev.end(), [&](const Event& e) { return by_time(e, t0); });
  auto last = std::partition_point(first, ev.end(), [&](const Event& e) { return by_time(e, t1); });
  // Integer counts first so that adjacent windows add up exactly.
  std::vector<long> counts(stream.resolution().pixels(), 0);
  const auto width = static_cast<std::size_t>(stream.resolution().width);
  for (auto it = first; it != last; ++it) counts[it->y * width + it->x] += it->p;
  auto out = acc.delta.values();
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) * cfg.contrast_threshold;
  return acc;
}

EventStream simulate_motion_events(std::span<const TimedFrame> frames, const EventModelConfig& cfg) {
  cfg.validate();
  if (frames.size() < 2) throw std::invalid_argument("simulate_motion_events: need at least two frames");
  const Resolution res = frames.front().image.resolution();
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (!(frames[k].image.resolution() == res)) {
      throw std::invalid_argument("simulate_motion_events: frame " + std::to_string(k) + " has a different resolution");
    }
    if (frames[k].t <= frames[k - 1].t) {
      throw std::invalid_argument("simulate_motion_events: timestamps must be strictly increasing");
    }
  }

  std::vector<LogImage> logs;
  logs.reserve(frames.size());
  for (const auto& f : frames) logs.push_back(log_intensity(f.image, cfg));

  const double c = cfg.contrast_threshold;
  constexpr double kTol = 1e-12;
  std::vector<std::vector<Event>> rows(static_cast<std::size_t>(res.height));

  parallel_for(rows.size(), [&](std::size_t row) {
    auto& out = rows[row];
    const int y = static_cast<int>(row);
    for (int x = 0; x < res.width; ++x) {
      const double base = logs.front()(x, y);
      long level = 0;  // reference = base + level * C
      for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
        const double la = logs[k](x, y);
        const double lb = logs[k + 1](x, y);
        if (la == lb) continue;
        const Micros ta = frames[k].t;
        const auto dt = static_cast<double>(frames[k + 1].t - ta);
        auto emit = [&](double crossing, std::int8_t p) {
          const double frac = std::clamp((crossing - la) / (lb - la), 0.0, 1.0);
          out.push_back({ta + static_cast<Micros>(std::llround(frac * dt)), static_cast<std::uint16_t>(x),
                         static_cast<std::uint16_t>(y), p});
        };
        if (lb > la) {
          while (lb >= base + static_cast<double>(level + 1) * c - kTol) {
            ++level;
            emit(base + static_cast<double>(level) * c, 1);
          }
        } else {
          while (lb <= base + static_cast<double>(level - 1) * c + kTol) {
            --level;
            emit(base + static_cast<double>(level) * c, -1);
          }
        }
      }
    }
  });

  std::vector<Event> all;
  for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  std::stable_sort(all.begin(), all.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return EventStream(res, std::move(all));
}

}  // namespace e3dgs::events
