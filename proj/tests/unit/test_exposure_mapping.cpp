// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "e3dgs/exposure_mapping.hpp"
#include "oracles.hpp"

using namespace e3dgs;
using namespace e3dgs::exposure;

namespace {

// Independent trapezoid rule on a fine grid.
double integrate_tr(const TransmittanceProfile& p, double t_star, double dt) {
  const int n = static_cast<int>(std::ceil(t_star / dt));
  if (n == 0) return 0.0;
  const double h = t_star / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += 0.5 * (transmittance_at(p, i * h) + transmittance_at(p, (i + 1) * h)) * h;
  return s;
}

ExposureFrame round_trip(const IntensityImage& img, double c, int levels) {
  events::EventModelConfig cfg;
  cfg.contrast_threshold = c;
  const auto profile = TransmittanceProfile::linear(1.0);
  const auto stream = simulate_exposure_events(img, profile, cfg, levels);
  return map_temporal_to_intensity(extract_ipe(stream, 0), profile, c);
}

}  // namespace

TEST_CASE("transmittance_at examples") {
  const auto lin = TransmittanceProfile::linear(1.0);
  CHECK(transmittance_at(lin, 0.5) == 0.5);
  CHECK(transmittance_at(lin, 0.0) == 0.0);
  CHECK(transmittance_at(lin, 2.0) == 1.0);
  const auto smp = TransmittanceProfile::sampled({{0.0, 0.0}, {0.2, 0.5}, {0.8, 0.6}});
  CHECK(transmittance_at(smp, 1.6) == 1.0);
  CHECK(transmittance_at(smp, 0.1) == doctest::Approx(0.25));
  CHECK(transmittance_at(smp, 0.5) == doctest::Approx(0.55));
  CHECK_THROWS_AS(transmittance_at(lin, -0.1), std::invalid_argument);
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(TransmittanceProfile::linear(0.0), std::invalid_argument);
  CHECK_THROWS_AS(TransmittanceProfile::sampled({{0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(TransmittanceProfile::sampled({{0.1, 0.0}, {0.2, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(TransmittanceProfile::sampled({{0.0, 0.5}, {0.2, 0.4}}), std::invalid_argument);
  CHECK_THROWS_AS(TransmittanceProfile::sampled({{0.0, 0.0}, {0.2, 1.5}}), std::invalid_argument);
}

TEST_CASE("cumulative_exposure examples") {
  const auto lin = TransmittanceProfile::linear(1.0);
  CHECK(cumulative_exposure(lin, 1.0) == 0.5);
  CHECK(cumulative_exposure(lin, 0.5) == 0.125);
  CHECK(cumulative_exposure(lin, 0.0) == 0.0);
  CHECK(cumulative_exposure(lin, 1.5) == doctest::Approx(1.0));
}

TEST_CASE("cumulative exposure matches fine trapezoid integration") {
  const auto lin = TransmittanceProfile::linear(0.7);
  std::vector<std::pair<double, double>> rows;
  for (int i = 0; i <= 70; ++i) rows.push_back({i * 0.01, i / 70.0});
  const auto smp = TransmittanceProfile::sampled(rows);
  double prev = -1.0;
  for (double t = 0.0; t <= 1.0; t += 0.0371) {
    const double h = cumulative_exposure(lin, t);
    // Trapezoid error at the ramp kink is about step^2 / 8.
    CHECK(std::abs(h - integrate_tr(lin, t, 1e-4)) <= 5e-9);
    CHECK(std::abs(cumulative_exposure(smp, t) - h) <= 1e-9);
    CHECK(h >= prev);
    prev = h;
  }
}

TEST_CASE("extract_ipe examples") {
  const Resolution res{3, 1};
  const events::EventStream s(res, {{100000, 0, 0, -1},
                                    {400000, 0, 0, 1},
                                    {500000, 1, 0, -1},
                                    {700000, 0, 0, 1},
                                    {800000, 1, 0, -1}});
  const auto tm = extract_ipe(s, 0);
  REQUIRE(tm.at(0, 0).has_value());
  CHECK(*tm.at(0, 0) == doctest::Approx(0.4));
  CHECK_FALSE(tm.at(1, 0).has_value());
  CHECK_FALSE(tm.at(2, 0).has_value());
  CHECK(extract_ipe(events::EventStream(res), 0).valid_count() == 0);
  // Events before the opening are ignored.
  const auto late = extract_ipe(s, 500000);
  CHECK(*late.at(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("map_temporal_to_intensity examples") {
  const auto lin = TransmittanceProfile::linear(1.0);
  TemporalMatrix tm({2, 1});
  tm.set(0, 0, 1.0);
  tm.set(1, 0, 0.5);
  const auto f = map_temporal_to_intensity(tm, lin, 0.1);
  // Closed form: C / (t^2 / 2) = 0.2 and 0.8, then divided by 0.8.
  CHECK(f.image(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(f.image(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

  TemporalMatrix single({3, 1});
  single.set(1, 0, 0.3);
  const auto fs = map_temporal_to_intensity(single, lin, 0.1);
  CHECK(fs.image(1, 0) == 1.0);
  CHECK(fs.image(0, 0) == 0.0);
  CHECK(fs.valid == PixelMask{0, 1, 0});

  TemporalMatrix equal({4, 4});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) equal.set(x, y, 0.42);
  const auto fe = map_temporal_to_intensity(equal, lin, 0.1);
  for (double v : fe.image.values()) CHECK(v == 1.0);

  CHECK_THROWS_AS(map_temporal_to_intensity(TemporalMatrix({2, 2}), lin, 0.1), std::runtime_error);
}

TEST_CASE("percentile clip caps the normalizer") {
  const auto lin = TransmittanceProfile::linear(1.0);
  TemporalMatrix tm({10, 1});
  for (int x = 0; x < 10; ++x) tm.set(x, 0, 1.0);
  tm.set(9, 0, 0.1);  // hot pixel
  MappingOptions opts;
  opts.percentile_clip = 90.0;
  const auto f = map_temporal_to_intensity(tm, lin, 0.1, opts);
  CHECK(f.image(0, 0) == 1.0);
  CHECK(f.image(9, 0) == 1.0);
}

TEST_CASE("simulate_exposure_events examples") {
  events::EventModelConfig cfg;
  cfg.contrast_threshold = 0.1;
  const auto lin = TransmittanceProfile::linear(1.0);
  IntensityImage img({3, 1});
  img[0] = 0.2;
  img[1] = 0.8;
  img[2] = 0.0;
  const auto s = simulate_exposure_events(img, lin, cfg, 10000);
  const auto tm = extract_ipe(s, 0);
  CHECK(*tm.at(0, 0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(*tm.at(1, 0) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK_FALSE(tm.at(2, 0).has_value());
  for (const auto& e : s.events()) CHECK(e.p == 1);
  // 0.8 * 0.5 / 0.1 = 4 crossings; the last lands exactly on the ramp end.
  std::size_t bright = 0;
  for (const auto& e : s.events()) bright += e.x == 1;
  CHECK(bright == 4);
  CHECK_THROWS_AS(simulate_exposure_events(img, lin, cfg, 1), std::invalid_argument);
}

TEST_CASE("brighter pixels fire earlier") {
  events::EventModelConfig cfg;
  cfg.contrast_threshold = 0.01;
  const auto lin = TransmittanceProfile::linear(1.0);
  IntensityImage img({32, 1});
  for (int x = 0; x < 32; ++x) img[x] = 0.05 + 0.03 * x;
  const auto tm = extract_ipe(simulate_exposure_events(img, lin, cfg, 100), 0);
  for (int x = 1; x < 32; ++x) CHECK(*tm.at(x, 0) < *tm.at(x - 1, 0));
}

TEST_CASE("round trip is proportional to the input") {
  Rng rng(2);
  const auto img = oracle::random_image(rng, {32, 32}, 0.05, 1.0);
  const auto f = round_trip(img, 0.01, 100);
  double peak = 0.0;
  for (double v : img.values()) peak = std::max(peak, v);
  double worst = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    REQUIRE(f.valid[i] == 1);
    worst = std::max(worst, std::abs(f.image[i] - img[i] / peak) / (img[i] / peak));
  }
  CHECK(worst <= 0.02);
}

TEST_CASE("scaling the input leaves the mapped frame unchanged") {
  Rng rng(4);
  const auto img = oracle::random_image(rng, {16, 16}, 0.2, 1.0);
  IntensityImage dim = img;
  for (auto& v : dim.values()) v *= 0.25;
  const auto a = round_trip(img, 0.01, 1000);
  const auto b = round_trip(dim, 0.01, 1000);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(a.image[i] - b.image[i]) <= 0.01 * a.image[i] + 1e-6);
}

TEST_CASE("scale_foreground examples") {
  IntensityImage img({3, 1});
  img[0] = 0.8;
  img[1] = 0.9;
  img[2] = 0.5;
  const PixelMask mask{1, 1, 0};
  CHECK(scale_foreground(img, mask, 1.0) == img);
  const auto low = scale_foreground(img, mask, 0.25);
  CHECK(low[0] == doctest::Approx(0.2));
  CHECK(low[2] == 0.5);
  const auto over = scale_foreground(img, mask, 1.5, 1.0);
  CHECK(over[1] == 1.0);
  CHECK(over[2] == 0.5);
  CHECK_THROWS_AS(scale_foreground(img, mask, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(scale_foreground(img, PixelMask{1}, 2.0), std::invalid_argument);
}
