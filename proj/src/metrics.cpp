// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e3dgs/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace e3dgs::metrics {

double psnr(const IntensityImage& a, const IntensityImage& b, double peak) {
  require_same_resolution(a, b, "psnr");
  if (a.size() == 0) throw std::invalid_argument("psnr: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_kernel() {
  std::array<double, kWindow> k{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += k[i];
  }
  for (auto& v : k) v /= total;
  return k;
}

// Separable "valid" filtering: output is (w - 10) x (h - 10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::array<double, kWindow>& k) {
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const IntensityImage& a, const IntensityImage& b) {
  require_same_resolution(a, b, "ssim");
  const int w = a.width();
  const int h = a.height();
  if (w < kWindow || h < kWindow) throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  static const auto kernel = gaussian_kernel();
  const std::vector<double> va(a.values().begin(), a.values().end());
  const std::vector<double> vb(b.values().begin(), b.values().end());
  std::vector<double> aa(va.size()), bb(va.size()), ab(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = filter_valid(va, w, h, kernel);
  const auto mu_b = filter_valid(vb, w, h, kernel);
  const auto e_aa = filter_valid(aa, w, h, kernel);
  const auto e_bb = filter_valid(bb, w, h, kernel);
  const auto e_ab = filter_valid(ab, w, h, kernel);
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    total += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double MetricReport::mean_psnr() const {
  if (frames.empty()) return 0.0;
  return std::accumulate(frames.begin(), frames.end(), 0.0, [](double s, const FrameMetrics& f) { return s + f.psnr; }) /
         static_cast<double>(frames.size());
}

double MetricReport::mean_ssim() const {
  if (frames.empty()) return 0.0;
  return std::accumulate(frames.begin(), frames.end(), 0.0, [](double s, const FrameMetrics& f) { return s + f.ssim; }) /
         static_cast<double>(frames.size());
}

void MetricReport::add(int frame, const IntensityImage& prediction, const IntensityImage& reference) {
  frames.push_back({frame, psnr(prediction, reference), ssim(prediction, reference)});
}

namespace {

nlohmann::json report_json(const MetricReport& r) {
  nlohmann::json j;
  j["label"] = r.label;
  j["mean_psnr"] = r.mean_psnr();
  j["mean_ssim"] = r.mean_ssim();
  j["frames"] = nlohmann::json::array();
  for (const auto& f : r.frames) j["frames"].push_back({{"frame", f.frame}, {"psnr", f.psnr}, {"ssim", f.ssim}});
  return j;
}

}  // namespace

std::string MetricReport::to_json() const { return report_json(*this).dump(2); }

std::string reports_to_json(const std::vector<MetricReport>& reports) {
  nlohmann::json j;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(report_json(r));
  return j.dump(2);
}

std::string format_table(const std::vector<MetricReport>& reports) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-12s %8s %12s %10s\n", "split", "frames", "PSNR (dB)", "SSIM");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-12s %8zu %12.3f %10.4f\n", r.label.c_str(), r.frames.size(), r.mean_psnr(),
                  r.mean_ssim());
    out += line;
  }
  return out;
}

}  // namespace e3dgs::metrics
