// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace e3dgs {

struct Resolution {
  int width = 0;
  int height = 0;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool operator==(const Resolution&) const = default;
};

inline std::string to_string(Resolution r) { return std::to_string(r.width) + "x" + std::to_string(r.height); }

/// Row-major grid of doubles. The tag keeps log images, intensity images and
/// brightness-change maps from being mixed up at call sites.
template <class Tag>
class Raster {
 public:
  Raster() = default;
  explicit Raster(Resolution res, double fill = 0.0) : res_(res), data_(res.pixels(), fill) {
    if (res.width < 0 || res.height < 0) {
      throw std::invalid_argument("raster resolution must be non-negative");
    }
  }

  Resolution resolution() const { return res_; }
  int width() const { return res_.width; }
  int height() const { return res_.height; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(res_.width) + static_cast<std::size_t>(x);
  }

  Resolution res_;
  std::vector<double> data_;
};

using IntensityImage = Raster<struct IntensityTag>;
using LogImage = Raster<struct LogTag>;
using DeltaLogMap = Raster<struct DeltaLogTag>;
using TransmittanceMap = Raster<struct TransmittanceTag>;
using DepthMap = Raster<struct DepthTag>;

/// Per-pixel validity, 1 = valid.
using PixelMask = std::vector<unsigned char>;

template <class A, class B>
void require_same_resolution(const A& a, const B& b, const char* what) {
  if (!(a.resolution() == b.resolution())) {
    throw std::invalid_argument(std::string(what) + ": resolution mismatch (" + to_string(a.resolution()) + " vs " +
                                to_string(b.resolution()) + ")");
  }
}

}  // namespace e3dgs
