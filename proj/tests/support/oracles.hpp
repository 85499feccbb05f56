// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations written independently of the library, used as
// test oracles. They favor directness over speed.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "e3dgs/event_model.hpp"
#include "e3dgs/image.hpp"
#include "e3dgs/random.hpp"
#include "e3dgs/splat_core.hpp"

namespace e3dgs::oracle {

// ----------------------------------------------------------------- metrics

/// Mean SSIM by explicit double loops over every fully contained 11x11 window.
double ssim_brute_force(const IntensityImage& a, const IntensityImage& b);

// -------------------------------------------------------------- statistics

/// One-sample Kolmogorov-Smirnov statistic of `samples` against U(0, hi).
double ks_statistic_uniform(std::vector<double> samples, double hi);

/// Asymptotic critical value at significance 0.01 for n samples.
double ks_critical_001(std::size_t n);

// ----------------------------------------------------------------- splats

/// Rotation matrix from a (w, x, y, z) quaternion, normalized here.
Eigen::Matrix3d rotation_from_quaternion(Eigen::Vector4d q);

struct Projection {
  bool visible = false;
  double u = 0.0, v = 0.0;  // pixel coordinates
  double depth = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();  // with dilation
};

/// Pinhole projection with the EWA Jacobian, written out term by term.
Projection project(const splat::Gaussian3D& g, const splat::CameraModel& cam, double near = 0.01,
                   double dilation = 0.3);

struct BruteRender {
  IntensityImage image;
  TransmittanceMap transmittance;
  DepthMap depth;
  /// Sum over pixels of the blended splat contributions (without background).
  IntensityImage contribution;
};

/// Per-pixel loop over every splat in depth order, no tiling.
BruteRender render_brute_force(const splat::GaussianScene& scene, const splat::CameraModel& cam,
                               const splat::RenderSettings& settings = {});

/// Camera at `eye` looking at `target` with world z up, OpenCV axes.
splat::CameraModel camera_looking_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, int width,
                                     int height, double focal);

/// Random scene of 1..max_count splats in front of a 16x16 camera placed at
/// the origin looking down +z. Sizes and opacities stay in a range where
/// finite differences are well conditioned.
struct GradientCase {
  splat::GaussianScene scene;
  splat::CameraModel camera;
  IntensityImage upstream;
};
GradientCase random_gradient_case(Rng& rng, int max_count = 32, int size = 16);

// --------------------------------------------------------- finite diffs

struct GradientCheckStats {
  std::size_t checked = 0;
  std::size_t failed = 0;
  /// Partials whose finite-difference stencil crossed a support change at
  /// every tried step; not comparable with the smooth derivative.
  std::size_t skipped = 0;
  double worst_relative = 0.0;
  std::string first_failure;
};

/// Compares every partial of render_backward against central differences of
/// sum(upstream * render) with step `step` on the unconstrained parameters.
/// A stencil that changes the per-pixel splat lists is retried at smaller
/// steps. Passes when relative error < rel_tol or absolute error < abs_tol.
GradientCheckStats check_render_gradients(const GradientCase& c, double step = 1e-4, double rel_tol = 1e-4,
                                          double abs_tol = 1e-7);

/// Central difference of a scalar function of a vector, per coordinate.
std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double step);

// ------------------------------------------------------------------ events

/// Sorted stream of `count` random events in `res`, timestamps spread over
/// [t_lo, t_hi] with duplicates allowed.
events::EventStream random_stream(Rng& rng, Resolution res, std::size_t count, events::Micros t_lo,
                                  events::Micros t_hi);

IntensityImage random_image(Rng& rng, Resolution res, double lo = 0.0, double hi = 1.0);

// ---------------------------------------------------------------- files

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<unsigned char> read_bytes(const std::filesystem::path& path);

}  // namespace e3dgs::oracle
