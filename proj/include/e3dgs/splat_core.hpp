// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "e3dgs/image.hpp"

namespace e3dgs::splat {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Rotation matrix of a unit quaternion stored as (w, x, y, z).
Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& q);

/// One grayscale splat in its unconstrained parameterization: the quaternion
/// is normalized on use, scales are exp(log_scale), opacity is
/// sigmoid(opacity_logit).
struct Gaussian3D {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotation = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  double opacity_logit = 0.0;
  double intensity = 0.5;

  double opacity() const { return sigmoid(opacity_logit); }
  Eigen::Vector3d scale() const { return log_scale.array().exp().matrix(); }
  Eigen::Matrix3d rotation_matrix() const { return quaternion_to_matrix(rotation.normalized()); }

  bool operator==(const Gaussian3D&) const = default;
};

struct GaussianScene {
  std::vector<Gaussian3D> gaussians;
  double background = 0.5;

  std::size_t size() const { return gaussians.size(); }
  bool operator==(const GaussianScene&) const = default;
};

/// Pinhole camera, OpenCV axes (x right, y down, z forward). Pixel (x, y) is
/// centered at image coordinates (x, y).
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Eigen::Isometry3d world_to_camera = Eigen::Isometry3d::Identity();

  Resolution resolution() const { return {width, height}; }
  Eigen::Vector3d center() const { return world_to_camera.inverse().translation(); }
  void validate() const;
};

struct RenderSettings {
  double near_plane = 0.01;
  double dilation = 0.3;          // px^2 added to the projected covariance diagonal
  double footprint_sigma = 3.0;   // Mahalanobis cutoff of a splat's support
  double min_transmittance = 1e-4;
  int tile_size = 16;
};

/// R S S^T R^T with S = diag(exp(log_scale)).
Eigen::Matrix3d covariance_3d(const Eigen::Vector4d& rotation, const Eigen::Vector3d& log_scale);

struct ProjectedGaussian {
  Eigen::Vector2d mean2d;
  Eigen::Matrix2d cov2d;  // includes dilation
  double depth = 0.0;     // camera-space z
};

/// Nullopt when the splat is at or behind the near plane.
std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const CameraModel& cam,
                                                  const RenderSettings& settings = {});

struct RenderOutput {
  IntensityImage image;
  TransmittanceMap final_transmittance;
  std::optional<DepthMap> depth;
  /// Hash of every pixel's ordered list of contributing splats. Equal
  /// signatures mean the renders are on the same smooth piece.
  std::uint64_t support_signature = 0;
};

/// Front-to-back alpha compositing of all splats sorted by camera depth
/// (ties broken by index) over the scene background.
RenderOutput render(const GaussianScene& scene, const CameraModel& cam, const RenderSettings& settings = {},
                    bool with_depth = false);

/// Blending-weighted camera depth; uncovered pixels are 0.
DepthMap render_depth(const GaussianScene& scene, const CameraModel& cam, const RenderSettings& settings = {});

struct GaussianGradient {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotation = Eigen::Vector4d::Zero();
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  double opacity_logit = 0.0;
  double intensity = 0.0;
};

struct GradientBuffer {
  std::vector<GaussianGradient> params;
  /// |dLoss/d(mean2d)| in pixels for this view, and whether the splat touched
  /// any pixel. Inputs to densification statistics.
  std::vector<double> screen_grad_norm;
  std::vector<unsigned char> visible;

  explicit GradientBuffer(std::size_t n = 0) { reset(n); }
  std::size_t size() const { return params.size(); }
  void reset(std::size_t n);
  /// Adds another buffer's parameter partials (same cardinality).
  void accumulate(const GradientBuffer& other, double weight = 1.0);
};

/// Exact partials of sum(upstream * image) with respect to every parameter.
GradientBuffer render_backward(const GaussianScene& scene, const CameraModel& cam, const IntensityImage& upstream,
                               const RenderSettings& settings = {});

/// Scene checkpoint ("EGS1"): magic, little-endian u64 count, 14 LE float32
/// per splat (mean 3, quaternion 4, log_scale 3, opacity logit, intensity,
/// 2 padding), background float32.
void write_checkpoint(const GaussianScene& scene, const std::filesystem::path& path);
GaussianScene read_checkpoint(const std::filesystem::path& path);
std::vector<unsigned char> encode_checkpoint(const GaussianScene& scene);
GaussianScene decode_checkpoint(std::span<const unsigned char> bytes);

}  // namespace e3dgs::splat
