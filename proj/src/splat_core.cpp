// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "e3dgs/splat_core.hpp"

namespace e3dgs::splat {

Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),   //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

void CameraModel::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw std::invalid_argument("camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: empty image size");
  const Eigen::Matrix3d r = world_to_camera.linear();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 || r.determinant() <= 0.0) {
    throw std::invalid_argument("camera: world_to_camera rotation is not orthonormal");
  }
}

Eigen::Matrix3d covariance_3d(const Eigen::Vector4d& rotation, const Eigen::Vector3d& log_scale) {
  const Eigen::Matrix3d r = quaternion_to_matrix(rotation.normalized());
  const Eigen::Matrix3d m = r * log_scale.array().exp().matrix().asDiagonal();
  Eigen::Matrix3d sigma = m * m.transpose();
  // Exact symmetry regardless of rounding order.
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return sigma;
}

std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const CameraModel& cam,
                                                  const RenderSettings& settings) {
  const Eigen::Vector3d p = cam.world_to_camera * g.mean;
  if (!(p.z() > settings.near_plane)) return std::nullopt;
  const double z = p.z();
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx / z, 0.0, -cam.fx * p.x() / (z * z),  //
      0.0, cam.fy / z, -cam.fy * p.y() / (z * z);
  const Eigen::Matrix3d w = cam.world_to_camera.linear();
  const Eigen::Matrix3d sigma_cam = w * covariance_3d(g.rotation, g.log_scale) * w.transpose();
  ProjectedGaussian out;
  out.mean2d = {cam.fx * p.x() / z + cam.cx, cam.fy * p.y() / z + cam.cy};
  out.cov2d = j * sigma_cam * j.transpose();
  out.cov2d(0, 1) = out.cov2d(1, 0) = 0.5 * (out.cov2d(0, 1) + out.cov2d(1, 0));
  out.cov2d.diagonal().array() += settings.dilation;
  out.depth = z;
  return out;
}

void GradientBuffer::reset(std::size_t n) {
  params.assign(n, GaussianGradient{});
  screen_grad_norm.assign(n, 0.0);
  visible.assign(n, 0);
}

void GradientBuffer::accumulate(const GradientBuffer& other, double weight) {
  if (other.size() != size()) throw std::invalid_argument("gradient buffer: cardinality mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& a = params[i];
    const auto& b = other.params[i];
    a.mean += weight * b.mean;
    a.rotation += weight * b.rotation;
    a.log_scale += weight * b.log_scale;
    a.opacity_logit += weight * b.opacity_logit;
    a.intensity += weight * b.intensity;
    screen_grad_norm[i] += weight * other.screen_grad_norm[i];
    visible[i] = visible[i] | other.visible[i];
  }
}

}  // namespace e3dgs::splat
