// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e3dgs/trajectory.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace e3dgs::train {

namespace {

splat::CameraModel make_camera(const Intrinsics& in, const Eigen::Isometry3d& world_to_camera) {
  splat::CameraModel cam;
  cam.fx = in.fx;
  cam.fy = in.fy;
  cam.cx = in.cx;
  cam.cy = in.cy;
  cam.width = in.width;
  cam.height = in.height;
  cam.world_to_camera = world_to_camera;
  return cam;
}

const std::vector<Keyframe>& checked_keyframes(const KeyframeTrajectory& k) {
  if (k.keyframes.empty()) throw std::invalid_argument("trajectory: no keyframes");
  return k.keyframes;
}

}  // namespace

Eigen::Isometry3d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d up_perp = up - up.dot(forward) * forward;
  if (up_perp.norm() < 1e-12) throw std::invalid_argument("look_at: up is parallel to the viewing direction");
  const Eigen::Vector3d down = -up_perp.normalized();
  const Eigen::Vector3d right = down.cross(forward);
  Eigen::Matrix3d cam_to_world;
  cam_to_world.col(0) = right;
  cam_to_world.col(1) = down;
  cam_to_world.col(2) = forward;
  Eigen::Isometry3d w2c = Eigen::Isometry3d::Identity();
  w2c.linear() = cam_to_world.transpose();
  w2c.translation() = -(cam_to_world.transpose() * eye);
  return w2c;
}

double trajectory_start(const Trajectory& trajectory) {
  return std::visit(
      [](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, TurntableTrajectory>) {
          return t.t_start;
        } else {
          return checked_keyframes(t).front().t;
        }
      },
      trajectory);
}

double trajectory_end(const Trajectory& trajectory) {
  return std::visit(
      [](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, TurntableTrajectory>) {
          return t.t_start + t.span;
        } else {
          return checked_keyframes(t).back().t;
        }
      },
      trajectory);
}

splat::CameraModel pose_at_time(const Trajectory& trajectory, const Intrinsics& intrinsics, double t) {
  if (const auto* tt = std::get_if<TurntableTrajectory>(&trajectory)) {
    const double tc = std::clamp(t, tt->t_start, tt->t_start + tt->span);
    const Eigen::Vector3d axis = tt->axis.normalized();
    const Eigen::Vector3d ref = std::abs(axis.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    const Eigen::Vector3d e1 = (ref - ref.dot(axis) * axis).normalized();
    const Eigen::Vector3d e2 = axis.cross(e1);
    const double theta = (tt->start_azimuth_deg + tt->angular_rate_deg * (tc - tt->t_start)) * std::numbers::pi / 180.0;
    const Eigen::Vector3d eye =
        tt->center + tt->radius * (std::cos(theta) * e1 + std::sin(theta) * e2) + tt->elevation * axis;
    return make_camera(intrinsics, look_at(eye, tt->center, axis));
  }

  const auto& keys = checked_keyframes(std::get<KeyframeTrajectory>(trajectory));
  if (t <= keys.front().t) return make_camera(intrinsics, keys.front().world_to_camera);
  if (t >= keys.back().t) return make_camera(intrinsics, keys.back().world_to_camera);
  auto hi = std::upper_bound(keys.begin(), keys.end(), t, [](double v, const Keyframe& k) { return v < k.t; });
  const Keyframe& b = *hi;
  const Keyframe& a = *(hi - 1);
  if (t == a.t) return make_camera(intrinsics, a.world_to_camera);
  const double f = (t - a.t) / (b.t - a.t);
  const Eigen::Quaterniond qa(a.world_to_camera.linear());
  const Eigen::Quaterniond qb(b.world_to_camera.linear());
  const Eigen::Matrix3d rot = qa.slerp(f, qb).toRotationMatrix();
  const Eigen::Vector3d ca = a.world_to_camera.inverse().translation();
  const Eigen::Vector3d cb = b.world_to_camera.inverse().translation();
  const Eigen::Vector3d center = (1.0 - f) * ca + f * cb;
  Eigen::Isometry3d w2c = Eigen::Isometry3d::Identity();
  w2c.linear() = rot;
  w2c.translation() = -(rot * center);
  return make_camera(intrinsics, w2c);
}

}  // namespace e3dgs::train
