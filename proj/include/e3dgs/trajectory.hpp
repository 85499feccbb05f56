// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <variant>
#include <vector>

#include <Eigen/Geometry>

#include "e3dgs/splat_core.hpp"

namespace e3dgs::train {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  Resolution resolution() const { return {width, height}; }
  bool operator==(const Intrinsics&) const = default;
};

/// Camera orbiting `axis` through `center`, always looking at `center`, with
/// azimuth linear in time. Equivalent to a static camera watching an object
/// spin on a rotation stage.
struct TurntableTrajectory {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 4.0;
  double elevation = 0.0;  // camera offset along the axis
  double angular_rate_deg = 36.0;
  double start_azimuth_deg = 0.0;
  double t_start = 0.0;
  double span = 10.0;  // seconds

  bool operator==(const TurntableTrajectory&) const = default;
};

struct Keyframe {
  double t = 0.0;
  Eigen::Isometry3d world_to_camera = Eigen::Isometry3d::Identity();
};

/// Keyframes sorted by strictly increasing time.
struct KeyframeTrajectory {
  std::vector<Keyframe> keyframes;
};

using Trajectory = std::variant<TurntableTrajectory, KeyframeTrajectory>;

double trajectory_start(const Trajectory& trajectory);
double trajectory_end(const Trajectory& trajectory);

/// Camera at time t (seconds), clamped to the trajectory span. Keyframed
/// trajectories slerp the rotation and interpolate the camera center linearly.
/// Throws for an empty keyframe list.
splat::CameraModel pose_at_time(const Trajectory& trajectory, const Intrinsics& intrinsics, double t);

/// World-to-camera transform of a camera at `eye` looking at `target`, with
/// image-up along `up`.
Eigen::Isometry3d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up);

}  // namespace e3dgs::train
