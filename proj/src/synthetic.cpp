// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <stdexcept>

#include "e3dgs/dataset_io.hpp"
#include "e3dgs/parallel.hpp"

namespace e3dgs::io {

namespace {

splat::Gaussian3D make_splat(Eigen::Vector3d mean, Eigen::Vector4d q, Eigen::Vector3d scale, double opacity,
                             double intensity) {
  splat::Gaussian3D g;
  g.mean = mean;
  g.rotation = q.normalized();
  g.log_scale = scale.array().log();
  g.opacity_logit = splat::logit(opacity);
  g.intensity = intensity;
  return g;
}

std::string numbered(const char* dir, int id, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s/stop_%03d%s.pgm", dir, id, suffix);
  return buf;
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  if (frame_count < 2) throw std::invalid_argument("synthetic: frame_count must be >= 2");
  if (stops < 1) throw std::invalid_argument("synthetic: stops must be >= 1");
  if (resolution.width <= 0 || resolution.height <= 0) throw std::invalid_argument("synthetic: invalid resolution");
  if (!(focal > 0.0)) throw std::invalid_argument("synthetic: focal must be positive");
  if (!(trajectory.span > 0.0) || !(trajectory.radius > 0.0)) throw std::invalid_argument("synthetic: invalid trajectory");
  if (!(exposure_contrast > 0.0)) throw std::invalid_argument("synthetic: exposure_contrast must be positive");
  if (!(ramp_duration > 0.0)) throw std::invalid_argument("synthetic: ramp_duration must be positive");
  if (levels < 2) throw std::invalid_argument("synthetic: levels must be >= 2");
  if (!(foreground_scale > 0.0)) throw std::invalid_argument("synthetic: foreground_scale must be positive");
  if (point_count < 0) throw std::invalid_argument("synthetic: point_count must be >= 0");
  motion_model.validate();
}

std::vector<splat::Gaussian3D> toy_gaussians() {
  return {
      make_splat({0.0, 0.0, 0.0}, {0.9, 0.2, 0.3, 0.1}, {0.5, 0.25, 0.35}, 0.95, 0.9),
      make_splat({0.45, 0.2, 0.3}, {0.8, -0.1, 0.4, 0.3}, {0.2, 0.2, 0.45}, 0.9, 0.15),
      make_splat({-0.35, -0.3, -0.25}, {0.7, 0.5, -0.2, 0.4}, {0.3, 0.15, 0.15}, 0.85, 0.7),
  };
}

SyntheticScene generate_synthetic_scene(const SyntheticSceneSpec& spec) {
  spec.validate();
  SyntheticScene out;
  out.ground_truth.gaussians = spec.gaussians.empty() ? toy_gaussians() : spec.gaussians;
  out.ground_truth.background = spec.background;

  SceneManifest& m = out.manifest;
  m.intrinsics = {spec.focal, spec.focal, (spec.resolution.width - 1) / 2.0, (spec.resolution.height - 1) / 2.0,
                  spec.resolution.width, spec.resolution.height};
  m.trajectory = spec.trajectory;
  m.background = spec.background;
  m.event_model = spec.motion_model;
  m.event_file = "events.evt1";
  m.point_cloud = "points.ply";

  const auto& tt = spec.trajectory;
  std::vector<events::TimedFrame> frames(static_cast<std::size_t>(spec.frame_count));
  parallel_for(frames.size(), [&](std::size_t k) {
    const double t = tt.t_start + tt.span * static_cast<double>(k) / (spec.frame_count - 1);
    frames[k].t = events::to_micros(t);
    frames[k].image = splat::render(out.ground_truth, train::pose_at_time(m.trajectory, m.intrinsics, t)).image;
  });
  out.motion_events = events::simulate_motion_events(frames, spec.motion_model);

  const auto profile = exposure::TransmittanceProfile::linear(spec.ramp_duration);
  events::EventModelConfig exposure_model = spec.motion_model;
  exposure_model.contrast_threshold = spec.exposure_contrast;
  const auto n = static_cast<std::size_t>(spec.stops);
  out.gt_frames.resize(n);
  out.exposure_frames.resize(n);
  parallel_for(n, [&](std::size_t k) {
    const double t = tt.t_start + tt.span * static_cast<double>(k) / spec.stops;
    const auto rendered = splat::render(out.ground_truth, train::pose_at_time(m.trajectory, m.intrinsics, t));
    out.gt_frames[k] = rendered.image;
    PixelMask foreground(rendered.image.size());
    PixelMask background(rendered.image.size());
    for (std::size_t i = 0; i < foreground.size(); ++i) {
      foreground[i] = rendered.final_transmittance[i] < 0.5 ? 1 : 0;
      background[i] = rendered.final_transmittance[i] > 0.999 ? 1 : 0;
    }
    IntensityImage observed = rendered.image;
    if (spec.foreground_scale != 1.0) observed = exposure::scale_foreground(observed, foreground, spec.foreground_scale);
    const auto stream = exposure::simulate_exposure_events(observed, profile, exposure_model, spec.levels);
    auto frame = exposure::map_temporal_to_intensity(exposure::extract_ipe(stream, 0), profile, spec.exposure_contrast);
    frame.pose_id = static_cast<int>(k);
    if (spec.restore_background_scale) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < background.size(); ++i) {
        if (background[i] && frame.valid[i]) {
          sum += frame.image[i];
          ++count;
        }
      }
      if (count > 0 && sum > 0.0) {
        const double s = spec.background / (sum / count);
        for (auto& v : frame.image.values()) v = std::min(1.0, v * s);
      }
    }
    out.exposure_frames[k] = std::move(frame);
  });

  for (int k = 0; k < spec.stops; ++k) {
    m.poses.push_back({k, tt.t_start + tt.span * static_cast<double>(k) / spec.stops});
    m.exposure_frames.push_back({k, numbered("exposure", k, ""), numbered("exposure", k, "_mask")});
    m.gt_frames.push_back({k, numbered("gt", k, ""), ""});
    (k % 2 == 1 ? m.given : m.novel).push_back(k);
  }

  Rng rng(spec.seed);
  const auto& gts = out.ground_truth.gaussians;
  for (int i = 0; i < spec.point_count; ++i) {
    const auto& g = gts[rng.index(gts.size())];
    const Eigen::Vector3d s = g.scale();
    const Eigen::Vector3d z(rng.normal() * s.x(), rng.normal() * s.y(), rng.normal() * s.z());
    out.points.points.push_back(g.mean + g.rotation_matrix() * z);
  }
  return out;
}

void write_synthetic_scene(const SyntheticScene& scene, const fs::path& dir) {
  fs::create_directories(dir / "exposure");
  fs::create_directories(dir / "gt");
  const auto& m = scene.manifest;
  write_events(scene.motion_events, dir / m.event_file);
  for (std::size_t k = 0; k < m.exposure_frames.size(); ++k) {
    const auto& frame = scene.exposure_frames[k];
    write_pgm(frame.image, dir / m.exposure_frames[k].image);
    IntensityImage mask(frame.image.resolution(), 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = frame.valid[i] ? 1.0 : 0.0;
    write_pgm(mask, dir / m.exposure_frames[k].mask);
  }
  for (std::size_t k = 0; k < m.gt_frames.size(); ++k) write_pgm(scene.gt_frames[k], dir / m.gt_frames[k].image);
  write_ply_points(scene.points, dir / m.point_cloud);
  splat::write_checkpoint(scene.ground_truth, dir / "ground_truth.egs");
  write_manifest(m, dir / "manifest.json");
}

train::TrainingData training_data_from(const SyntheticScene& scene) {
  const auto& m = scene.manifest;
  train::TrainingData d;
  d.trajectory = m.trajectory;
  d.intrinsics = m.intrinsics;
  d.motion_events = scene.motion_events;
  d.initial.background = m.background;
  for (std::size_t k = 0; k < m.poses.size(); ++k) {
    train::Stop s;
    s.id = m.poses[k].id;
    s.t = m.poses[k].t;
    s.camera = train::pose_at_time(m.trajectory, m.intrinsics, s.t);
    s.exposure = scene.exposure_frames[k];
    s.reference = scene.gt_frames[k];
    d.stops.push_back(std::move(s));
  }
  d.given = m.given;
  d.novel = m.novel;
  return d;
}

}  // namespace e3dgs::io
