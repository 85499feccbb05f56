// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "e3dgs/event_model.hpp"
#include "e3dgs/exposure_mapping.hpp"
#include "e3dgs/image.hpp"
#include "e3dgs/random.hpp"
#include "e3dgs/splat_core.hpp"
#include "e3dgs/trajectory.hpp"
#include "e3dgs/training.hpp"

namespace e3dgs::io {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ events

/// EVT1 header: "EVT1", u16 width, u16 height, u64 record count (all LE).
inline constexpr std::size_t kEventHeaderBytes = 16;
/// Record: i64 t (microseconds), u16 x, u16 y, i8 polarity.
inline constexpr std::size_t kEventRecordBytes = 13;

std::vector<unsigned char> encode_events(const events::EventStream& stream);
/// Throws std::runtime_error naming the first offending record.
events::EventStream decode_events(std::span<const unsigned char> bytes);

void write_events(const events::EventStream& stream, const fs::path& path);

/// EVT1, or "t,x,y,p" text when the extension is .csv. CSV files carry no
/// resolution; pass one or it is taken from the largest coordinates.
events::EventStream read_events(const fs::path& path, std::optional<Resolution> csv_resolution = std::nullopt);
events::EventStream parse_events_csv(std::string_view text, std::optional<Resolution> resolution = std::nullopt);

// ------------------------------------------------------------------ images

/// Binary PGM (P5), maxval 65535, big-endian samples; values clamped to [0, 1].
void write_pgm(const IntensityImage& img, const fs::path& path);
IntensityImage read_pgm(const fs::path& path);
std::vector<unsigned char> encode_pgm(const IntensityImage& img);
IntensityImage decode_pgm(std::span<const unsigned char> bytes);

// ------------------------------------------------------------ point clouds

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> intensity;  // empty or one per point
};

/// ASCII PLY with float x, y, z (any order, extra properties ignored) and an
/// optional "intensity" property.
PointCloud parse_ply_points(std::string_view text);
PointCloud read_ply_points(const fs::path& path);
std::string format_ply_points(const PointCloud& cloud);
void write_ply_points(const PointCloud& cloud, const fs::path& path);

struct BoundingBox {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(-1.0);
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(1.0);
};

enum class InitMode { kRandom, kPly };

struct InitSpec {
  InitMode mode = InitMode::kRandom;
  std::size_t count = 1000;  // random mode
  BoundingBox bbox;          // random mode
  const PointCloud* cloud = nullptr;  // ply mode
  double background = 0.5;
};

/// One isotropic splat per point with scale equal to the mean nearest-neighbor
/// distance, opacity 0.1 and intensity 0.5.
splat::GaussianScene init_point_cloud(const InitSpec& spec, Rng& rng);

// ---------------------------------------------------------------- manifest

struct PoseEntry {
  int id = 0;
  double t = 0.0;
};

struct FrameEntry {
  int pose_id = 0;
  std::string image;
  std::string mask;  // optional validity mask image (exposure frames)
};

struct SceneManifest {
  train::Intrinsics intrinsics;
  train::Trajectory trajectory;
  double background = 0.5;
  events::EventModelConfig event_model;
  std::string event_file;
  std::vector<PoseEntry> poses;
  std::vector<FrameEntry> exposure_frames;
  std::vector<FrameEntry> gt_frames;
  std::vector<int> given;
  std::vector<int> novel;
  std::string point_cloud;

  Resolution resolution() const { return intrinsics.resolution(); }
};

/// JSON text to a validated manifest. Throws std::runtime_error for missing
/// keys, non-rigid keyframe matrices (orthonormality residual above 1e-6 or a
/// reflection) and non-increasing timestamps.
SceneManifest parse_manifest(std::string_view json_text);
std::string serialize_manifest(const SceneManifest& manifest);
SceneManifest read_manifest(const fs::path& path);
void write_manifest(const SceneManifest& manifest, const fs::path& path);

/// Loads everything a manifest references (relative to `base_dir`) into
/// training inputs. The initial scene is left empty.
train::TrainingData load_training_data(const SceneManifest& manifest, const fs::path& base_dir);

// --------------------------------------------------------------- synthetic

struct SyntheticSceneSpec {
  std::vector<splat::Gaussian3D> gaussians;  // empty selects the 3-splat toy
  /// Darker than the initial splat intensity, so a fresh initialization is
  /// visible to event supervision.
  double background = 0.25;
  Resolution resolution{64, 64};
  double focal = 80.0;
  train::TurntableTrajectory trajectory;
  int frame_count = 60;  // GT frames driving the motion event simulation
  int stops = 200;       // exposure stops spread over the full rotation
  events::EventModelConfig motion_model;
  double exposure_contrast = 0.01;
  double ramp_duration = 1.0;
  int levels = 100;
  double foreground_scale = 1.0;
  /// Rescale each mapped frame so its background matches the known background.
  bool restore_background_scale = true;
  int point_count = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// The three splats of the default toy scene.
std::vector<splat::Gaussian3D> toy_gaussians();

struct SyntheticScene {
  splat::GaussianScene ground_truth;
  SceneManifest manifest;
  std::vector<IntensityImage> gt_frames;  // one per stop
  events::EventStream motion_events;
  std::vector<exposure::ExposureFrame> exposure_frames;  // one per stop
  PointCloud points;  // samples of the ground-truth splats
};

SyntheticScene generate_synthetic_scene(const SyntheticSceneSpec& spec);

/// Writes the manifest and every referenced file into `dir`.
void write_synthetic_scene(const SyntheticScene& scene, const fs::path& dir);

/// Training inputs taken directly from a generated scene (no file round trip).
train::TrainingData training_data_from(const SyntheticScene& scene);

std::string read_text(const fs::path& path);
void write_text_atomic(const fs::path& path, std::string_view text);

}  // namespace e3dgs::io
