// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "e3dgs/dataset_io.hpp"
#include "json.hpp"

namespace e3dgs::io {

using nlohmann::json;

namespace {

constexpr double kRigidTolerance = 1e-5;

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("manifest: " + what); }

const json& need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing key '") + key + "'");
  return j.at(key);
}

Eigen::Vector3d vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) fail(std::string(what) + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Isometry3d rigid_from_rows(const json& j, std::size_t index) {
  const std::string where = "keyframe " + std::to_string(index);
  if (!j.is_array() || j.size() != 16) fail(where + ": world_to_camera must hold 16 numbers");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = j[static_cast<std::size_t>(4 * r + c)].get<double>();
  }
  if (!m.allFinite()) fail(where + ": non-finite matrix entry");
  const Eigen::Matrix3d rot = m.topLeftCorner<3, 3>();
  const double residual = (rot.transpose() * rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (residual > kRigidTolerance) fail(where + ": rotation is not orthonormal (residual " + std::to_string(residual) + ")");
  if (!(rot.determinant() > 0.0)) fail(where + ": matrix is a reflection");
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > kRigidTolerance) {
    fail(where + ": last row must be 0 0 0 1");
  }
  Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
  iso.linear() = rot;
  iso.translation() = m.topRightCorner<3, 1>();
  return iso;
}

json rows_from_rigid(const Eigen::Isometry3d& iso) {
  const Eigen::Matrix4d m = iso.matrix();
  json out = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out.push_back(m(r, c));
  }
  return out;
}

std::vector<FrameEntry> frames_from(const json& j, bool with_mask, const std::set<int>& pose_ids, const char* what) {
  std::vector<FrameEntry> out;
  if (!j.is_array()) fail(std::string(what) + " must be an array");
  for (const auto& e : j) {
    FrameEntry f;
    f.pose_id = need(e, "pose_id").get<int>();
    f.image = need(e, "image").get<std::string>();
    if (with_mask && e.contains("mask")) f.mask = e.at("mask").get<std::string>();
    if (!pose_ids.contains(f.pose_id)) fail(std::string(what) + ": unknown pose_id " + std::to_string(f.pose_id));
    out.push_back(f);
  }
  return out;
}

}  // namespace

SceneManifest parse_manifest(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");
  static const std::set<std::string> known = {"resolution", "intrinsics", "trajectory",      "background",
                                              "event_model", "event_file", "poses",           "exposure_frames",
                                              "gt_frames",  "split",      "point_cloud"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) fail("unknown key '" + key + "'");
  }

  SceneManifest m;
  try {
    const auto& res = need(j, "resolution");
    m.intrinsics.width = need(res, "width").get<int>();
    m.intrinsics.height = need(res, "height").get<int>();
    if (m.intrinsics.width <= 0 || m.intrinsics.height <= 0) fail("resolution must be positive");
    const auto& in = need(j, "intrinsics");
    m.intrinsics.fx = need(in, "fx").get<double>();
    m.intrinsics.fy = need(in, "fy").get<double>();
    m.intrinsics.cx = need(in, "cx").get<double>();
    m.intrinsics.cy = need(in, "cy").get<double>();
    if (!(m.intrinsics.fx > 0.0 && m.intrinsics.fy > 0.0)) fail("focal lengths must be positive");

    const auto& tj = need(j, "trajectory");
    const auto kind = need(tj, "kind").get<std::string>();
    if (kind == "turntable") {
      train::TurntableTrajectory t;
      t.axis = vec3(need(tj, "axis"), "axis");
      if (t.axis.norm() < 1e-12) fail("turntable axis must be non-zero");
      if (tj.contains("center")) t.center = vec3(tj.at("center"), "center");
      t.radius = need(tj, "radius").get<double>();
      t.angular_rate_deg = need(tj, "angular_rate_deg").get<double>();
      t.span = need(tj, "span").get<double>();
      t.elevation = tj.value("elevation", 0.0);
      t.start_azimuth_deg = tj.value("start_azimuth_deg", 0.0);
      t.t_start = tj.value("t_start", 0.0);
      if (!(t.radius > 0.0)) fail("turntable radius must be positive");
      if (!(t.span > 0.0)) fail("turntable span must be positive");
      m.trajectory = t;
    } else if (kind == "keyframes") {
      train::KeyframeTrajectory k;
      const auto& list = need(tj, "keyframes");
      if (!list.is_array() || list.empty()) fail("keyframes must be a non-empty array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        train::Keyframe kf;
        kf.t = need(list[i], "t").get<double>();
        kf.world_to_camera = rigid_from_rows(need(list[i], "world_to_camera"), i);
        if (!k.keyframes.empty() && !(kf.t > k.keyframes.back().t)) fail("keyframe timestamps must be strictly increasing");
        k.keyframes.push_back(kf);
      }
      m.trajectory = k;
    } else {
      fail("trajectory kind must be 'turntable' or 'keyframes'");
    }

    m.background = j.value("background", 0.5);
    if (j.contains("event_model")) {
      const auto& em = j.at("event_model");
      m.event_model.contrast_threshold = em.value("contrast_threshold", m.event_model.contrast_threshold);
      m.event_model.gamma = em.value("gamma", m.event_model.gamma);
      m.event_model.validate();
    }
    m.event_file = j.value("event_file", std::string());
    m.point_cloud = j.value("point_cloud", std::string());

    std::set<int> ids;
    if (j.contains("poses")) {
      for (const auto& p : j.at("poses")) {
        PoseEntry e{need(p, "id").get<int>(), need(p, "t").get<double>()};
        if (!m.poses.empty() && !(e.t > m.poses.back().t)) fail("pose timestamps must be strictly increasing");
        if (!ids.insert(e.id).second) fail("duplicate pose id " + std::to_string(e.id));
        m.poses.push_back(e);
      }
    }
    if (j.contains("exposure_frames")) m.exposure_frames = frames_from(j.at("exposure_frames"), true, ids, "exposure_frames");
    if (j.contains("gt_frames")) m.gt_frames = frames_from(j.at("gt_frames"), false, ids, "gt_frames");
    if (j.contains("split")) {
      const auto& s = j.at("split");
      m.given = s.value("given", std::vector<int>{});
      m.novel = s.value("novel", std::vector<int>{});
      for (int id : m.given) {
        if (!ids.contains(id)) fail("split references unknown pose " + std::to_string(id));
      }
      for (int id : m.novel) {
        if (!ids.contains(id)) fail("split references unknown pose " + std::to_string(id));
      }
    }
  } catch (const json::exception& e) {
    fail(std::string("wrong value type: ") + e.what());
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return m;
}

std::string serialize_manifest(const SceneManifest& m) {
  json j;
  j["resolution"] = {{"width", m.intrinsics.width}, {"height", m.intrinsics.height}};
  j["intrinsics"] = {{"fx", m.intrinsics.fx}, {"fy", m.intrinsics.fy}, {"cx", m.intrinsics.cx}, {"cy", m.intrinsics.cy}};
  if (const auto* t = std::get_if<train::TurntableTrajectory>(&m.trajectory)) {
    j["trajectory"] = {{"kind", "turntable"},
                       {"axis", to_json(t->axis)},
                       {"center", to_json(t->center)},
                       {"radius", t->radius},
                       {"elevation", t->elevation},
                       {"angular_rate_deg", t->angular_rate_deg},
                       {"start_azimuth_deg", t->start_azimuth_deg},
                       {"t_start", t->t_start},
                       {"span", t->span}};
  } else {
    json list = json::array();
    for (const auto& k : std::get<train::KeyframeTrajectory>(m.trajectory).keyframes) {
      list.push_back({{"t", k.t}, {"world_to_camera", rows_from_rigid(k.world_to_camera)}});
    }
    j["trajectory"] = {{"kind", "keyframes"}, {"keyframes", list}};
  }
  j["background"] = m.background;
  j["event_model"] = {{"contrast_threshold", m.event_model.contrast_threshold}, {"gamma", m.event_model.gamma}};
  j["event_file"] = m.event_file;
  j["poses"] = json::array();
  for (const auto& p : m.poses) j["poses"].push_back({{"id", p.id}, {"t", p.t}});
  j["exposure_frames"] = json::array();
  for (const auto& f : m.exposure_frames) {
    json e = {{"pose_id", f.pose_id}, {"image", f.image}};
    if (!f.mask.empty()) e["mask"] = f.mask;
    j["exposure_frames"].push_back(e);
  }
  j["gt_frames"] = json::array();
  for (const auto& f : m.gt_frames) j["gt_frames"].push_back({{"pose_id", f.pose_id}, {"image", f.image}});
  j["split"] = {{"given", m.given}, {"novel", m.novel}};
  j["point_cloud"] = m.point_cloud;
  return j.dump(2) + "\n";
}

SceneManifest read_manifest(const fs::path& path) { return parse_manifest(read_text(path)); }

void write_manifest(const SceneManifest& manifest, const fs::path& path) {
  write_text_atomic(path, serialize_manifest(manifest));
}

train::TrainingData load_training_data(const SceneManifest& m, const fs::path& base_dir) {
  train::TrainingData d;
  d.trajectory = m.trajectory;
  d.intrinsics = m.intrinsics;
  d.initial.background = m.background;
  if (!m.event_file.empty()) {
    d.motion_events = read_events(base_dir / m.event_file, m.resolution());
    if (d.motion_events->resolution() != m.resolution()) {
      throw std::runtime_error("event file resolution " + to_string(d.motion_events->resolution()) +
                               " does not match the manifest");
    }
  }
  std::map<int, std::size_t> slot;
  for (const auto& p : m.poses) {
    train::Stop s;
    s.id = p.id;
    s.t = p.t;
    s.camera = train::pose_at_time(m.trajectory, m.intrinsics, p.t);
    slot[p.id] = d.stops.size();
    d.stops.push_back(std::move(s));
  }
  auto checked = [&](IntensityImage img, const std::string& name) {
    if (img.resolution() != m.resolution()) throw std::runtime_error(name + ": resolution does not match the manifest");
    return img;
  };
  for (const auto& f : m.exposure_frames) {
    exposure::ExposureFrame frame;
    frame.image = checked(read_pgm(base_dir / f.image), f.image);
    frame.pose_id = f.pose_id;
    frame.valid.assign(frame.image.size(), 1);
    if (!f.mask.empty()) {
      const auto mask = checked(read_pgm(base_dir / f.mask), f.mask);
      for (std::size_t i = 0; i < mask.size(); ++i) frame.valid[i] = mask[i] > 0.5 ? 1 : 0;
    }
    d.stops[slot.at(f.pose_id)].exposure = std::move(frame);
  }
  for (const auto& f : m.gt_frames) d.stops[slot.at(f.pose_id)].reference = checked(read_pgm(base_dir / f.image), f.image);
  d.given = m.given;
  d.novel = m.novel;
  return d;
}

}  // namespace e3dgs::io
