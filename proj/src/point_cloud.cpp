// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "e3dgs/dataset_io.hpp"

namespace e3dgs::io {

namespace {

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
};

}  // namespace

PointCloud parse_ply_points(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw std::runtime_error("ply: missing 'ply' magic");
  std::vector<PlyElement> elements;
  bool ascii = false;
  bool ended = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw std::runtime_error("ply: only ASCII PLY is supported (got " + fmt + ")");
      ascii = true;
    } else if (kw == "element") {
      PlyElement e;
      long long n = -1;
      ls >> e.name >> n;
      if (n < 0) throw std::runtime_error("ply: bad element line '" + line + "'");
      e.count = static_cast<std::size_t>(n);
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty()) throw std::runtime_error("ply: property before any element");
      std::string type;
      std::string name;
      ls >> type >> name;
      if (type == "list") {
        if (elements.back().name == "vertex") throw std::runtime_error("ply: list properties on vertices are not supported");
        name = "list";
      }
      elements.back().properties.push_back(name);
    } else if (kw == "end_header") {
      ended = true;
      break;
    }
  }
  if (!ascii) throw std::runtime_error("ply: missing format line");
  if (!ended) throw std::runtime_error("ply: missing end_header");

  PointCloud cloud;
  bool found = false;
  for (const auto& e : elements) {
    if (e.name != "vertex") {
      for (std::size_t i = 0; i < e.count; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("ply: fewer " + e.name + " rows than declared");
      }
      continue;
    }
    found = true;
    int ix = -1, iy = -1, iz = -1, ii = -1;
    for (std::size_t k = 0; k < e.properties.size(); ++k) {
      const auto& p = e.properties[k];
      if (p == "x") ix = static_cast<int>(k);
      if (p == "y") iy = static_cast<int>(k);
      if (p == "z") iz = static_cast<int>(k);
      if (p == "intensity") ii = static_cast<int>(k);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw std::runtime_error("ply: vertex element lacks x, y or z");
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!std::getline(in, line)) {
        throw std::runtime_error("ply: header declares " + std::to_string(e.count) + " vertices, found " + std::to_string(i));
      }
      std::istringstream ls(line);
      std::vector<double> vals(e.properties.size());
      for (auto& v : vals) {
        std::string tok;
        if (!(ls >> tok)) throw std::runtime_error("ply: vertex " + std::to_string(i) + " has too few values");
        try {
          v = std::stod(tok);
        } catch (const std::exception&) {
          throw std::runtime_error("ply: vertex " + std::to_string(i) + " has a non-numeric value");
        }
      }
      const Eigen::Vector3d p(vals[ix], vals[iy], vals[iz]);
      if (!p.allFinite()) throw std::runtime_error("ply: vertex " + std::to_string(i) + " is not finite");
      cloud.points.push_back(p);
      if (ii >= 0) cloud.intensity.push_back(vals[ii]);
    }
    break;
  }
  if (!found) throw std::runtime_error("ply: no vertex element");
  return cloud;
}

PointCloud read_ply_points(const fs::path& path) { return parse_ply_points(read_text(path)); }

std::string format_ply_points(const PointCloud& cloud) {
  const bool with_i = !cloud.intensity.empty();
  if (with_i && cloud.intensity.size() != cloud.points.size()) throw std::invalid_argument("ply: intensity count mismatch");
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n";
  if (with_i) out << "property double intensity\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (with_i) out << ' ' << cloud.intensity[i];
    out << '\n';
  }
  return out.str();
}

void write_ply_points(const PointCloud& cloud, const fs::path& path) { write_text_atomic(path, format_ply_points(cloud)); }

splat::GaussianScene init_point_cloud(const InitSpec& spec, Rng& rng) {
  splat::GaussianScene scene;
  scene.background = spec.background;
  std::vector<Eigen::Vector3d> means;
  if (spec.mode == InitMode::kRandom) {
    if (spec.count < 1) throw std::invalid_argument("init: random mode needs count >= 1");
    if (!(spec.bbox.lo.array() < spec.bbox.hi.array()).all()) throw std::invalid_argument("init: invalid bounding box");
    means.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
      Eigen::Vector3d p;
      for (int a = 0; a < 3; ++a) p[a] = rng.uniform(spec.bbox.lo[a], spec.bbox.hi[a]);
      means.push_back(p);
    }
  } else {
    if (!spec.cloud || spec.cloud->points.empty()) throw std::invalid_argument("init: ply mode needs a non-empty cloud");
    means = spec.cloud->points;
  }

  double scale = 0.0;
  if (means.size() > 1) {
    double total = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < means.size(); ++j) {
        if (i != j) best = std::min(best, (means[i] - means[j]).squaredNorm());
      }
      total += std::sqrt(best);
    }
    scale = total / static_cast<double>(means.size());
  }
  if (!(scale > 1e-7)) scale = spec.mode == InitMode::kRandom ? 0.01 * (spec.bbox.hi - spec.bbox.lo).norm() : 0.01;

  scene.gaussians.reserve(means.size());
  for (const auto& m : means) {
    splat::Gaussian3D g;
    g.mean = m;
    g.log_scale = Eigen::Vector3d::Constant(std::log(scale));
    g.opacity_logit = splat::logit(0.1);
    g.intensity = 0.5;
    scene.gaussians.push_back(g);
  }
  return scene;
}

}  // namespace e3dgs::io
