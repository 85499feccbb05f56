// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

// Forward compositing and its adjoint. Both passes build the same sorted,
// tile-binned splat list so the backward pass walks exactly the forward
// per-pixel sequence. Tiles only cull work; order is the global depth order.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "e3dgs/parallel.hpp"
#include "e3dgs/splat_core.hpp"

namespace e3dgs::splat {

namespace {

struct Splat2D {
  int index = 0;
  double depth = 0.0;
  double mx = 0.0, my = 0.0;
  double ca = 0.0, cb = 0.0, cc = 0.0;  // conic (inverse 2D covariance)
  double opacity = 0.0;
  double color = 0.0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

struct Binned {
  std::vector<Splat2D> splats;  // front to back
  int tile = 16;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<int>> tiles;
};

Binned prepare(const GaussianScene& scene, const CameraModel& cam, const RenderSettings& settings) {
  cam.validate();
  Binned b;
  b.tile = std::max(1, settings.tile_size);
  b.tiles_x = (cam.width + b.tile - 1) / b.tile;
  b.tiles_y = (cam.height + b.tile - 1) / b.tile;
  b.tiles.resize(static_cast<std::size_t>(b.tiles_x) * b.tiles_y);
  b.splats.reserve(scene.size());

  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Gaussian3D& g = scene.gaussians[i];
    const auto proj = project_gaussian(g, cam, settings);
    if (!proj) continue;
    const Eigen::Matrix2d& cov = proj->cov2d;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
    if (!(det > 1e-12) || !std::isfinite(det) || !proj->mean2d.allFinite()) continue;
    Splat2D s;
    s.index = static_cast<int>(i);
    s.depth = proj->depth;
    s.mx = proj->mean2d.x();
    s.my = proj->mean2d.y();
    s.ca = cov(1, 1) / det;
    s.cb = -cov(0, 1) / det;
    s.cc = cov(0, 0) / det;
    s.opacity = g.opacity();
    s.color = g.intensity;
    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = settings.footprint_sigma * std::sqrt(lambda_max);
    const double fx0 = std::ceil(s.mx - radius), fx1 = std::floor(s.mx + radius);
    const double fy0 = std::ceil(s.my - radius), fy1 = std::floor(s.my + radius);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 > cam.width - 1 || fy0 > cam.height - 1) continue;
    s.x0 = static_cast<int>(std::max(0.0, fx0));
    s.x1 = static_cast<int>(std::min<double>(cam.width - 1, fx1));
    s.y0 = static_cast<int>(std::max(0.0, fy0));
    s.y1 = static_cast<int>(std::min<double>(cam.height - 1, fy1));
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    b.splats.push_back(s);
  }

  std::sort(b.splats.begin(), b.splats.end(), [](const Splat2D& a, const Splat2D& c) {
    return a.depth < c.depth || (a.depth == c.depth && a.index < c.index);
  });

  for (std::size_t k = 0; k < b.splats.size(); ++k) {
    const Splat2D& s = b.splats[k];
    for (int ty = s.y0 / b.tile; ty <= s.y1 / b.tile; ++ty) {
      for (int tx = s.x0 / b.tile; tx <= s.x1 / b.tile; ++tx) {
        b.tiles[static_cast<std::size_t>(ty) * b.tiles_x + tx].push_back(static_cast<int>(k));
      }
    }
  }
  return b;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return (h ^ v) * kFnvPrime; }

struct Hit {
  int k;       // position in the sorted list
  double g;    // Gaussian falloff exp(-q/2)
  double alpha;
  double t;    // transmittance in front of this splat
  double dx, dy;
};

// Walks the splats covering pixel (x, y) front to back. Returns the final
// transmittance; `visit` sees every composited splat.
template <class Visit>
double composite_pixel(const Binned& b, int x, int y, const RenderSettings& settings, Visit&& visit) {
  const auto& list = b.tiles[static_cast<std::size_t>(y / b.tile) * b.tiles_x + x / b.tile];
  const double cutoff = settings.footprint_sigma * settings.footprint_sigma;
  double t = 1.0;
  for (int k : list) {
    const Splat2D& s = b.splats[k];
    if (x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1) continue;
    const double dx = x - s.mx;
    const double dy = y - s.my;
    const double q = s.ca * dx * dx + 2.0 * s.cb * dx * dy + s.cc * dy * dy;
    if (!(q <= cutoff)) continue;
    const double g = std::exp(-0.5 * q);
    const double alpha = s.opacity * g;
    visit(Hit{k, g, alpha, t, dx, dy});
    t *= 1.0 - alpha;
    if (t < settings.min_transmittance) break;
  }
  return t;
}

}  // namespace

RenderOutput render(const GaussianScene& scene, const CameraModel& cam, const RenderSettings& settings,
                    bool with_depth) {
  const Binned b = prepare(scene, cam, settings);
  const Resolution res = cam.resolution();
  RenderOutput out{IntensityImage(res), TransmittanceMap(res), std::nullopt, 0};
  if (with_depth) out.depth = DepthMap(res);
  std::vector<std::uint64_t> row_hash(static_cast<std::size_t>(b.tiles_y), kFnvOffset);

  parallel_for(static_cast<std::size_t>(b.tiles_y), [&](std::size_t ty) {
    std::uint64_t h = kFnvOffset;
    const int y_end = std::min(cam.height, static_cast<int>(ty + 1) * b.tile);
    for (int y = static_cast<int>(ty) * b.tile; y < y_end; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        double color = 0.0;
        double depth = 0.0;
        std::uint64_t count = 0;
        const double t = composite_pixel(b, x, y, settings, [&](const Hit& hit) {
          const Splat2D& s = b.splats[hit.k];
          const double w = hit.alpha * hit.t;
          color += s.color * w;
          depth += s.depth * w;
          h = mix(h, static_cast<std::uint64_t>(s.index) + 1);
          ++count;
        });
        h = mix(h, count);
        out.image(x, y) = color + scene.background * t;
        out.final_transmittance(x, y) = t;
        if (out.depth) (*out.depth)(x, y) = depth;
      }
    }
    row_hash[ty] = h;
  });

  std::uint64_t sig = kFnvOffset;
  for (auto h : row_hash) sig = mix(sig, h);
  out.support_signature = sig;
  return out;
}

DepthMap render_depth(const GaussianScene& scene, const CameraModel& cam, const RenderSettings& settings) {
  return *render(scene, cam, settings, true).depth;
}

namespace {

// dLoss with respect to the 2D splat quantities, accumulated over pixels.
struct Partial2D {
  double mx = 0.0, my = 0.0;
  double ca = 0.0, cb = 0.0, cc = 0.0;  // cb is the (0,1) entry of the full-matrix gradient
  double opacity = 0.0;
  double color = 0.0;
  unsigned char touched = 0;
};

// Gradient of the quaternion-to-matrix map, contracted with dL/dR.
Eigen::Vector4d quaternion_matrix_vjp(const Eigen::Vector4d& q, const Eigen::Matrix3d& gr) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Vector4d d;
  d[0] = 2 * (-z * gr(0, 1) + y * gr(0, 2) + z * gr(1, 0) - x * gr(1, 2) - y * gr(2, 0) + x * gr(2, 1));
  d[1] = 2 * (y * gr(0, 1) + z * gr(0, 2) + y * gr(1, 0) - 2 * x * gr(1, 1) - w * gr(1, 2) + z * gr(2, 0) +
              w * gr(2, 1) - 2 * x * gr(2, 2));
  d[2] = 2 * (-2 * y * gr(0, 0) + x * gr(0, 1) + w * gr(0, 2) + x * gr(1, 0) + z * gr(1, 2) - w * gr(2, 0) +
              z * gr(2, 1) - 2 * y * gr(2, 2));
  d[3] = 2 * (-2 * z * gr(0, 0) - w * gr(0, 1) + x * gr(0, 2) + w * gr(1, 0) - 2 * z * gr(1, 1) + y * gr(1, 2) +
              x * gr(2, 0) + y * gr(2, 1));
  return d;
}

// Chains 2D partials through projection, covariance and parameterization.
GaussianGradient chain_to_parameters(const Gaussian3D& g, const CameraModel& cam, const RenderSettings& settings,
                                     const Partial2D& p2) {
  GaussianGradient out;
  out.intensity = p2.color;
  const double sig = sigmoid(g.opacity_logit);
  out.opacity_logit = p2.opacity * sig * (1.0 - sig);

  const Eigen::Matrix3d w = cam.world_to_camera.linear();
  const Eigen::Vector3d p = cam.world_to_camera * g.mean;
  const double x = p.x(), y = p.y(), z = p.z();
  const double fx = cam.fx, fy = cam.fy;
  Eigen::Matrix<double, 2, 3> j;
  j << fx / z, 0.0, -fx * x / (z * z),  //
      0.0, fy / z, -fy * y / (z * z);

  const double qnorm = g.rotation.norm();
  const Eigen::Vector4d qhat = g.rotation / qnorm;
  const Eigen::Matrix3d r = quaternion_to_matrix(qhat);
  const Eigen::Vector3d s = g.log_scale.array().exp().matrix();
  const Eigen::Matrix3d m = r * s.asDiagonal();
  const Eigen::Matrix3d sigma = m * m.transpose();
  const Eigen::Matrix3d sigma_cam = w * sigma * w.transpose();
  Eigen::Matrix2d cov = j * sigma_cam * j.transpose();
  cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
  cov.diagonal().array() += settings.dilation;
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
  Eigen::Matrix2d conic;
  conic << cov(1, 1) / det, -cov(0, 1) / det, -cov(0, 1) / det, cov(0, 0) / det;

  Eigen::Matrix2d g_conic;
  g_conic << p2.ca, p2.cb, p2.cb, p2.cc;
  const Eigen::Matrix2d g_cov = -conic * g_conic * conic;
  const Eigen::Matrix3d g_sigma_cam = j.transpose() * g_cov * j;
  const Eigen::Matrix<double, 2, 3> g_j = 2.0 * g_cov * j * sigma_cam;
  const Eigen::Matrix3d g_sigma = w.transpose() * g_sigma_cam * w;
  const Eigen::Matrix3d g_m = 2.0 * g_sigma * m;
  const Eigen::Matrix3d g_r = g_m * s.asDiagonal();
  for (int k = 0; k < 3; ++k) out.log_scale[k] = g_m.col(k).dot(r.col(k)) * s[k];
  const Eigen::Vector4d g_qhat = quaternion_matrix_vjp(qhat, g_r);
  out.rotation = (g_qhat - qhat * qhat.dot(g_qhat)) / qnorm;

  const double z2 = z * z, z3 = z2 * z;
  Eigen::Vector3d g_p;
  g_p.x() = p2.mx * fx / z - g_j(0, 2) * fx / z2;
  g_p.y() = p2.my * fy / z - g_j(1, 2) * fy / z2;
  g_p.z() = -p2.mx * fx * x / z2 - p2.my * fy * y / z2 - g_j(0, 0) * fx / z2 + g_j(0, 2) * 2.0 * fx * x / z3 -
            g_j(1, 1) * fy / z2 + g_j(1, 2) * 2.0 * fy * y / z3;
  out.mean = w.transpose() * g_p;
  return out;
}

}  // namespace

GradientBuffer render_backward(const GaussianScene& scene, const CameraModel& cam, const IntensityImage& upstream,
                               const RenderSettings& settings) {
  if (!(upstream.resolution() == cam.resolution())) {
    throw std::invalid_argument("render_backward: upstream resolution does not match the camera");
  }
  const Binned b = prepare(scene, cam, settings);
  const std::size_t n = b.splats.size();
  // One partial buffer per tile row; summed in row order so the result does
  // not depend on scheduling.
  std::vector<std::vector<Partial2D>> partials(static_cast<std::size_t>(b.tiles_y));

  parallel_for(partials.size(), [&](std::size_t ty) {
    bool any = false;
    const int y_end = std::min(cam.height, static_cast<int>(ty + 1) * b.tile);
    for (int y = static_cast<int>(ty) * b.tile; y < y_end && !any; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        if (upstream(x, y) != 0.0) {
          any = true;
          break;
        }
      }
    }
    if (!any) return;
    auto& acc = partials[ty];
    acc.assign(n, Partial2D{});
    std::vector<Hit> hits;
    for (int y = static_cast<int>(ty) * b.tile; y < y_end; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const double up = upstream(x, y);
        if (up == 0.0) continue;
        hits.clear();
        composite_pixel(b, x, y, settings, [&](const Hit& h) { hits.push_back(h); });
        // behind = (contributions behind splat i + background) / T_{i+1}
        double behind = scene.background;
        for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
          const Splat2D& s = b.splats[it->k];
          Partial2D& p = acc[it->k];
          p.touched = 1;
          p.color += up * it->alpha * it->t;
          const double d_alpha = up * it->t * (s.color - behind);
          behind = s.color * it->alpha + (1.0 - it->alpha) * behind;
          p.opacity += d_alpha * it->g;
          const double d_q = -0.5 * d_alpha * s.opacity * it->g;
          p.mx += -2.0 * d_q * (s.ca * it->dx + s.cb * it->dy);
          p.my += -2.0 * d_q * (s.cb * it->dx + s.cc * it->dy);
          p.ca += d_q * it->dx * it->dx;
          p.cb += d_q * it->dx * it->dy;
          p.cc += d_q * it->dy * it->dy;
        }
      }
    }
  });

  std::vector<Partial2D> total(n);
  for (const auto& row : partials) {
    if (row.empty()) continue;
    for (std::size_t k = 0; k < n; ++k) {
      Partial2D& t = total[k];
      const Partial2D& r = row[k];
      t.mx += r.mx;
      t.my += r.my;
      t.ca += r.ca;
      t.cb += r.cb;
      t.cc += r.cc;
      t.opacity += r.opacity;
      t.color += r.color;
      t.touched |= r.touched;
    }
  }

  GradientBuffer out(scene.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (!total[k].touched) continue;
    const int i = b.splats[k].index;
    out.params[i] = chain_to_parameters(scene.gaussians[i], cam, settings, total[k]);
    out.screen_grad_norm[i] = std::hypot(total[k].mx, total[k].my);
    out.visible[i] = 1;
  }
  return out;
}

}  // namespace e3dgs::splat
