// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

namespace e3dgs::oracle {

double ssim_brute_force(const IntensityImage& a, const IntensityImage& b) {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  double w[kSize][kSize];
  double wsum = 0.0;
  for (int j = 0; j < kSize; ++j) {
    for (int i = 0; i < kSize; ++i) {
      const double dx = i - 5, dy = j - 5;
      w[j][i] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      wsum += w[j][i];
    }
  }
  const double c1 = 0.0001, c2 = 0.0009;
  double total = 0.0;
  int windows = 0;
  for (int y0 = 0; y0 + kSize <= a.height(); ++y0) {
    for (int x0 = 0; x0 + kSize <= a.width(); ++x0) {
      double ma = 0, mb = 0;
      for (int j = 0; j < kSize; ++j) {
        for (int i = 0; i < kSize; ++i) {
          ma += w[j][i] / wsum * a(x0 + i, y0 + j);
          mb += w[j][i] / wsum * b(x0 + i, y0 + j);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int j = 0; j < kSize; ++j) {
        for (int i = 0; i < kSize; ++i) {
          const double da = a(x0 + i, y0 + j) - ma;
          const double db = b(x0 + i, y0 + j) - mb;
          va += w[j][i] / wsum * da * da;
          vb += w[j][i] / wsum * db * db;
          cov += w[j][i] / wsum * da * db;
        }
      }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  }
  return total / windows;
}

double ks_statistic_uniform(std::vector<double> samples, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = std::clamp(samples[i] / hi, 0.0, 1.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_critical_001(std::size_t n) {
  const double s = std::sqrt(static_cast<double>(n));
  return 1.628 / (s + 0.12 + 0.11 / s);
}

Eigen::Matrix3d rotation_from_quaternion(Eigen::Vector4d q) {
  q /= q.norm();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r(0, 0) = w * w + x * x - y * y - z * z;
  r(0, 1) = 2 * (x * y - w * z);
  r(0, 2) = 2 * (x * z + w * y);
  r(1, 0) = 2 * (x * y + w * z);
  r(1, 1) = w * w - x * x + y * y - z * z;
  r(1, 2) = 2 * (y * z - w * x);
  r(2, 0) = 2 * (x * z - w * y);
  r(2, 1) = 2 * (y * z + w * x);
  r(2, 2) = w * w - x * x - y * y + z * z;
  return r;
}

Projection project(const splat::Gaussian3D& g, const splat::CameraModel& cam, double near, double dilation) {
  Projection out;
  const Eigen::Matrix3d rw = cam.world_to_camera.linear();
  const Eigen::Vector3d p = rw * g.mean + cam.world_to_camera.translation();
  if (p.z() <= near) return out;
  const Eigen::Matrix3d r = rotation_from_quaternion(g.rotation);
  Eigen::Matrix3d s2 = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) s2(k, k) = std::exp(2.0 * g.log_scale[k]);
  const Eigen::Matrix3d sigma = rw * (r * s2 * r.transpose()) * rw.transpose();
  const double x = p.x(), y = p.y(), z = p.z();
  const double j00 = cam.fx / z, j02 = -cam.fx * x / (z * z);
  const double j11 = cam.fy / z, j12 = -cam.fy * y / (z * z);
  // Entries of J sigma J^T with J = [[j00, 0, j02], [0, j11, j12]].
  out.cov(0, 0) = j00 * j00 * sigma(0, 0) + 2 * j00 * j02 * sigma(0, 2) + j02 * j02 * sigma(2, 2) + dilation;
  out.cov(1, 1) = j11 * j11 * sigma(1, 1) + 2 * j11 * j12 * sigma(1, 2) + j12 * j12 * sigma(2, 2) + dilation;
  out.cov(0, 1) = out.cov(1, 0) =
      j00 * j11 * sigma(0, 1) + j00 * j12 * sigma(0, 2) + j02 * j11 * sigma(2, 1) + j02 * j12 * sigma(2, 2);
  out.u = cam.fx * x / z + cam.cx;
  out.v = cam.fy * y / z + cam.cy;
  out.depth = z;
  out.visible = true;
  return out;
}

BruteRender render_brute_force(const splat::GaussianScene& scene, const splat::CameraModel& cam,
                               const splat::RenderSettings& settings) {
  struct Item {
    int index;
    Projection p;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Projection p = project(scene.gaussians[i], cam, settings.near_plane, settings.dilation);
    if (!p.visible) continue;
    if (!(p.cov.determinant() > 1e-12)) continue;
    items.push_back({static_cast<int>(i), p});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.p.depth < b.p.depth; });

  const Resolution res = cam.resolution();
  BruteRender out{IntensityImage(res), TransmittanceMap(res), DepthMap(res), IntensityImage(res)};
  const double cutoff = settings.footprint_sigma * settings.footprint_sigma;
  for (int y = 0; y < res.height; ++y) {
    for (int x = 0; x < res.width; ++x) {
      double t = 1.0, color = 0.0, depth = 0.0;
      for (const Item& it : items) {
        const Eigen::Vector2d d(x - it.p.u, y - it.p.v);
        const double q = d.dot(it.p.cov.inverse() * d);
        if (q > cutoff) continue;
        const auto& g = scene.gaussians[it.index];
        const double alpha = 1.0 / (1.0 + std::exp(-g.opacity_logit)) * std::exp(-0.5 * q);
        color += g.intensity * alpha * t;
        depth += it.p.depth * alpha * t;
        t *= 1.0 - alpha;
        if (t < settings.min_transmittance) break;
      }
      out.contribution(x, y) = color;
      out.image(x, y) = color + scene.background * t;
      out.transmittance(x, y) = t;
      out.depth(x, y) = depth;
    }
  }
  return out;
}

splat::CameraModel camera_looking_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, int width,
                                     int height, double focal) {
  const Eigen::Vector3d f = (target - eye).normalized();
  Eigen::Vector3d right = f.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();
  right.normalize();
  const Eigen::Vector3d down = f.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = f.transpose();
  splat::CameraModel cam;
  cam.fx = cam.fy = focal;
  cam.cx = (width - 1) / 2.0;
  cam.cy = (height - 1) / 2.0;
  cam.width = width;
  cam.height = height;
  cam.world_to_camera = Eigen::Isometry3d::Identity();
  cam.world_to_camera.linear() = r;
  cam.world_to_camera.translation() = -r * eye;
  return cam;
}

GradientCase random_gradient_case(Rng& rng, int max_count, int size) {
  GradientCase c;
  c.camera.fx = c.camera.fy = 20.0;
  c.camera.cx = c.camera.cy = (size - 1) / 2.0;
  c.camera.width = c.camera.height = size;
  const int n = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_count)));
  c.scene.background = rng.uniform();
  for (int i = 0; i < n; ++i) {
    splat::Gaussian3D g;
    const double z = rng.uniform(2.0, 5.0);
    const double u = rng.uniform(-2.0, size + 1.0);
    const double v = rng.uniform(-2.0, size + 1.0);
    g.mean = {(u - c.camera.cx) * z / c.camera.fx, (v - c.camera.cy) * z / c.camera.fy, z};
    g.rotation = Eigen::Vector4d(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    g.rotation *= rng.uniform(0.5, 1.5) / g.rotation.norm();
    for (int k = 0; k < 3; ++k) g.log_scale[k] = rng.uniform(std::log(0.05), std::log(0.4));
    g.opacity_logit = rng.uniform(-2.0, 2.0);
    g.intensity = rng.uniform();
    c.scene.gaussians.push_back(g);
  }
  c.upstream = IntensityImage({size, size});
  for (auto& v : c.upstream.values()) v = rng.uniform(-1.0, 1.0);
  return c;
}

namespace {

constexpr int kParams = 12;

double& param(splat::Gaussian3D& g, int k) {
  if (k < 3) return g.mean[k];
  if (k < 7) return g.rotation[k - 3];
  if (k < 10) return g.log_scale[k - 7];
  if (k == 10) return g.opacity_logit;
  return g.intensity;
}

double partial(const splat::GaussianGradient& g, int k) {
  if (k < 3) return g.mean[k];
  if (k < 7) return g.rotation[k - 3];
  if (k < 10) return g.log_scale[k - 7];
  if (k == 10) return g.opacity_logit;
  return g.intensity;
}

const char* kParamNames[kParams] = {"mean.x", "mean.y", "mean.z", "rot.w", "rot.x", "rot.y",
                                    "rot.z",  "scale.x", "scale.y", "scale.z", "opacity", "intensity"};

double weighted_sum(const IntensityImage& img, const IntensityImage& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) s += img[i] * w[i];
  return s;
}

}  // namespace

GradientCheckStats check_render_gradients(const GradientCase& c, double step, double rel_tol, double abs_tol) {
  GradientCheckStats stats;
  const auto base = splat::render(c.scene, c.camera);
  const auto grads = splat::render_backward(c.scene, c.camera, c.upstream);
  splat::GaussianScene work = c.scene;
  for (std::size_t i = 0; i < c.scene.size(); ++i) {
    for (int k = 0; k < kParams; ++k) {
      const double analytic = partial(grads.params[i], k);
      double& p = param(work.gaussians[i], k);
      const double p0 = p;
      bool done = false;
      for (double h = step; h >= step / 1024.0 && !done; h /= 4.0) {
        p = p0 + h;
        const auto plus = splat::render(work, c.camera);
        p = p0 - h;
        const auto minus = splat::render(work, c.camera);
        p = p0;
        if (plus.support_signature != base.support_signature || minus.support_signature != base.support_signature) {
          continue;
        }
        const double fd = (weighted_sum(plus.image, c.upstream) - weighted_sum(minus.image, c.upstream)) / (2.0 * h);
        const double err = std::abs(fd - analytic);
        const double rel = err / std::max(std::abs(fd), std::abs(analytic));
        ++stats.checked;
        if (!(err < abs_tol || rel < rel_tol)) {
          ++stats.failed;
          if (stats.first_failure.empty()) {
            std::ostringstream os;
            os << "splat " << i << " " << kParamNames[k] << ": analytic " << analytic << " vs fd " << fd;
            stats.first_failure = os.str();
          }
        }
        if (err >= abs_tol) stats.worst_relative = std::max(stats.worst_relative, rel);
        done = true;
      }
      if (!done) ++stats.skipped;
    }
  }
  return stats;
}

std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double step) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + step;
    const double fp = f(x);
    x[i] = x0 - step;
    const double fm = f(x);
    x[i] = x0;
    out[i] = (fp - fm) / (2.0 * step);
  }
  return out;
}

events::EventStream random_stream(Rng& rng, Resolution res, std::size_t count, events::Micros t_lo,
                                  events::Micros t_hi) {
  std::vector<events::Event> ev(count);
  for (auto& e : ev) {
    e.t = t_lo + static_cast<events::Micros>(rng.index(static_cast<std::uint64_t>(t_hi - t_lo + 1)));
    e.x = static_cast<std::uint16_t>(rng.index(static_cast<std::uint64_t>(res.width)));
    e.y = static_cast<std::uint16_t>(rng.index(static_cast<std::uint64_t>(res.height)));
    e.p = rng.uniform() < 0.5 ? -1 : 1;
  }
  std::stable_sort(ev.begin(), ev.end(), [](const events::Event& a, const events::Event& b) { return a.t < b.t; });
  return events::EventStream(res, std::move(ev));
}

IntensityImage random_image(Rng& rng, Resolution res, double lo, double hi) {
  IntensityImage img(res);
  for (auto& v : img.values()) v = rng.uniform(lo, hi);
  return img;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = std::filesystem::temp_directory_path() /
          ("e3dgs_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace e3dgs::oracle
