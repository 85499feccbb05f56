// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "e3dgs/splat_core.hpp"
#include "oracles.hpp"

using namespace e3dgs;
using namespace e3dgs::splat;

namespace {

CameraModel axis_camera(int w, int h, double f) {
  CameraModel cam;
  cam.fx = cam.fy = f;
  cam.cx = (w - 1) / 2.0;
  cam.cy = (h - 1) / 2.0;
  cam.width = w;
  cam.height = h;
  return cam;
}

Gaussian3D splat_at(Eigen::Vector3d mean, double scale, double opacity_logit, double intensity) {
  Gaussian3D g;
  g.mean = mean;
  g.log_scale = Eigen::Vector3d::Constant(std::log(scale));
  g.opacity_logit = opacity_logit;
  g.intensity = intensity;
  return g;
}

Eigen::Vector4d quat_mul(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3], a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1], a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

double max_abs_diff(const IntensityImage& a, const IntensityImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("covariance_3d examples") {
  const Eigen::Vector4d identity(1, 0, 0, 0);
  const Eigen::Vector3d log123(0.0, std::log(2.0), std::log(3.0));
  const auto c = covariance_3d(identity, log123);
  CHECK((c - Eigen::Vector3d(1, 4, 9).asDiagonal().toDenseMatrix()).norm() < 1e-12);

  const double h = std::sqrt(0.5);
  const auto rz = covariance_3d(Eigen::Vector4d(h, 0, 0, h), Eigen::Vector3d(0.0, std::log(2.0), 0.0));
  CHECK((rz - Eigen::Vector3d(4, 1, 1).asDiagonal().toDenseMatrix()).norm() < 1e-12);

  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    const Eigen::Vector3d s(rng.normal(), rng.normal(), rng.normal());
    const auto m = covariance_3d(q, s);
    CHECK(m == m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    Eigen::Vector3d expect = (2.0 * s).array().exp();
    std::sort(expect.data(), expect.data() + 3);
    CHECK((es.eigenvalues() - expect).norm() <= 1e-9 * expect.maxCoeff());
  }
}

TEST_CASE("project_gaussian examples") {
  CameraModel cam = axis_camera(64, 64, 100.0);
  Gaussian3D g;
  g.mean = {0, 0, 2};
  const auto p = project_gaussian(g, cam);
  REQUIRE(p.has_value());
  CHECK(p->cov2d(0, 0) == doctest::Approx(2500.3));
  CHECK(p->cov2d(1, 1) == doctest::Approx(2500.3));
  CHECK(p->cov2d(0, 1) == doctest::Approx(0.0));
  CHECK(p->mean2d.x() == cam.cx);
  CHECK(p->mean2d.y() == cam.cy);
  CHECK(p->depth == 2.0);

  g.mean = {0, 0, 0.01};
  CHECK_FALSE(project_gaussian(g, cam).has_value());
  g.mean = {0, 0, -1};
  CHECK_FALSE(project_gaussian(g, cam).has_value());
}

TEST_CASE("projection agrees with the term-by-term oracle") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto cam = oracle::camera_looking_at({rng.normal() * 3, rng.normal() * 3, rng.normal() * 3}, Eigen::Vector3d::Zero(),
                                               40, 30, 50.0);
    Gaussian3D g;
    g.mean = {rng.normal(), rng.normal(), rng.normal()};
    g.rotation = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    g.log_scale = {rng.normal() - 1, rng.normal() - 1, rng.normal() - 1};
    const auto p = project_gaussian(g, cam);
    const auto o = oracle::project(g, cam);
    REQUIRE(p.has_value() == o.visible);
    if (!o.visible) continue;
    CHECK(std::abs(p->mean2d.x() - o.u) < 1e-9);
    CHECK(std::abs(p->mean2d.y() - o.v) < 1e-9);
    CHECK((p->cov2d - o.cov).norm() <= 1e-9 * o.cov.norm());
  }
}

TEST_CASE("render examples") {
  const auto cam = axis_camera(9, 9, 10.0);
  SUBCASE("empty scene shows the background") {
    GaussianScene scene;
    scene.background = 0.5;
    const auto out = render(scene, cam);
    for (double v : out.image.values()) CHECK(v == 0.5);
    for (double v : out.final_transmittance.values()) CHECK(v == 1.0);
  }
  SUBCASE("single opaque splat") {
    GaussianScene scene;
    scene.background = 0.0;
    scene.gaussians.push_back(splat_at({0, 0, 2}, 0.1, 40.0, 0.8));
    const auto out = render(scene, cam);
    CHECK(out.image(4, 4) == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("two coincident half-transparent splats") {
    GaussianScene scene;
    scene.background = 0.0;
    scene.gaussians.push_back(splat_at({0, 0, 2}, 0.1, 0.0, 1.0));
    scene.gaussians.push_back(splat_at({0, 0, 2.5}, 0.1, 0.0, 0.0));
    CHECK(render(scene, cam).image(4, 4) == doctest::Approx(0.5).epsilon(1e-12));
    std::swap(scene.gaussians[0], scene.gaussians[1]);
    CHECK(render(scene, cam).image(4, 4) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("render matches the brute-force compositor") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = oracle::random_gradient_case(rng, 64, 24);
    RenderSettings settings;
    settings.tile_size = 1 + static_cast<int>(rng.index(20));
    const auto out = render(c.scene, c.camera, settings, true);
    const auto ref = oracle::render_brute_force(c.scene, c.camera, settings);
    CHECK(max_abs_diff(out.image, ref.image) < 1e-12);
    for (std::size_t i = 0; i < ref.image.size(); ++i) {
      CHECK(std::abs(out.final_transmittance[i] - ref.transmittance[i]) < 1e-12);
      CHECK(std::abs((*out.depth)[i] - ref.depth[i]) < 1e-12);
      // image = blended contributions + background * final transmittance
      CHECK(std::abs(out.image[i] - (ref.contribution[i] + c.scene.background * out.final_transmittance[i])) < 1e-12);
    }
  }
}

TEST_CASE("rendered values stay within the background and intensity range") {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    auto c = oracle::random_gradient_case(rng, 32, 16);
    double hi = c.scene.background;
    for (auto& g : c.scene.gaussians) {
      g.intensity *= 3.0;
      hi = std::max(hi, g.intensity);
    }
    const auto out = render(c.scene, c.camera);
    for (double v : out.image.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("equal depths are ordered by index and renders are reproducible") {
  const auto cam = axis_camera(9, 9, 10.0);
  GaussianScene scene;
  scene.background = 0.0;
  scene.gaussians.push_back(splat_at({0, 0, 2}, 0.1, 0.0, 1.0));
  scene.gaussians.push_back(splat_at({0, 0, 2}, 0.1, 0.0, 0.0));
  CHECK(render(scene, cam).image(4, 4) == doctest::Approx(0.5).epsilon(1e-12));
  std::swap(scene.gaussians[0], scene.gaussians[1]);
  CHECK(render(scene, cam).image(4, 4) == doctest::Approx(0.25).epsilon(1e-12));

  Rng rng(5);
  const auto c = oracle::random_gradient_case(rng, 32, 16);
  const auto a = render(c.scene, c.camera);
  const auto b = render(c.scene, c.camera);
  CHECK(a.image == b.image);
  CHECK(a.support_signature == b.support_signature);
  const auto ga = render_backward(c.scene, c.camera, c.upstream);
  const auto gb = render_backward(c.scene, c.camera, c.upstream);
  for (std::size_t i = 0; i < ga.size(); ++i) {
    CHECK(ga.params[i].mean == gb.params[i].mean);
    CHECK(ga.params[i].rotation == gb.params[i].rotation);
    CHECK(ga.params[i].intensity == gb.params[i].intensity);
  }
}

TEST_CASE("a shared rigid motion of scene and camera leaves the image unchanged") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = oracle::random_gradient_case(rng, 32, 16);
    const Eigen::Vector4d qr = Eigen::Vector4d(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = oracle::rotation_from_quaternion(qr);
    t.translation() = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    GaussianScene moved = c.scene;
    for (auto& g : moved.gaussians) {
      g.mean = t * g.mean;
      g.rotation = quat_mul(qr, g.rotation);
    }
    CameraModel cam = c.camera;
    cam.world_to_camera = c.camera.world_to_camera * t.inverse();
    CHECK(max_abs_diff(render(c.scene, c.camera).image, render(moved, cam).image) < 1e-10);
  }
}

TEST_CASE("render_backward examples") {
  const auto cam = axis_camera(15, 15, 10.0);
  GaussianScene scene;
  scene.background = 0.2;
  scene.gaussians.push_back(splat_at({0, 0, 2}, 0.3, 40.0, 0.9));

  const auto zero = render_backward(scene, cam, IntensityImage(cam.resolution(), 0.0));
  CHECK(zero.params[0].mean.norm() == 0.0);
  CHECK(zero.params[0].intensity == 0.0);
  CHECK(zero.params[0].opacity_logit == 0.0);

  const auto ones = render_backward(scene, cam, IntensityImage(cam.resolution(), 1.0));
  // d image / d intensity is the pixel's blending weight; sum over the footprint.
  GaussianScene unit = scene;
  unit.background = 0.0;
  unit.gaussians[0].intensity = 1.0;
  double alpha_sum = 0.0;
  for (double v : oracle::render_brute_force(unit, cam).contribution.values()) alpha_sum += v;
  CHECK(ones.params[0].intensity == doctest::Approx(alpha_sum).epsilon(1e-12));

  scene.gaussians[0].opacity_logit = 0.0;
  const auto g = render_backward(scene, cam, IntensityImage(cam.resolution(), 1.0));
  CHECK(g.params[0].opacity_logit > 0.0);
  const auto fd = oracle::central_differences(
      [&](const std::vector<double>& x) {
        GaussianScene s = scene;
        s.gaussians[0].opacity_logit = x[0];
        double sum = 0.0;
        for (double v : render(s, cam).image.values()) sum += v;
        return sum;
      },
      {0.0}, 1e-5);
  CHECK(fd[0] > 0.0);
  CHECK(g.params[0].opacity_logit == doctest::Approx(fd[0]).epsilon(1e-6));

  CHECK_THROWS_AS(render_backward(scene, cam, IntensityImage({3, 3}, 1.0)), std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(7);
  std::size_t checked = 0;
  for (int trial = 0; trial < 15; ++trial) {
    const auto c = oracle::random_gradient_case(rng, 32, 16);
    const auto stats = oracle::check_render_gradients(c);
    INFO(stats.first_failure);
    CHECK(stats.failed == 0);
    checked += stats.checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("render_depth examples") {
  const auto cam = axis_camera(9, 9, 10.0);
  GaussianScene scene;
  const auto empty_depth = render_depth(scene, cam);
  for (double v : empty_depth.values()) CHECK(v == 0.0);
  scene.gaussians.push_back(splat_at({0, 0, 2}, 0.1, 40.0, 0.5));
  CHECK(render_depth(scene, cam)(4, 4) == doctest::Approx(2.0).epsilon(1e-12));
  scene.gaussians.push_back(splat_at({0, 0, 5}, 0.1, 40.0, 0.5));
  CHECK(render_depth(scene, cam)(4, 4) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gradient buffer accumulation") {
  GradientBuffer a(2), b(2);
  b.params[1].intensity = 2.0;
  b.screen_grad_norm[1] = 1.5;
  b.visible[1] = 1;
  a.accumulate(b, 0.5);
  CHECK(a.params[1].intensity == 1.0);
  CHECK(a.screen_grad_norm[1] == 0.75);
  CHECK(a.visible[1] == 1);
  CHECK_THROWS_AS(a.accumulate(GradientBuffer(3)), std::invalid_argument);
}

TEST_CASE("checkpoint layout and round trip") {
  GaussianScene scene;
  scene.background = 0.25f;
  Rng rng(8);
  for (int i = 0; i < 5; ++i) {
    Gaussian3D g;
    g.mean = {static_cast<float>(rng.normal()), static_cast<float>(rng.normal()), static_cast<float>(rng.normal())};
    g.rotation = {static_cast<float>(rng.normal()), 0.5f, -0.25f, 0.125f};
    g.log_scale = {-1.0f, static_cast<float>(rng.normal()), 0.0f};
    g.opacity_logit = static_cast<float>(rng.normal());
    g.intensity = static_cast<float>(rng.uniform());
    scene.gaussians.push_back(g);
  }
  const auto bytes = encode_checkpoint(scene);
  REQUIRE(bytes.size() == 4 + 8 + 5 * 56 + 4);
  CHECK(std::memcmp(bytes.data(), "EGS1", 4) == 0);
  CHECK(bytes[4] == 5);
  for (int k = 5; k < 12; ++k) CHECK(bytes[k] == 0);
  float first;
  std::memcpy(&first, bytes.data() + 12, 4);
  CHECK(first == static_cast<float>(scene.gaussians[0].mean.x()));
  CHECK(decode_checkpoint(bytes) == scene);

  oracle::TempDir dir("ckpt");
  write_checkpoint(scene, dir / "s.egs");
  CHECK(read_checkpoint(dir / "s.egs") == scene);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), std::runtime_error);
  auto shorter = bytes;
  shorter.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(shorter), std::runtime_error);
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.egs"), std::runtime_error);
}
