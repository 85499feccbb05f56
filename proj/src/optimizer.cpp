// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "e3dgs/training.hpp"

namespace e3dgs::train {

LearningRates LrSchedule::at(int iter) const {
  const double ramp = (warmup_iters > 0 && iter < warmup_iters) ? static_cast<double>(iter) / warmup_iters : 1.0;
  LearningRates lr = initial;
  lr.rotation *= ramp;
  lr.scale *= ramp;
  lr.opacity *= ramp;
  lr.intensity *= ramp;
  double decay = 1.0;
  if (iter > warmup_iters) {
    const int span = total_iters - 1 - warmup_iters;
    const double progress = span > 0 ? std::min(1.0, static_cast<double>(iter - warmup_iters) / span) : 1.0;
    decay = std::exp(std::log(final_mean_ratio) * progress);
  }
  lr.mean *= ramp * decay;
  return lr;
}

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-15;

std::array<double, kParamsPerGaussian> flatten(const splat::GaussianGradient& g) {
  return {g.mean.x(),      g.mean.y(),      g.mean.z(),      g.rotation[0],    g.rotation[1], g.rotation[2],
          g.rotation[3],   g.log_scale.x(), g.log_scale.y(), g.log_scale.z(), g.opacity_logit, g.intensity};
}

std::array<double*, kParamsPerGaussian> slots(splat::Gaussian3D& g) {
  return {&g.mean.x(),      &g.mean.y(),      &g.mean.z(),      &g.rotation[0],    &g.rotation[1], &g.rotation[2],
          &g.rotation[3],   &g.log_scale.x(), &g.log_scale.y(), &g.log_scale.z(), &g.opacity_logit, &g.intensity};
}

std::array<double, kParamsPerGaussian> rates(const LearningRates& lr) {
  return {lr.mean,  lr.mean,  lr.mean,  lr.rotation, lr.rotation, lr.rotation,
          lr.rotation, lr.scale, lr.scale, lr.scale,  lr.opacity,  lr.intensity};
}

}  // namespace

void adam_step(splat::GaussianScene& scene, const splat::GradientBuffer& grads, OptimizerState& state,
               const LrSchedule& schedule, int iter) {
  const std::size_t n = scene.size();
  if (grads.size() != n || state.size() != n) throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  const auto lr = rates(schedule.at(iter));
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = flatten(grads.params[i]);
    auto p = slots(scene.gaussians[i]);
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (int k = 0; k < kParamsPerGaussian; ++k) {
      if (!std::isfinite(g[k])) {
        ++state.nonfinite_skipped;
        continue;
      }
      m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
      v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      *p[k] -= lr[k] * mhat / (std::sqrt(vhat) + kEps);
    }
    auto& gs = scene.gaussians[i];
    const double qn = gs.rotation.norm();
    if (qn > 0.0 && std::isfinite(qn)) {
      gs.rotation /= qn;
    } else {
      gs.rotation = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);
    }
    gs.intensity = std::max(0.0, gs.intensity);
  }
}

void DensifyConfig::validate() const {
  if (interval < 1) throw std::invalid_argument("densify: interval must be >= 1");
  if (start_iter < 0 || stop_iter < start_iter) throw std::invalid_argument("densify: need 0 <= start_iter <= stop_iter");
  if (!(grad_threshold >= 0.0)) throw std::invalid_argument("densify: grad_threshold must be >= 0");
  if (!(min_opacity >= 0.0 && min_opacity < 1.0)) throw std::invalid_argument("densify: min_opacity outside [0, 1)");
  if (max_count < 1) throw std::invalid_argument("densify: max_count must be >= 1");
  if (!(percent_dense > 0.0)) throw std::invalid_argument("densify: percent_dense must be positive");
  if (opacity_reset_interval < 0) throw std::invalid_argument("densify: opacity_reset_interval must be >= 0");
}

void DensityStats::reset(std::size_t n) {
  grad_sum.assign(n, 0.0);
  count.assign(n, 0);
}

void DensityStats::add(const splat::GradientBuffer& grads) {
  if (grads.size() != grad_sum.size()) throw std::invalid_argument("DensityStats: size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads.visible[i]) continue;
    grad_sum[i] += grads.screen_grad_norm[i];
    ++count[i];
  }
}

DensifyResult densify_and_prune(splat::GaussianScene& scene, DensityStats& stats, OptimizerState& state,
                                const DensifyConfig& cfg, int iter, double scene_extent, Rng& rng) {
  if (!cfg.due(iter)) throw std::invalid_argument("densify_and_prune: iteration is not a densification step");
  const std::size_t n = scene.size();
  if (stats.grad_sum.size() != n || state.size() != n) throw std::invalid_argument("densify_and_prune: shape mismatch");

  std::vector<double> avg(n, 0.0);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (stats.count[i] > 0) avg[i] = stats.grad_sum[i] / stats.count[i];
    if (stats.count[i] > 0 && avg[i] >= cfg.grad_threshold) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return avg[a] > avg[b]; });
  const std::size_t budget = cfg.max_count > n ? cfg.max_count - n : 0;
  if (candidates.size() > budget) candidates.resize(budget);
  std::sort(candidates.begin(), candidates.end());

  DensifyResult result;
  const double big = cfg.percent_dense * scene_extent;
  std::vector<unsigned char> remove(n, 0);
  std::vector<splat::Gaussian3D> born;
  for (std::size_t i : candidates) {
    const auto& g = scene.gaussians[i];
    if (g.scale().maxCoeff() <= big) {
      born.push_back(g);
      ++result.cloned;
      continue;
    }
    const Eigen::Matrix3d rot = g.rotation_matrix();
    const Eigen::Vector3d s = g.scale();
    for (int c = 0; c < 2; ++c) {
      splat::Gaussian3D child = g;
      const Eigen::Vector3d offset(rng.normal() * s.x(), rng.normal() * s.y(), rng.normal() * s.z());
      child.mean = g.mean + rot * offset;
      child.log_scale = g.log_scale.array() - std::log(1.6);
      born.push_back(child);
    }
    remove[i] = 1;
    ++result.split;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!remove[i] && scene.gaussians[i].opacity() < cfg.min_opacity) {
      remove[i] = 1;
      ++result.pruned;
    }
  }

  std::vector<splat::Gaussian3D> next;
  OptimizerState moved;
  moved.step = state.step;
  moved.nonfinite_skipped = state.nonfinite_skipped;
  next.reserve(n + born.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (remove[i]) continue;
    next.push_back(scene.gaussians[i]);
    moved.m.push_back(state.m[i]);
    moved.v.push_back(state.v[i]);
  }
  for (const auto& g : born) {
    if (g.opacity() < cfg.min_opacity) continue;
    next.push_back(g);
    moved.m.push_back({});
    moved.v.push_back({});
  }
  scene.gaussians = std::move(next);
  state = std::move(moved);
  stats.reset(scene.size());
  return result;
}

void reset_opacity(splat::GaussianScene& scene, OptimizerState& state, double ceiling) {
  const double cap = splat::logit(ceiling);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    auto& g = scene.gaussians[i];
    g.opacity_logit = std::min(g.opacity_logit, cap);
    if (i < state.size()) {
      state.m[i][10] = 0.0;
      state.v[i][10] = 0.0;
    }
  }
}

double camera_extent(const std::vector<splat::CameraModel>& cams) {
  if (cams.empty()) return 1.0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& c : cams) centroid += c.center();
  centroid /= static_cast<double>(cams.size());
  double r = 0.0;
  for (const auto& c : cams) r = std::max(r, (c.center() - centroid).norm());
  return r > 0.0 ? 1.1 * r : 1.0;
}

}  // namespace e3dgs::train
