// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iterator>

#include "e3dgs/binary.hpp"
#include "e3dgs/splat_core.hpp"

namespace e3dgs {

namespace binary {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> data) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace binary

namespace splat {

namespace {
constexpr std::string_view kMagic = "EGS1";
constexpr int kFloatsPerSplat = 14;
}  // namespace

std::vector<unsigned char> encode_checkpoint(const GaussianScene& scene) {
  binary::Writer w;
  w.bytes(kMagic);
  w.le<std::uint64_t>(scene.size());
  for (const auto& g : scene.gaussians) {
    for (int k = 0; k < 3; ++k) w.f32(static_cast<float>(g.mean[k]));
    for (int k = 0; k < 4; ++k) w.f32(static_cast<float>(g.rotation[k]));
    for (int k = 0; k < 3; ++k) w.f32(static_cast<float>(g.log_scale[k]));
    w.f32(static_cast<float>(g.opacity_logit));
    w.f32(static_cast<float>(g.intensity));
    w.f32(0.0f);
    w.f32(0.0f);
  }
  w.f32(static_cast<float>(scene.background));
  return std::move(w.data());
}

GaussianScene decode_checkpoint(std::span<const unsigned char> bytes) {
  binary::Reader r(bytes);
  if (r.remaining() < 12 || r.bytes(4) != kMagic) throw std::runtime_error("checkpoint: bad magic");
  const auto count = r.le<std::uint64_t>();
  if (count > r.remaining() / (4 * kFloatsPerSplat) || r.remaining() != count * 4 * kFloatsPerSplat + 4) {
    throw std::runtime_error("checkpoint: size does not match splat count");
  }
  GaussianScene scene;
  scene.gaussians.resize(count);
  for (auto& g : scene.gaussians) {
    for (int k = 0; k < 3; ++k) g.mean[k] = r.f32();
    for (int k = 0; k < 4; ++k) g.rotation[k] = r.f32();
    for (int k = 0; k < 3; ++k) g.log_scale[k] = r.f32();
    g.opacity_logit = r.f32();
    g.intensity = r.f32();
    r.f32();
    r.f32();
  }
  scene.background = r.f32();
  return scene;
}

void write_checkpoint(const GaussianScene& scene, const std::filesystem::path& path) {
  binary::write_file_atomic(path, encode_checkpoint(scene));
}

GaussianScene read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(binary::read_file(path)); }

}  // namespace splat
}  // namespace e3dgs
