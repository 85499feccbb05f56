// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "e3dgs/binary.hpp"
#include "e3dgs/dataset_io.hpp"

namespace e3dgs::io {

namespace {

// Reason the record at i breaks the stream rules, or empty.
std::string record_problem(Resolution res, const events::Event& e, const events::Event* prev) {
  if (e.p != 1 && e.p != -1) return "polarity " + std::to_string(e.p) + " not in {+1, -1}";
  if (e.x >= res.width || e.y >= res.height) {
    return "pixel (" + std::to_string(e.x) + ", " + std::to_string(e.y) + ") outside " + to_string(res);
  }
  if (prev && e.t < prev->t) return "timestamp " + std::to_string(e.t) + " precedes " + std::to_string(prev->t);
  return {};
}

events::EventStream checked_stream(Resolution res, std::vector<events::Event> evs) {
  for (std::size_t i = 0; i < evs.size(); ++i) {
    const auto problem = record_problem(res, evs[i], i ? &evs[i - 1] : nullptr);
    if (!problem.empty()) throw std::runtime_error("events: record " + std::to_string(i) + ": " + problem);
  }
  return events::EventStream(res, std::move(evs));
}

}  // namespace

std::vector<unsigned char> encode_events(const events::EventStream& stream) {
  binary::Writer w;
  w.bytes("EVT1");
  w.le(static_cast<std::uint16_t>(stream.resolution().width));
  w.le(static_cast<std::uint16_t>(stream.resolution().height));
  w.le(static_cast<std::uint64_t>(stream.size()));
  for (const auto& e : stream.events()) {
    w.le(static_cast<std::int64_t>(e.t));
    w.le(e.x);
    w.le(e.y);
    w.le(e.p);
  }
  return std::move(w.data());
}

events::EventStream decode_events(std::span<const unsigned char> bytes) {
  binary::Reader r(bytes);
  if (bytes.size() < kEventHeaderBytes) throw std::runtime_error("events: file shorter than the 16-byte header");
  if (r.bytes(4) != "EVT1") throw std::runtime_error("events: bad magic (expected EVT1)");
  const Resolution res{r.le<std::uint16_t>(), r.le<std::uint16_t>()};
  const auto count = r.le<std::uint64_t>();
  const std::size_t avail = r.remaining() / kEventRecordBytes;
  if (count > avail) {
    throw std::runtime_error("events: record " + std::to_string(avail) + ": truncated (header declares " +
                             std::to_string(count) + " records)");
  }
  if (r.remaining() != count * kEventRecordBytes) {
    throw std::runtime_error("events: " + std::to_string(r.remaining() - count * kEventRecordBytes) +
                             " trailing bytes after the last record");
  }
  std::vector<events::Event> evs(count);
  for (auto& e : evs) {
    e.t = r.le<std::int64_t>();
    e.x = r.le<std::uint16_t>();
    e.y = r.le<std::uint16_t>();
    e.p = r.le<std::int8_t>();
  }
  return checked_stream(res, std::move(evs));
}

void write_events(const events::EventStream& stream, const fs::path& path) {
  const auto bytes = encode_events(stream);
  binary::write_file_atomic(path, bytes);
}

events::EventStream parse_events_csv(std::string_view text, std::optional<Resolution> resolution) {
  std::vector<events::Event> evs;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    if (first && !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-')) {
      first = false;
      continue;  // header row
    }
    first = false;
    long long f[4];
    const char* p = line.data();
    const char* stop = line.data() + line.size();
    for (int k = 0; k < 4; ++k) {
      while (p < stop && *p == ' ') ++p;
      auto [next, ec] = std::from_chars(p, stop, f[k]);
      if (ec != std::errc()) {
        throw std::runtime_error("events: record " + std::to_string(evs.size()) + ": malformed CSV line");
      }
      p = next;
      while (p < stop && *p == ' ') ++p;
      if (k < 3) {
        if (p >= stop || *p != ',') {
          throw std::runtime_error("events: record " + std::to_string(evs.size()) + ": expected 4 fields");
        }
        ++p;
      }
    }
    if (p != stop) throw std::runtime_error("events: record " + std::to_string(evs.size()) + ": trailing characters");
    if (f[1] < 0 || f[1] > 65535 || f[2] < 0 || f[2] > 65535 || f[3] < -128 || f[3] > 127) {
      throw std::runtime_error("events: record " + std::to_string(evs.size()) + ": field out of range");
    }
    evs.push_back({f[0], static_cast<std::uint16_t>(f[1]), static_cast<std::uint16_t>(f[2]),
                   static_cast<std::int8_t>(f[3])});
  }
  Resolution res;
  if (resolution) {
    res = *resolution;
  } else {
    for (const auto& e : evs) {
      res.width = std::max(res.width, e.x + 1);
      res.height = std::max(res.height, e.y + 1);
    }
  }
  return checked_stream(res, std::move(evs));
}

events::EventStream read_events(const fs::path& path, std::optional<Resolution> csv_resolution) {
  if (path.extension() == ".csv") return parse_events_csv(read_text(path), csv_resolution);
  return decode_events(binary::read_file(path));
}

std::vector<unsigned char> encode_pgm(const IntensityImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n65535\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(out.size() + 2 * img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp(img[i], 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    out.push_back(static_cast<unsigned char>(q >> 8));
    out.push_back(static_cast<unsigned char>(q & 0xFF));
  }
  return out;
}

IntensityImage decode_pgm(std::span<const unsigned char> bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P5") throw std::runtime_error("pgm: not a binary PGM (P5)");
  int w = 0;
  int h = 0;
  int maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw std::runtime_error("pgm: malformed header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw std::runtime_error("pgm: invalid header values");
  ++pos;  // single whitespace before the raster
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * h * bpp;
  if (pos > bytes.size() || bytes.size() - pos < need) throw std::runtime_error("pgm: truncated raster");
  IntensityImage img(Resolution{w, h}, 0.0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const unsigned v = bpp == 2 ? (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1] : bytes[pos + i];
    img[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

void write_pgm(const IntensityImage& img, const fs::path& path) { binary::write_file_atomic(path, encode_pgm(img)); }

IntensityImage read_pgm(const fs::path& path) { return decode_pgm(binary::read_file(path)); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& path, std::string_view text) {
  binary::write_file_atomic(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

}  // namespace e3dgs::io
