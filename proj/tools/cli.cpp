// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "e3dgs/dataset_io.hpp"
#include "e3dgs/metrics.hpp"

namespace e3dgs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json default_config() {
  return {
      {"event_model", {{"contrast_threshold", 0.1}, {"gamma", 2.2}}},
      {"render",
       {{"near_plane", 0.01}, {"dilation", 0.3}, {"footprint_sigma", 3.0}, {"min_transmittance", 1e-4}, {"tile_size", 16}}},
      {"synthetic",
       {{"width", 64},
        {"height", 64},
        {"focal", 80.0},
        {"background", 0.25},
        {"frame_count", 60},
        {"stops", 200},
        {"radius", 4.0},
        {"elevation", 0.0},
        {"angular_rate_deg", 36.0},
        {"span", 10.0},
        {"exposure_contrast", 0.01},
        {"ramp_duration", 1.0},
        {"levels", 100},
        {"foreground_scale", 1.0},
        {"restore_background_scale", true},
        {"point_count", 100}}},
      {"exposure", {{"contrast_threshold", 0.01}, {"ramp_duration", 1.0}, {"levels", 100}, {"percentile_clip", 0.0}}},
      {"train",
       {{"mode", "hq"},
        {"lambda", 0.0},
        {"iterations", 30000},
        {"warmup_iters", 500},
        {"lr", {{"mean", 1.6e-4}, {"rotation", 0.001}, {"scale", 0.005}, {"opacity", 0.05}, {"intensity", 0.0025}}},
        {"spatial_lr_scale", true},
        {"densify",
         {{"interval", 100},
          {"start_iter", 500},
          {"stop_iter", 15000},
          {"grad_threshold", 2e-4},
          {"min_opacity", 0.005},
          {"max_count", 20000},
          {"percent_dense", 0.01},
          {"opacity_reset_interval", 3000}}},
        {"sampler", {{"n_windows", 200}, {"l_max", 0.5}}},
        {"pixel_subset", 1.0},
        {"log_interval", 500},
        {"eval_interval", 0},
        {"init", {{"mode", "random"}, {"count", 100}, {"bbox_min", {-1.0, -1.0, -1.0}}, {"bbox_max", {1.0, 1.0, 1.0}}}}}},
  };
}

namespace {

json train_json(const train::TrainConfig& c) {
  return {{"mode", train::to_string(c.mode)},
          {"lambda", c.lambda},
          {"iterations", c.iterations},
          {"warmup_iters", c.warmup_iters},
          {"lr",
           {{"mean", c.lr.mean},
            {"rotation", c.lr.rotation},
            {"scale", c.lr.scale},
            {"opacity", c.lr.opacity},
            {"intensity", c.lr.intensity}}},
          {"densify",
           {{"interval", c.densify.interval},
            {"start_iter", c.densify.start_iter},
            {"stop_iter", c.densify.stop_iter},
            {"grad_threshold", c.densify.grad_threshold},
            {"min_opacity", c.densify.min_opacity},
            {"max_count", c.densify.max_count},
            {"percent_dense", c.densify.percent_dense},
            {"opacity_reset_interval", c.densify.opacity_reset_interval}}}};
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number_integer()) return b.is_number_integer();
  if (a.is_number()) return b.is_number();
  return a.type() == b.type();
}

}  // namespace

void apply_mode_preset(json& config, const std::string& mode) {
  const auto preset = train::TrainConfig::for_mode(train::parse_mode(mode));
  config["train"].merge_patch(train_json(preset));
}

void merge_config(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw std::invalid_argument("config" + (prefix.empty() ? "" : " key '" + prefix + "'") + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw std::invalid_argument("unknown config key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_config(slot, value, path);
    } else if (!same_kind(slot, value)) {
      throw std::invalid_argument("config key '" + path + "' expects " + std::string(slot.type_name()) + ", got " +
                                  value.type_name());
    } else if (slot.is_array() && slot.size() != value.size()) {
      throw std::invalid_argument("config key '" + path + "' expects " + std::to_string(slot.size()) + " values");
    } else {
      slot = value;
    }
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1)) {
    parts.push_back(rest.substr(0, pos));
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw std::invalid_argument("override key '" + key + "' has an empty component");
    patch = json{{*it, patch}};
  }
  merge_config(config, patch);
}

namespace {

events::EventModelConfig event_model_from(const json& c) {
  events::EventModelConfig m;
  m.contrast_threshold = c["event_model"]["contrast_threshold"].get<double>();
  m.gamma = c["event_model"]["gamma"].get<double>();
  m.validate();
  return m;
}

splat::RenderSettings render_from(const json& c) {
  const auto& r = c["render"];
  splat::RenderSettings s;
  s.near_plane = r["near_plane"].get<double>();
  s.dilation = r["dilation"].get<double>();
  s.footprint_sigma = r["footprint_sigma"].get<double>();
  s.min_transmittance = r["min_transmittance"].get<double>();
  s.tile_size = r["tile_size"].get<int>();
  if (!(s.near_plane > 0.0) || !(s.dilation >= 0.0) || !(s.footprint_sigma > 0.0) || !(s.min_transmittance >= 0.0) ||
      s.tile_size < 1) {
    throw std::invalid_argument("render settings out of range");
  }
  return s;
}

train::TrainConfig train_config_from(const json& c, std::uint64_t seed) {
  const auto& t = c["train"];
  train::TrainConfig cfg;
  cfg.mode = train::parse_mode(t["mode"].get<std::string>());
  cfg.lambda = t["lambda"].get<double>();
  cfg.iterations = t["iterations"].get<int>();
  cfg.warmup_iters = t["warmup_iters"].get<int>();
  cfg.lr.mean = t["lr"]["mean"].get<double>();
  cfg.lr.rotation = t["lr"]["rotation"].get<double>();
  cfg.lr.scale = t["lr"]["scale"].get<double>();
  cfg.lr.opacity = t["lr"]["opacity"].get<double>();
  cfg.lr.intensity = t["lr"]["intensity"].get<double>();
  cfg.spatial_lr_scale = t["spatial_lr_scale"].get<bool>();
  const auto& d = t["densify"];
  cfg.densify.interval = d["interval"].get<int>();
  cfg.densify.start_iter = d["start_iter"].get<int>();
  cfg.densify.stop_iter = d["stop_iter"].get<int>();
  cfg.densify.grad_threshold = d["grad_threshold"].get<double>();
  cfg.densify.min_opacity = d["min_opacity"].get<double>();
  const auto max_count = d["max_count"].get<long long>();
  if (max_count < 1) throw std::invalid_argument("train.densify.max_count must be >= 1");
  cfg.densify.max_count = static_cast<std::size_t>(max_count);
  cfg.densify.percent_dense = d["percent_dense"].get<double>();
  cfg.densify.opacity_reset_interval = d["opacity_reset_interval"].get<int>();
  cfg.sampler.n_windows = t["sampler"]["n_windows"].get<int>();
  cfg.sampler.l_max = t["sampler"]["l_max"].get<double>();
  cfg.pixel_subset = t["pixel_subset"].get<double>();
  cfg.log_interval = t["log_interval"].get<int>();
  cfg.eval_interval = t["eval_interval"].get<int>();
  cfg.event_model = event_model_from(c);
  cfg.render = render_from(c);
  cfg.seed = seed;
  cfg.validate();
  const auto init_mode = t["init"]["mode"].get<std::string>();
  if (init_mode != "random" && init_mode != "ply") throw std::invalid_argument("train.init.mode must be 'random' or 'ply'");
  if (t["init"]["count"].get<long long>() < 1) throw std::invalid_argument("train.init.count must be >= 1");
  return cfg;
}

io::SyntheticSceneSpec synthetic_from(const json& c, std::uint64_t seed) {
  const auto& s = c["synthetic"];
  io::SyntheticSceneSpec spec;
  spec.resolution = {s["width"].get<int>(), s["height"].get<int>()};
  spec.focal = s["focal"].get<double>();
  spec.background = s["background"].get<double>();
  spec.frame_count = s["frame_count"].get<int>();
  spec.stops = s["stops"].get<int>();
  spec.trajectory.radius = s["radius"].get<double>();
  spec.trajectory.elevation = s["elevation"].get<double>();
  spec.trajectory.angular_rate_deg = s["angular_rate_deg"].get<double>();
  spec.trajectory.span = s["span"].get<double>();
  spec.motion_model = event_model_from(c);
  spec.exposure_contrast = s["exposure_contrast"].get<double>();
  spec.ramp_duration = s["ramp_duration"].get<double>();
  spec.levels = s["levels"].get<int>();
  spec.foreground_scale = s["foreground_scale"].get<double>();
  spec.restore_background_scale = s["restore_background_scale"].get<bool>();
  spec.point_count = s["point_count"].get<int>();
  spec.seed = seed;
  spec.validate();
  return spec;
}

// Exclusive marker file guarding an output directory for one invocation.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".e3dgs.lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw std::runtime_error("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

std::string frame_name(const char* stem, int id, const char* suffix = "") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d%s.pgm", stem, id, suffix);
  return buf;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw std::runtime_error(std::string("missing required input ") + flag);
}

const io::PoseEntry& find_pose(const io::SceneManifest& m, int id) {
  for (const auto& p : m.poses) {
    if (p.id == id) return p;
  }
  throw std::runtime_error("manifest has no pose with id " + std::to_string(id));
}

int run_make_synthetic(const Command& cmd, std::ostream& out) {
  const auto spec = synthetic_from(cmd.config, cmd.seed);
  const auto scene = io::generate_synthetic_scene(spec);
  io::write_synthetic_scene(scene, cmd.out_dir);
  out << "wrote " << (fs::path(cmd.out_dir) / "manifest.json").string() << ": " << scene.motion_events.size()
      << " motion events, " << scene.exposure_frames.size() << " exposure stops\n";
  return kExitOk;
}

int run_simulate(const Command& cmd, std::ostream& out) {
  const auto& c = cmd.config;
  if (cmd.kind == "exposure") {
    require(cmd.image, "--image");
    const auto img = io::read_pgm(cmd.image);
    events::EventModelConfig model = event_model_from(c);
    model.contrast_threshold = c["exposure"]["contrast_threshold"].get<double>();
    const auto profile = exposure::TransmittanceProfile::linear(c["exposure"]["ramp_duration"].get<double>());
    const auto stream = exposure::simulate_exposure_events(img, profile, model, c["exposure"]["levels"].get<int>());
    const fs::path dst = fs::path(cmd.out_dir) / "exposure_events.evt1";
    io::write_events(stream, dst);
    out << "wrote " << stream.size() << " exposure events to " << dst.string() << "\n";
    return kExitOk;
  }
  if (cmd.kind != "motion") throw std::runtime_error("simulate --kind must be 'motion' or 'exposure'");
  require(cmd.checkpoint, "--checkpoint");
  require(cmd.manifest, "--manifest");
  const auto scene = splat::read_checkpoint(cmd.checkpoint);
  const auto manifest = io::read_manifest(cmd.manifest);
  const int frames = c["synthetic"]["frame_count"].get<int>();
  const double t0 = train::trajectory_start(manifest.trajectory);
  const double t1 = train::trajectory_end(manifest.trajectory);
  const auto settings = render_from(c);
  std::vector<events::TimedFrame> seq(static_cast<std::size_t>(frames));
  for (int k = 0; k < frames; ++k) {
    const double t = t0 + (t1 - t0) * k / (frames - 1);
    seq[k].t = events::to_micros(t);
    seq[k].image = splat::render(scene, train::pose_at_time(manifest.trajectory, manifest.intrinsics, t), settings).image;
  }
  const auto stream = events::simulate_motion_events(seq, event_model_from(c));
  const fs::path dst = fs::path(cmd.out_dir) / "events.evt1";
  io::write_events(stream, dst);
  out << "wrote " << stream.size() << " motion events to " << dst.string() << "\n";
  return kExitOk;
}

int run_map_exposure(const Command& cmd, std::ostream& out) {
  require(cmd.events, "--events");
  const auto& e = cmd.config["exposure"];
  const auto stream = io::read_events(cmd.events);
  const auto profile = exposure::TransmittanceProfile::linear(e["ramp_duration"].get<double>());
  exposure::MappingOptions opts;
  const double clip = e["percentile_clip"].get<double>();
  if (clip > 0.0) opts.percentile_clip = clip;
  const auto frame = exposure::map_temporal_to_intensity(exposure::extract_ipe(stream, 0), profile,
                                                         e["contrast_threshold"].get<double>(), opts);
  IntensityImage mask(frame.image.resolution(), 0.0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = frame.valid[i] ? 1.0 : 0.0;
  io::write_pgm(frame.image, fs::path(cmd.out_dir) / "mapped.pgm");
  io::write_pgm(mask, fs::path(cmd.out_dir) / "mapped_mask.pgm");
  out << "mapped " << frame.valid_count() << " of " << frame.image.size() << " pixels\n";
  return kExitOk;
}

int run_train(const Command& cmd, std::ostream& out) {
  require(cmd.manifest, "--manifest");
  const auto cfg = train_config_from(cmd.config, cmd.seed);
  const auto manifest = io::read_manifest(cmd.manifest);
  const fs::path base = fs::path(cmd.manifest).parent_path();
  auto data = io::load_training_data(manifest, base);

  const auto& init = cmd.config["train"]["init"];
  io::InitSpec spec;
  spec.background = manifest.background;
  io::PointCloud cloud;
  if (init["mode"].get<std::string>() == "ply") {
    if (manifest.point_cloud.empty()) throw std::runtime_error("train.init.mode is 'ply' but the manifest names no point_cloud");
    cloud = io::read_ply_points(base / manifest.point_cloud);
    spec.mode = io::InitMode::kPly;
    spec.cloud = &cloud;
  } else {
    spec.mode = io::InitMode::kRandom;
    spec.count = init["count"].get<std::size_t>();
    for (int a = 0; a < 3; ++a) {
      spec.bbox.lo[a] = init["bbox_min"][a].get<double>();
      spec.bbox.hi[a] = init["bbox_max"][a].get<double>();
    }
  }
  Rng rng(cmd.seed);
  data.initial = io::init_point_cloud(spec, rng);

  const auto result = train::train(data, cfg);
  splat::write_checkpoint(result.scene, fs::path(cmd.out_dir) / "scene.egs");
  io::write_text_atomic(fs::path(cmd.out_dir) / "train_log.txt", result.log.to_text(false));
  io::write_text_atomic(fs::path(cmd.out_dir) / "config.json", cmd.config.dump(2) + "\n");
  out << result.log.to_text(true);
  out << "wrote " << (fs::path(cmd.out_dir) / "scene.egs").string() << " (" << result.scene.size() << " splats)\n";
  return kExitOk;
}

int run_render(const Command& cmd, std::ostream& out) {
  require(cmd.checkpoint, "--checkpoint");
  require(cmd.manifest, "--manifest");
  if (!cmd.frame) throw std::runtime_error("missing required input --frame");
  const auto scene = splat::read_checkpoint(cmd.checkpoint);
  const auto manifest = io::read_manifest(cmd.manifest);
  const auto& pose = find_pose(manifest, *cmd.frame);
  const auto cam = train::pose_at_time(manifest.trajectory, manifest.intrinsics, pose.t);
  const auto r = splat::render(scene, cam, render_from(cmd.config), cmd.depth);
  const fs::path dst = fs::path(cmd.out_dir) / frame_name("frame", pose.id);
  io::write_pgm(r.image, dst);
  out << "wrote " << dst.string() << "\n";
  if (cmd.depth) {
    // Depth is stored normalized by its maximum; the scale goes to the console.
    double zmax = 0.0;
    for (double z : r.depth->values()) zmax = std::max(zmax, z);
    IntensityImage d(r.depth->resolution(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = zmax > 0.0 ? (*r.depth)[i] / zmax : 0.0;
    const fs::path ddst = fs::path(cmd.out_dir) / frame_name("frame", pose.id, "_depth");
    io::write_pgm(d, ddst);
    out << "wrote " << ddst.string() << " (depth scale " << zmax << ")\n";
  }
  return kExitOk;
}

int run_eval(const Command& cmd, std::ostream& out) {
  require(cmd.checkpoint, "--checkpoint");
  require(cmd.manifest, "--manifest");
  if (cmd.split != "given" && cmd.split != "novel" && cmd.split != "both") {
    throw std::runtime_error("--split must be given, novel or both");
  }
  const auto scene = splat::read_checkpoint(cmd.checkpoint);
  const auto manifest = io::read_manifest(cmd.manifest);
  if (manifest.gt_frames.empty()) throw std::runtime_error("manifest lists no gt_frames to evaluate against");
  const fs::path base = fs::path(cmd.manifest).parent_path();
  const auto settings = render_from(cmd.config);

  std::vector<metrics::MetricReport> reports;
  auto evaluate = [&](const std::string& label, const std::vector<int>& ids) {
    metrics::MetricReport report{label, {}};
    for (const auto& f : manifest.gt_frames) {
      if (std::find(ids.begin(), ids.end(), f.pose_id) == ids.end()) continue;
      const auto& pose = find_pose(manifest, f.pose_id);
      const auto cam = train::pose_at_time(manifest.trajectory, manifest.intrinsics, pose.t);
      report.add(f.pose_id, splat::render(scene, cam, settings).image, io::read_pgm(base / f.image));
    }
    reports.push_back(report);
  };
  std::vector<int> given = manifest.given;
  if (given.empty()) {
    for (const auto& p : manifest.poses) given.push_back(p.id);
  }
  if (cmd.split != "novel") evaluate("given", given);
  if (cmd.split != "given") evaluate("novel", manifest.novel);
  io::write_text_atomic(fs::path(cmd.out_dir) / "metrics.json", metrics::reports_to_json(reports) + "\n");
  out << metrics::format_table(reports);
  return kExitOk;
}

}  // namespace

ParseResult parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Event-camera Gaussian splatting toolkit", "e3dgs"};
  app.require_subcommand(1);
  Command cmd;
  std::string mode;

  struct Sub {
    CLI::App* app;
    Subcommand kind;
  };
  std::vector<Sub> subs;
  auto add = [&](const char* name, const char* desc, Subcommand kind) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("--config", cmd.config_path, "JSON config file")->check(CLI::ExistingFile);
    s->add_option("--set", cmd.overrides, "Override a config value, e.g. train.iterations=500")->take_all();
    s->add_option("--out", cmd.out_dir, "Output directory")->capture_default_str();
    s->add_option("--seed", cmd.seed, "Random seed")->capture_default_str();
    subs.push_back({s, kind});
    return s;
  };

  auto* synth = add("make-synthetic", "Generate the toy turntable dataset", Subcommand::kMakeSynthetic);
  (void)synth;
  auto* sim = add("simulate", "Simulate motion events from a scene or exposure events from an image", Subcommand::kSimulate);
  sim->add_option("--kind", cmd.kind, "motion or exposure")->check(CLI::IsMember({"motion", "exposure"}))->capture_default_str();
  sim->add_option("--checkpoint", cmd.checkpoint, "Scene checkpoint (motion)");
  sim->add_option("--manifest", cmd.manifest, "Scene manifest (motion)");
  sim->add_option("--image", cmd.image, "Intensity image, P5 PGM (exposure)");
  auto* map = add("map-exposure", "Map exposure events to an intensity frame", Subcommand::kMapExposure);
  map->add_option("--events", cmd.events, "Exposure event file (EVT1 or CSV)")->required();
  auto* tr = add("train", "Train a scene from a manifest", Subcommand::kTrain);
  tr->add_option("--manifest", cmd.manifest, "Scene manifest")->required();
  tr->add_option("--mode", mode, "fast, hq or hybrid")->check(CLI::IsMember({"fast", "hq", "hybrid"}));
  auto* rd = add("render", "Render one manifest pose", Subcommand::kRender);
  rd->add_option("--checkpoint", cmd.checkpoint, "Scene checkpoint")->required();
  rd->add_option("--manifest", cmd.manifest, "Scene manifest")->required();
  rd->add_option("--frame", cmd.frame, "Pose id")->required();
  rd->add_flag("--depth", cmd.depth, "Also write the depth map");
  auto* ev = add("eval", "PSNR / SSIM against the manifest's reference frames", Subcommand::kEval);
  ev->add_option("--checkpoint", cmd.checkpoint, "Scene checkpoint")->required();
  ev->add_option("--manifest", cmd.manifest, "Scene manifest")->required();
  ev->add_option("--split", cmd.split, "given, novel or both")->check(CLI::IsMember({"given", "novel", "both"}))->capture_default_str();

  ParseResult result;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = app.exit(e, out, err);
    result.exit_code = code == 0 ? kExitOk : kExitUsage;
    result.output = code == 0 ? out.str() : err.str();
    return result;
  }
  for (const auto& s : subs) {
    if (s.app->parsed()) cmd.subcommand = s.kind;
  }

  try {
    json file;
    if (!cmd.config_path.empty()) {
      try {
        file = json::parse(io::read_text(cmd.config_path));
      } catch (const json::exception& e) {
        throw std::invalid_argument("config " + cmd.config_path + " is not valid JSON: " + e.what());
      } catch (const std::runtime_error& e) {
        throw std::invalid_argument(e.what());
      }
    }
    // Mode precedence: --mode, then an override, then the file.
    std::string set_mode;
    for (const auto& o : cmd.overrides) {
      if (o.rfind("train.mode=", 0) == 0) {
        json probe = default_config();
        apply_override(probe, o);
        set_mode = probe["train"]["mode"].get<std::string>();
      }
    }
    if (!mode.empty() && !set_mode.empty() && mode != set_mode) {
      throw std::invalid_argument("--mode " + mode + " conflicts with --set train.mode=" + set_mode);
    }
    std::string chosen = !mode.empty() ? mode : set_mode;
    if (chosen.empty() && file.is_object() && file.contains("train") && file["train"].is_object() &&
        file["train"].contains("mode") && file["train"]["mode"].is_string()) {
      chosen = file["train"]["mode"].get<std::string>();
    }
    if (chosen.empty()) chosen = "hq";

    cmd.config = default_config();
    apply_mode_preset(cmd.config, chosen);
    if (!file.is_null()) merge_config(cmd.config, file);
    for (const auto& o : cmd.overrides) apply_override(cmd.config, o);
    cmd.config["train"]["mode"] = chosen;

    // Validate everything the subcommand will read before any work starts.
    event_model_from(cmd.config);
    render_from(cmd.config);
    if (cmd.subcommand == Subcommand::kTrain) train_config_from(cmd.config, cmd.seed);
    if (cmd.subcommand == Subcommand::kMakeSynthetic) synthetic_from(cmd.config, cmd.seed);
  } catch (const std::exception& e) {
    result.exit_code = kExitUsage;
    result.output = std::string("error: ") + e.what() + "\n";
    return result;
  }
  result.command = std::move(cmd);
  return result;
}

int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    OutputLock lock(cmd.out_dir);
    switch (cmd.subcommand) {
      case Subcommand::kMakeSynthetic:
        return run_make_synthetic(cmd, out);
      case Subcommand::kSimulate:
        return run_simulate(cmd, out);
      case Subcommand::kMapExposure:
        return run_map_exposure(cmd, out);
      case Subcommand::kTrain:
        return run_train(cmd, out);
      case Subcommand::kRender:
        return run_render(cmd, out);
      case Subcommand::kEval:
        return run_eval(cmd, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto parsed = parse_args(args);
  if (!parsed.command) {
    (parsed.exit_code == kExitOk ? std::cout : std::cerr) << parsed.output;
    return parsed.exit_code;
  }
  return run(*parsed.command, std::cout, std::cerr);
}

}  // namespace e3dgs::cli
