// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace e3dgs::cli {

enum class Subcommand { kMakeSynthetic, kSimulate, kMapExposure, kTrain, kRender, kEval };

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct Command {
  Subcommand subcommand = Subcommand::kTrain;
  std::string config_path;
  std::vector<std::string> overrides;  // dotted key=value
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  /// Defaults, then the mode preset, then the config file, then overrides.
  nlohmann::json config;

  std::string manifest;
  std::string checkpoint;
  std::string events;
  std::string image;
  std::string kind = "motion";  // simulate: motion | exposure
  std::string split = "both";   // eval: given | novel | both
  std::optional<int> frame;
  bool depth = false;
};

struct ParseResult {
  std::optional<Command> command;  // empty when the process should exit
  int exit_code = kExitOk;
  std::string output;  // help text or error message
};

/// Every configurable value with its default. Config files and overrides may
/// only name keys that exist here.
nlohmann::json default_config();

/// Applies the train.* preset of `mode` ("fast", "hq" or "hybrid") to `config`.
void apply_mode_preset(nlohmann::json& config, const std::string& mode);

/// Merges `patch` into `base`, rejecting unknown keys and type changes.
/// Throws std::invalid_argument naming the offending dotted key.
void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& prefix = "");

/// "a.b.c=value" applied to `config`; the value is parsed as JSON when it can
/// be, otherwise taken as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

ParseResult parse_args(const std::vector<std::string>& args);

/// Executes a parsed command. Returns 0 on success, 1 on failure with a
/// diagnostic on `err`.
int run(const Command& command, std::ostream& out, std::ostream& err);

/// parse_args + run with process streams.
int main_entry(int argc, char** argv);

}  // namespace e3dgs::cli
