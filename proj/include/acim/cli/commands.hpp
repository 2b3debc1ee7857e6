#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "acim/cli/config.hpp"
#include "acim/cli/report.hpp"

namespace acim::cli {

const std::vector<std::string>& command_names();

struct CommandOutput {
  Table table;
  Table summary;  // at most one row
};

// Runs one subcommand in memory. `out_dir` receives side products such as
// the trained checkpoint.
CommandOutput run_command(const std::string& command, const ExperimentConfig& cfg, int threads,
                          const std::filesystem::path& out_dir);

struct RunOptions {
  std::string command;
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

// Loads the config, applies overrides, runs the command and writes
// <command>.csv / <command>.json into the output directory.
void run(const RunOptions& opts);

}  // namespace acim::cli
