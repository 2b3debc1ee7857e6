#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "acim/cli/config.hpp"

namespace acim::cli {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

// Shortest round-trip decimal with '.' as separator; non-finite values print
// as inf, -inf or nan.
std::string format_cell(const Cell& c);

std::string to_csv(const Table& t);

struct RunMetadata {
  double wall_seconds = 0.0;
  int threads = 1;
};

// Results mirror the CSV rows; `summary` holds command-specific scalars.
// Wall-clock data sits under "metadata" so the rest of the document is a
// pure function of the config.
std::string to_json(const std::string& command, const ExperimentConfig& cfg, const Table& t,
                    const Table& summary, const RunMetadata& meta);

extern const char* const kToolVersion;

}  // namespace acim::cli
