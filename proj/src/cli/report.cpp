#include "acim/cli/report.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "acim/error.hpp"

namespace acim::cli {

const char* const kToolVersion = "1.0.0";

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw Error("report row has " + std::to_string(row.size()) + " cells, expected " +
                std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isnan(*d)) return "nan";
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    return fmt::format("{}", *d);
  }
  return std::get<std::string>(c);
}

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += '\n';
  }
  return out;
}

namespace {

nlohmann::json cell_json(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return format_cell(c);
    return *d;
  }
  return std::get<std::string>(c);
}

nlohmann::json table_json(const Table& t) {
  auto rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(obj));
  }
  return rows;
}

}  // namespace

std::string to_json(const std::string& command, const ExperimentConfig& cfg, const Table& t,
                    const Table& summary, const RunMetadata& meta) {
  nlohmann::json doc;
  doc["command"] = command;
  doc["seed"] = cfg.seed;
  nlohmann::json echo = nlohmann::json::object();
  for (const auto& [section, entries] : cfg.raw.sections) {
    if (entries.empty()) continue;
    nlohmann::json sec = nlohmann::json::object();
    for (const auto& [key, e] : entries) sec[key] = e.value;
    echo[section.empty() ? "global" : section] = std::move(sec);
  }
  doc["config"] = std::move(echo);
  doc["columns"] = t.columns;
  doc["results"] = table_json(t);
  const auto sum = table_json(summary);
  doc["summary"] = sum.empty() ? nlohmann::json::object() : sum.front();
  doc["metadata"] = {{"wall_clock_seconds", meta.wall_seconds},
                     {"threads", meta.threads},
                     {"tool_version", kToolVersion}};
  return doc.dump(2) + "\n";
}

}  // namespace acim::cli
