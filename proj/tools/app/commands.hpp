#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace omtherm::app {

enum class TableFormat { csv, json };

struct RunContext {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  TableFormat format = TableFormat::csv;
  std::string command;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Collects emitted files and writes manifest.json listing them.
class OutputSet {
public:
  explicit OutputSet(const RunContext& ctx);

  /// Writes `name` under the output directory and records its hash.
  void write(const std::string& name, const std::string& contents);
  /// Adds an input file to the manifest (hashed by content).
  void input(const std::string& path);
  /// Writes manifest.json; returns its path.
  std::filesystem::path finish();

private:
  const RunContext& ctx_;
  std::vector<std::pair<std::string, std::uint64_t>> outputs_;
  std::vector<std::pair<std::string, std::uint64_t>> inputs_;
};

/// A named-column numeric table rendered as CSV or as a JSON column object.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string render(TableFormat format) const;
  static const char* extension(TableFormat format);
};

void cmd_simulate(const RunContext& ctx);

struct FitOptions {
  std::string kind;  ///< pulse, eit, powerlaw, ringdown
  std::string data;
  bool with_offset = false;
  bool with_floor = false;
  std::optional<double> breakpoint;
};
void cmd_fit(const RunContext& ctx, const FitOptions& options);

/// method: direct, asym, coherent or all.
void cmd_calibrate(const RunContext& ctx, const std::string& method);

void cmd_nnep(const RunContext& ctx);

void cmd_filter_response(const RunContext& ctx);

}  // namespace omtherm::app
