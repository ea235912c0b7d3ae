#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "guardrail/runner/config.hpp"

namespace guardrail::runner {

/// Bumped whenever a CSV column set changes.
inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip decimal form, '.' separator, locale independent.
/// NaN and infinities print as nan, inf, -inf.
std::string format_number(double x);

/// Column names of the CSV written for `scenario`.
const std::vector<std::string>& csv_columns(Scenario scenario);

/// Checks every parameter of every sweep point against the scenario before
/// anything runs. Throws ConfigError listing each offending field.
void validate_config(const ScenarioConfig& config);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<std::string> out_dir;
  unsigned threads = 1;
  /// Print the summary table on standard output.
  bool print_summary = true;
};

struct SweepSummary {
  std::vector<std::pair<std::string, double>> sweep;
  std::string metric;
  std::size_t rows = 0;
  std::size_t degenerate = 0;
  std::size_t hypothesis_violations = 0;
  double mean_all = 0.0;    // NaN when any row is missing the metric
  double mean_valid = 0.0;  // over rows with a finite metric
  double half_width = 0.0;  // 99% CLT interval of mean_valid
  std::vector<std::pair<std::string, std::size_t>> verdicts;
};

struct RunResult {
  std::string csv_path;
  std::string manifest_path;
  std::string csv;  // file contents
  std::size_t rows = 0;
  std::vector<SweepSummary> summary;
};

/// Runs every (sweep point, replication) pair. Replication r of sweep point s
/// draws from RngStream(seed).derive(s).derive(r); rows are written in
/// (s, r) order, so the CSV does not depend on the thread count.
RunResult run(const ScenarioConfig& config, const RunOptions& options = {});

/// Same as `run` but writes no files.
RunResult run_in_memory(const ScenarioConfig& config, const RunOptions& options = {});

std::string format_summary(const ScenarioConfig& config, const RunResult& result);

}  // namespace guardrail::runner
