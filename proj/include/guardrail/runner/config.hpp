#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "guardrail/core/errors.hpp"

namespace guardrail::runner {

/// Invalid configuration. `diagnostics` holds one message per offending field.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

/// A value from the TOML subset: number, string, boolean, or numeric array.
struct Value {
  enum class Kind { kNumber, kString, kBool, kArray };

  Kind kind = Kind::kNumber;
  double number = 0.0;
  std::string text;  // string contents, or the raw token of a number
  bool flag = false;
  std::vector<double> array;
  int line = 0;

  std::string_view kind_name() const;
};

using Table = std::vector<std::pair<std::string, Value>>;

struct Document {
  Table root;
  /// Named tables in file order.
  std::vector<std::pair<std::string, Table>> tables;

  const Table* table(std::string_view name) const;
};

/// Flat `key = value` lines, `[table]` headers, `#` comments, basic strings,
/// numbers (including inf and nan), booleans and numeric arrays, which may
/// span several lines.
Document parse_toml(std::string_view text);

enum class Scenario {
  kFramework,
  kCompetition,
  kMisspec,
  kContaminationResponse,
  kContaminationCovariate,
};

std::string_view to_string(Scenario scenario);
std::optional<Scenario> scenario_from_string(std::string_view name);

struct ScenarioConfig {
  Scenario scenario = Scenario::kFramework;
  Table parameters;
  std::uint64_t seed = 0;
  std::size_t replications = 1;
  /// Cartesian product in file order; the last key varies fastest.
  std::vector<std::pair<std::string, std::vector<double>>> sweep;
  std::string output_path = "results";
  std::string source_text;

  std::size_t sweep_points() const;
  /// Parameters with the sweep values of point `index` substituted.
  Table point(std::size_t index) const;
  /// (name, value) pairs of the sweep at `index`.
  std::vector<std::pair<std::string, double>> sweep_values(std::size_t index) const;
};

/// Parses and checks the top-level fields; parameter names and values are
/// checked against the scenario by `validate_config`.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::string& path);

}  // namespace guardrail::runner
