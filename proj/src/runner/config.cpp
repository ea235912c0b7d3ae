#include "guardrail/runner/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace guardrail::runner {
namespace {

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration";
  for (const std::string& l : lines) out += "\n  " + l;
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing comment outside of string literals.
std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

std::optional<double> parse_number(std::string_view tok) {
  std::string t(tok);
  std::erase(t, '_');
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  if (t == "nan" || t == "+nan" || t == "-nan") return std::numeric_limits<double>::quiet_NaN();
  std::string_view v = t;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) return std::nullopt;
  return out;
}

std::string where(int line) { return "line " + std::to_string(line) + ": "; }

Value parse_value(std::string_view raw, int line) {
  const std::string_view s = trim(raw);
  Value v;
  v.line = line;
  if (s.empty()) throw ConfigError({where(line) + "missing value"});
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ConfigError({where(line) + "unterminated string"});
    v.kind = Value::Kind::kString;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size()) {
        const char e = s[++i];
        v.text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        v.text += s[i];
      }
    }
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = Value::Kind::kBool;
    v.flag = s == "true";
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError({where(line) + "unterminated array"});
    v.kind = Value::Kind::kArray;
    std::string_view body = s.substr(1, s.size() - 2);
    while (!trim(body).empty()) {
      const std::size_t comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      if (item.empty()) {
        if (comma == std::string_view::npos) break;
        throw ConfigError({where(line) + "empty array element"});
      }
      const auto x = parse_number(item);
      if (!x) throw ConfigError({where(line) + "arrays may only hold numbers, got '" + std::string(item) + "'"});
      v.array.push_back(*x);
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
    return v;
  }
  const auto x = parse_number(s);
  if (!x) throw ConfigError({where(line) + "cannot parse value '" + std::string(s) + "'"});
  v.kind = Value::Kind::kNumber;
  v.number = *x;
  v.text = std::string(s);
  return v;
}

bool is_count(const Value& v) {
  return v.kind == Value::Kind::kNumber && v.text.find_first_of(".eE") == std::string::npos &&
         std::isfinite(v.number) && v.number >= 0;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : Error(ErrorCode::kConfiguration, join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string_view Value::kind_name() const {
  switch (kind) {
    case Kind::kNumber: return "number";
    case Kind::kString: return "string";
    case Kind::kBool: return "boolean";
    case Kind::kArray: return "array";
  }
  return "unknown";
}

const Table* Document::table(std::string_view name) const {
  for (const auto& [n, t] : tables) {
    if (n == name) return &t;
  }
  return nullptr;
}

Document parse_toml(std::string_view text) {
  Document doc;
  Table* current = &doc.root;
  std::vector<std::string> errors;
  int line_no = 0;
  std::string pending;  // multi-line array being collected
  int pending_line = 0;
  std::string pending_key;

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string_view line = trim(strip_comment(raw));
    if (!pending.empty()) {
      pending += ' ';
      pending += line;
      if (line.find(']') == std::string_view::npos) continue;
      try {
        current->emplace_back(pending_key, parse_value(pending, pending_line));
      } catch (const ConfigError& e) {
        errors.insert(errors.end(), e.diagnostics().begin(), e.diagnostics().end());
      }
      pending.clear();
      continue;
    }
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        errors.push_back(where(line_no) + "malformed table header");
        continue;
      }
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!valid_key(name)) {
        errors.push_back(where(line_no) + "invalid table name '" + name + "'");
        continue;
      }
      if (doc.table(name)) {
        errors.push_back(where(line_no) + "table [" + name + "] defined twice");
        continue;
      }
      doc.tables.emplace_back(name, Table{});
      current = &doc.tables.back().second;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back(where(line_no) + "expected key = value");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    if (!valid_key(key)) {
      errors.push_back(where(line_no) + "invalid key '" + key + "'");
      continue;
    }
    bool duplicate = false;
    for (const auto& kv : *current) duplicate = duplicate || kv.first == key;
    if (duplicate) {
      errors.push_back(where(line_no) + "key '" + key + "' defined twice");
      continue;
    }
    const std::string_view value = trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '[' && value.find(']') == std::string_view::npos) {
      pending = std::string(value);
      pending_line = line_no;
      pending_key = key;
      continue;
    }
    try {
      current->emplace_back(key, parse_value(value, line_no));
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
  }
  if (!pending.empty()) errors.push_back(where(pending_line) + "unterminated array");
  if (!errors.empty()) throw ConfigError(errors);
  return doc;
}

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::kFramework: return "framework";
    case Scenario::kCompetition: return "competition";
    case Scenario::kMisspec: return "misspec";
    case Scenario::kContaminationResponse: return "contamination-response";
    case Scenario::kContaminationCovariate: return "contamination-covariate";
  }
  return "unknown";
}

std::optional<Scenario> scenario_from_string(std::string_view name) {
  for (Scenario s : {Scenario::kFramework, Scenario::kCompetition, Scenario::kMisspec,
                     Scenario::kContaminationResponse, Scenario::kContaminationCovariate}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::size_t ScenarioConfig::sweep_points() const {
  std::size_t total = 1;
  for (const auto& [name, values] : sweep) total *= values.size();
  return total;
}

std::vector<std::pair<std::string, double>> ScenarioConfig::sweep_values(std::size_t index) const {
  std::vector<std::pair<std::string, double>> out(sweep.size());
  for (std::size_t k = sweep.size(); k-- > 0;) {
    const auto& values = sweep[k].second;
    out[k] = {sweep[k].first, values[index % values.size()]};
    index /= values.size();
  }
  return out;
}

Table ScenarioConfig::point(std::size_t index) const {
  Table t = parameters;
  for (const auto& [name, x] : sweep_values(index)) {
    Value v;
    v.kind = Value::Kind::kNumber;
    v.number = x;
    v.text = std::to_string(x);
    // Keep integer-looking tokens for count parameters.
    if (x == std::floor(x) && std::abs(x) < 1e15) v.text = std::to_string(static_cast<long long>(x));
    bool replaced = false;
    for (auto& kv : t) {
      if (kv.first == name) {
        v.line = kv.second.line;
        kv.second = v;
        replaced = true;
      }
    }
    if (!replaced) t.emplace_back(name, v);
  }
  return t;
}

ScenarioConfig parse_config(std::string_view text) {
  const Document doc = parse_toml(text);
  ScenarioConfig cfg;
  cfg.source_text = std::string(text);
  std::vector<std::string> errors;
  bool have_scenario = false;

  for (const auto& [key, v] : doc.root) {
    if (key == "scenario") {
      const auto s = v.kind == Value::Kind::kString ? scenario_from_string(v.text) : std::nullopt;
      if (!s) {
        errors.push_back("scenario: expected one of framework, competition, misspec, "
                         "contamination-response, contamination-covariate");
      } else {
        cfg.scenario = *s;
        have_scenario = true;
      }
    } else if (key == "seed") {
      std::uint64_t seed = 0;
      const auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), seed);
      if (v.kind != Value::Kind::kNumber || ec != std::errc() || ptr != v.text.data() + v.text.size()) {
        errors.push_back("seed: expected an unsigned 64-bit integer");
      } else {
        cfg.seed = seed;
      }
    } else if (key == "replications") {
      if (!is_count(v)) {
        errors.push_back("replications: expected a nonnegative integer");
      } else if (v.number < 1) {
        errors.push_back("replications must be ≥ 1");
      } else {
        cfg.replications = static_cast<std::size_t>(v.number);
      }
    } else if (key == "output" || key == "output_path") {
      if (v.kind != Value::Kind::kString || v.text.empty()) {
        errors.push_back(key + ": expected a nonempty string");
      } else {
        cfg.output_path = v.text;
      }
    } else {
      errors.push_back(key + ": unknown top-level key");
    }
  }
  if (!have_scenario && errors.empty()) errors.push_back("scenario: missing");

  for (const auto& [name, table] : doc.tables) {
    if (name == "parameters") {
      cfg.parameters = table;
    } else if (name == "sweep") {
      for (const auto& [key, v] : table) {
        if (v.kind != Value::Kind::kArray || v.array.empty()) {
          errors.push_back("sweep." + key + ": expected a nonempty numeric array");
          continue;
        }
        cfg.sweep.emplace_back(key, v.array);
      }
    } else {
      errors.push_back("[" + name + "]: unknown table");
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"config: cannot read '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace guardrail::runner
