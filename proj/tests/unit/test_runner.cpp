#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "doctest.h"
#include "guardrail/core/errors.hpp"
#include "guardrail/runner/config.hpp"
#include "guardrail/runner/runner.hpp"
#include "guardrail/runner/verify.hpp"

using namespace guardrail;
using namespace guardrail::runner;

namespace {

std::vector<std::string> diagnostics_of(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const ConfigError& e) {
    return e.diagnostics();
  }
  return {};
}

bool mentions(const std::vector<std::string>& lines, const std::string& needle) {
  for (const auto& l : lines) {
    if (l.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n') {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

const char* const kCompetition = R"(
scenario = "competition"
seed = 7
replications = 3
[parameters]
alpha = 10
beta = 2
gamma = 1
mu = 4
sigma2 = 1
rho = 0
[sweep]
n = [1000, 100000]
)";

}  // namespace

TEST_SUITE("runner") {
  TEST_CASE("toml subset") {
    const Document d = parse_toml(R"(
# comment
name = "a # not a comment" # trailing
x = -1.5e3
big = 18446744073709551615
flag = true
inf_value = -inf
[t]
arr = [1, 2,
       3.5]  # spans lines
)");
    REQUIRE(d.root.size() == 5);
    CHECK(d.root[0].second.text == "a # not a comment");
    CHECK(d.root[1].second.number == -1500.0);
    CHECK(d.root[2].second.text == "18446744073709551615");
    CHECK(d.root[3].second.flag);
    CHECK(d.root[4].second.number == -std::numeric_limits<double>::infinity());
    const Table* t = d.table("t");
    REQUIRE(t);
    CHECK(t->at(0).second.array == std::vector<double>{1.0, 2.0, 3.5});

    CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = \n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = [1, \"x\"]\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[t]\n[t]\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = [1, 2\n"), ConfigError);
  }

  TEST_CASE("top-level fields") {
    const ScenarioConfig c = parse_config(kCompetition);
    CHECK(c.scenario == Scenario::kCompetition);
    CHECK(c.seed == 7);
    CHECK(c.replications == 3);
    CHECK(parse_config("scenario = \"misspec\"\nseed = 18446744073709551615\n").seed ==
          18446744073709551615ull);
    try {
      parse_config("scenario = \"competition\"\nreplications = 0\n");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      REQUIRE(e.diagnostics().size() == 1);
      CHECK(e.diagnostics()[0] == "replications must be ≥ 1");
      CHECK(e.code() == ErrorCode::kConfiguration);
    }
    CHECK_THROWS_AS(parse_config("scenario = \"poker\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("seed = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario = \"misspec\"\nseed = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario = \"misspec\"\nseed = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario = \"misspec\"\ncolour = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario = \"misspec\"\n[extra]\n"), ConfigError);
  }

  TEST_CASE("sweep is a cartesian product with the last key fastest") {
    const ScenarioConfig c = parse_config("scenario = \"misspec\"\n[sweep]\nn = [7, 8]\nK = [1, 2, 3]\n");
    REQUIRE(c.sweep_points() == 6);
    const auto v4 = c.sweep_values(4);
    CHECK(v4[0] == std::make_pair(std::string("n"), 8.0));
    CHECK(v4[1] == std::make_pair(std::string("K"), 2.0));
    const Table t = c.point(5);
    REQUIRE(t.size() == 2);
    CHECK(t[0].second.number == 8.0);
    CHECK(t[1].second.number == 3.0);
  }

  TEST_CASE("parameter diagnostics name the field") {
    const auto d1 = diagnostics_of("scenario = \"competition\"\n[parameters]\nalpha = 10\nbeta = \"two\"\n"
                                   "gamma = 1\nmu = 4\nn = 100\nbogus = 1\n");
    CHECK(mentions(d1, "parameters.beta: expected a number"));
    CHECK(mentions(d1, "parameters.bogus: unknown parameter"));

    const auto d2 = diagnostics_of("scenario = \"competition\"\n[parameters]\nalpha = 10\nbeta = 1\n"
                                   "gamma = 1\nmu = 4\nn = 100\n");
    CHECK(mentions(d2, "parameters:"));

    const auto d3 = diagnostics_of("scenario = \"misspec\"\n[parameters]\ndemand = \"exponential\"\n"
                                   "a = 0.3\nb = 10\nc = 1\np_bar = 10\nK = 3\n[sweep]\nn = [10, 1]\n");
    CHECK(mentions(d3, "parameters.n: must be >= 2 (sweep point 1)"));

    const auto d4 = diagnostics_of("scenario = \"contamination-response\"\n[parameters]\nbeta = [1, 2]\n"
                                   "domain_lo = [0]\ndomain_hi = [1, 1]\nb = 1\np = 0.7\nn = 100\n");
    CHECK(mentions(d4, "parameters.domain_lo"));

    CHECK(diagnostics_of(kCompetition).empty());
  }

  TEST_CASE("shortest round-trip numbers") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(3.0) == "3");
    CHECK(format_number(-2.5e-300) == "-2.5e-300");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    for (double x : {1.0 / 3.0, 2.0 / 7.0, 1e23, 5e-324}) CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
  }

  TEST_CASE("csv does not depend on the thread count") {
    const ScenarioConfig c = parse_config(kCompetition);
    RunOptions o;
    o.print_summary = false;
    o.threads = 1;
    const RunResult a = run_in_memory(c, o);
    o.threads = 3;
    const RunResult b = run_in_memory(c, o);
    CHECK(a.csv == b.csv);
    o.seed = 8;
    CHECK(run_in_memory(c, o).csv != a.csv);
  }

  TEST_CASE("competition rows and summary") {
    const RunResult r = run_in_memory(parse_config(kCompetition), {});
    const auto lines = split_lines(r.csv);
    REQUIRE(lines.size() == 7);
    const auto header = split_cells(lines[0]);
    CHECK(header.size() == 3 + csv_columns(Scenario::kCompetition).size());
    CHECK(header[3] == "n");
    const auto last = split_cells(lines.back());
    CHECK(last[0] == "1");
    CHECK(last[1] == "2");
    CHECK(last[2] == "n=1e+05");
    CHECK(std::abs(std::stod(last[6]) - 3.5) < 0.05);  // p_a near its limit
    REQUIRE(r.summary.size() == 2);
    CHECK(r.summary[1].rows == 3);
    CHECK(std::abs(r.summary[1].mean_valid - 3.5) < 0.05);
    CHECK(r.summary[1].mean_all == r.summary[1].mean_valid);
    CHECK(r.csv.find('\r') == std::string::npos);
  }

  TEST_CASE("degenerate replications are flagged and counted") {
    // Three rows drowned in noise: about half the fitted slopes are nonpositive.
    const RunResult r = run_in_memory(parse_config(R"(
scenario = "competition"
replications = 20
[parameters]
alpha = 10
beta = 2
gamma = 1
mu = 4
noise_sd = 1e6
n = 3
)"), {});
    CHECK(r.summary[0].degenerate > 0);
    CHECK(r.summary[0].degenerate < 20);
    CHECK(std::isnan(r.summary[0].mean_all));
    CHECK(r.csv.find(",true\n") != std::string::npos);
  }

  TEST_CASE("hypothesis violations are recorded per row") {
    const RunResult r = run_in_memory(parse_config(R"(
scenario = "contamination-covariate"
replications = 2
[parameters]
z_half = [1]
u_sd = [0.5]
beta = [2]
n = 500
b = 0.5
p = 0.2
loss_samples = 1000
)"), {});
    CHECK(r.summary[0].hypothesis_violations == 2);
    CHECK(r.csv.find("hypothesis-violated") != std::string::npos);
  }

  TEST_CASE("every scenario produces its schema") {
    const char* configs[] = {
        "scenario = \"framework\"\n[parameters]\nupper = 0.5\nsamples = 2000\nmethod = \"quadrature\"\n",
        "scenario = \"misspec\"\n[parameters]\na = 0.3333333333333333\nb = 10\nc = 1\np_bar = 10\nn = 10\nK = 3\n",
        "scenario = \"contamination-response\"\n[parameters]\nbeta = [2, 1]\ndomain_lo = [0, 1]\n"
        "domain_hi = [1, 1]\nb = 1\np = 0.3\nn = 500\nupper = 2.8\n",
    };
    for (const char* text : configs) {
      const ScenarioConfig c = parse_config(text);
      const RunResult r = run_in_memory(c, {});
      const auto lines = split_lines(r.csv);
      REQUIRE(lines.size() == 2);
      CHECK(split_cells(lines[0]).size() == 3 + csv_columns(c.scenario).size());
      CHECK(split_cells(lines[1]).size() == split_cells(lines[0]).size());
    }
  }

  TEST_CASE("run writes csv and manifest") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "guardrail-runner-test";
    fs::remove_all(dir);
    RunOptions o;
    o.out_dir = dir.string();
    o.print_summary = false;
    o.replications = 2;
    const RunResult r = run(parse_config(kCompetition), o);
    std::ifstream csv(r.csv_path, std::ios::binary);
    const std::string text{std::istreambuf_iterator<char>(csv), std::istreambuf_iterator<char>()};
    CHECK(text == r.csv);
    CHECK(split_lines(text).size() == 5);
    std::ifstream man(r.manifest_path);
    const std::string m{std::istreambuf_iterator<char>(man), std::istreambuf_iterator<char>()};
    CHECK(m.find("schema_version = 1") != std::string::npos);
    CHECK(m.find("seed = 7") != std::string::npos);
    CHECK(m.find("replications = 2") != std::string::npos);
    CHECK(m.find("rows = 4") != std::string::npos);
    CHECK(m.find("started = ") != std::string::npos);
    CHECK(m.find("[config]") != std::string::npos);
    fs::remove_all(dir);

    // Invalid configs fail before any output exists.
    CHECK_THROWS_AS(run(parse_config("scenario = \"competition\"\n[parameters]\nalpha = 1\n"), o), ConfigError);
    CHECK_FALSE(fs::exists(dir));
    RunOptions zero = o;
    zero.replications = 0;
    CHECK_THROWS_AS(run(parse_config(kCompetition), zero), ConfigError);
  }

  TEST_CASE("verify rejects unknown suites") {
    try {
      verify("everything");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kArgument);
    }
    const auto r = verify_criterion(6);
    REQUIRE(r.size() == 3);
    for (const auto& c : r) CHECK(c.pass);
    CHECK(format_result(r[0]).rfind("PASS criterion 6a", 0) == 0);
  }
}
