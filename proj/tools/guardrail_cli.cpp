#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "guardrail/core/errors.hpp"
#include "guardrail/runner/config.hpp"
#include "guardrail/runner/runner.hpp"
#include "guardrail/runner/verify.hpp"

namespace {

std::optional<std::uint64_t> seed_from_env() {
  const char* env = std::getenv("GUARDRAIL_SEED");
  if (!env || !*env) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used, 10);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw guardrail::Error(guardrail::ErrorCode::kArgument,
                           "GUARDRAIL_SEED must be an unsigned 64-bit integer");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guardrail experiments: scenario runs and the acceptance suite"};
  app.set_version_flag("--version", GUARDRAIL_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<std::string> out_dir;
  unsigned threads = 0;
  auto* run = app.add_subcommand("run", "Run the scenario described by a config file");
  run->add_option("--config", config_path, "Scenario config (TOML)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Root seed; overrides GUARDRAIL_SEED and the config");
  run->add_option("--replications", replications, "Replications per sweep point");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--threads", threads, "Worker threads (0 = hardware); never changes output");

  std::string suite = "all";
  std::uint64_t verify_seed = guardrail::runner::kDefaultVerifySeed;
  auto* verify = app.add_subcommand("verify", "Run the acceptance checks");
  verify->add_option("suite", suite, "all, framework, competition, misspec or contamination");
  verify->add_option("--seed", verify_seed, "Root seed");
  verify->add_option("--threads", threads, "Worker threads (0 = hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const guardrail::runner::ScenarioConfig cfg = guardrail::runner::load_config(config_path);
      guardrail::runner::RunOptions opts;
      opts.seed = seed ? seed : seed_from_env();
      opts.replications = replications;
      opts.out_dir = out_dir;
      opts.threads = threads;
      guardrail::runner::run(cfg, opts);
      return 0;
    }
    bool ok = true;
    for (const auto& r : guardrail::runner::verify(suite, verify_seed, threads)) {
      std::cout << guardrail::runner::format_result(r) << std::endl;
      ok = ok && r.pass;
    }
    return ok ? 0 : 1;
  } catch (const guardrail::runner::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const guardrail::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
