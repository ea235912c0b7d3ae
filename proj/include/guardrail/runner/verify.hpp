#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace guardrail::runner {

/// One checked item of the acceptance suite.
struct CriterionResult {
  int criterion = 0;   // 1..12
  std::string id;      // "5", "5b", ...
  std::string title;
  double measured = 0.0;
  std::string relation;  // how measured compares to bound: "<=", ">=", "=="
  double bound = 0.0;
  bool pass = false;
  std::string detail;
};

inline constexpr std::uint64_t kDefaultVerifySeed = 20240601;

/// Suites: all, framework (1-4), competition (5-6), misspec (7-9),
/// contamination (10-11). Only `all` includes the reproducibility check (12).
/// Unknown names throw an argument error.
std::vector<CriterionResult> verify(std::string_view suite, std::uint64_t seed = kDefaultVerifySeed,
                                    unsigned threads = 0);

/// Runs a single criterion (1..12).
std::vector<CriterionResult> verify_criterion(int criterion, std::uint64_t seed = kDefaultVerifySeed,
                                              unsigned threads = 0);

std::string format_result(const CriterionResult& r);

}  // namespace guardrail::runner
