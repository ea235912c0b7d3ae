#pragma once

#include <string_view>

#include "guardrail/core/benefit.hpp"

namespace guardrail {

enum class ConditionKind {
  kSufficientUpper,
  kNecessaryUpper,
  kSufficientLower,
  kNecessaryLower,
  kSufficientTwoSided,
  kNecessaryTwoSided,
  kSufficientCovariate,
  kNecessaryCovariate,
  kIndependentReducedSufficient,
  kIndependentReducedNecessary,
};

enum class Verdict { kHolds, kFails, kInconclusive };

std::string_view to_string(ConditionKind kind);
std::string_view to_string(Verdict verdict);
bool is_sufficient(ConditionKind kind);

struct ConditionReport {
  ConditionKind kind;
  mc::EstimateWithCI lhs;
  mc::EstimateWithCI rhs;
  Verdict verdict = Verdict::kInconclusive;
};

/// holds: lhs.lower >= rhs.upper; fails: lhs.upper < rhs.lower; else inconclusive.
Verdict decide(const mc::EstimateWithCI& lhs, const mc::EstimateWithCI& rhs);

/// Evaluates both sides of the selected inequality with x* = x*(W).
ConditionReport condition_report(const JointDecisionModel& model, const LossSpec& loss,
                                 ConditionKind kind, const mc::RngStream& stream,
                                 const EvalOptions& options = {});

struct CorrelationDiagnostic {
  /// Sample correlation of X_a with each bound; NaN if the bound never varies.
  mc::EstimateWithCI lower;
  mc::EstimateWithCI upper;
  std::size_t samples = 0;
};

/// Empirical correlation between X_a and the finite bound draws (Fisher-z CI).
CorrelationDiagnostic correlation_diagnostic(const JointDecisionModel& model,
                                             const mc::RngStream& stream,
                                             std::size_t samples = 100000,
                                             double confidence = 0.99);

}  // namespace guardrail
