#include "guardrail/core/errors.hpp"

namespace guardrail {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidGuardrail: return "invalid-guardrail";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kArgument: return "argument";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kDegenerateDesign: return "degenerate-design";
    case ErrorCode::kNonpositiveSlope: return "nonpositive-slope";
    case ErrorCode::kHypothesisViolated: return "hypothesis-violated";
    case ErrorCode::kConditionInapplicable: return "condition-inapplicable";
  }
  return "unknown";
}

}  // namespace guardrail
