#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace guardrail {

enum class ErrorCode {
  kInvalidGuardrail,     // lower > upper
  kDomain,               // non-finite loss or sample
  kConfiguration,        // missing minimizer, unusable model description
  kArgument,             // precondition on an argument
  kConvergence,          // quadrature ran out of subdivisions
  kDegenerateDesign,     // singular least-squares design
  kNonpositiveSlope,     // fitted demand slope <= 0
  kHypothesisViolated,   // a theorem's hypothesis does not hold
  kConditionInapplicable,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace guardrail
