#pragma once

#include <cmath>
#include <string>

#include "guardrail/core/errors.hpp"

namespace guardrail {

/// min{max{x, lower}, upper}. Infinite bounds encode an absent side.
inline double clip(double x, double lower, double upper) {
  if (!(lower <= upper)) {
    throw Error(ErrorCode::kInvalidGuardrail,
                "invalid guardrail: lower " + std::to_string(lower) + " exceeds upper " +
                    std::to_string(upper));
  }
  const double raised = x > lower ? x : lower;
  return raised < upper ? raised : upper;
}

}  // namespace guardrail
