#pragma once

#include "guardrail/core/benefit.hpp"

namespace guardrail {

struct TightnessResult {
  double lhs = 0.0;            // E[l(X_a) 1(X_a >= x*)], equals sigma2 / 2
  double tail_loss = 0.0;      // E[l(X_h) 1(X_h <= x*)], equals 3 eps
  double scaled_rhs = 0.0;     // a * tail_loss
  bool lhs_ratio_check = false;
  mc::EstimateWithCI benefit;  // quadrature; strictly negative
  double benefit_bound = 0.0;  // -(3 eps / 2 - eps sigma2)
  JointDecisionModel model;
  LossSpec loss = LossSpec::squared();
};

/// X_a ~ N(x*, sigma2) independent of a bound with mass 1 - eps at +inf and
/// density 3 eps / (x - x*)^4 below x* - 1, under squared loss. The constant
/// multiple a of the tail loss is dominated by the algorithm's loss, yet the
/// guardrail hurts.
TightnessResult tightness_counterexample(double a, double sigma2, double xstar, double epsilon,
                                         const EvalOptions& options = {});

}  // namespace guardrail
