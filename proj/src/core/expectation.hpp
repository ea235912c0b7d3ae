#pragma once

#include <functional>
#include <vector>

#include "guardrail/core/benefit.hpp"
#include "guardrail/mc/monte_carlo.hpp"

namespace guardrail::detail {

/// Per-draw quantity. `s` is x*(W), or NaN when the minimizer was not requested.
using Functional = std::function<double(const Draw&, double s)>;

/// Loss with a finiteness check that reports the offending draw.
double checked_loss(const LossSpec& loss, double x, const Draw& d);

mc::MomentSummary monte_carlo(const JointDecisionModel& model, const LossSpec& loss,
                              const std::vector<Functional>& functionals, bool needs_minimizer,
                              const mc::RngStream& stream, const EvalOptions& options);

/// Exact expectations through the model's densities. W is empty and x* constant.
std::vector<mc::EstimateWithCI> quadrature(const JointDecisionModel& model,
                                           const LossSpec& loss,
                                           const std::vector<Functional>& functionals,
                                           bool needs_minimizer, const EvalOptions& options);

}  // namespace guardrail::detail
