#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "guardrail/core/loss.hpp"
#include "guardrail/core/model.hpp"
#include "guardrail/mc/estimate.hpp"
#include "guardrail/mc/quadrature.hpp"
#include "guardrail/mc/rng.hpp"

namespace guardrail {

struct EvalOptions {
  mc::Method method = mc::Method::kMonteCarlo;
  std::size_t samples = 100000;
  double confidence = 0.99;
  unsigned threads = 0;
  mc::QuadratureOptions quadrature = default_quadrature();

  static mc::QuadratureOptions default_quadrature() {
    mc::QuadratureOptions q;
    q.abs_tol = 1e-9;
    return q;
  }
};

/// E[l(X_a, W)] - E[l(X_hat, W)] evaluated directly on clipped decisions and
/// through the clipping-event decomposition. On Monte Carlo the two forms see
/// the same draws and agree exactly.
struct BenefitEstimate {
  mc::EstimateWithCI direct;
  mc::EstimateWithCI identity;
};

BenefitEstimate benefit(const JointDecisionModel& model, const LossSpec& loss,
                        const mc::RngStream& stream, const EvalOptions& options = {});

struct CurvePoint {
  double x_h;
  BenefitEstimate benefit;
};

/// Benefit at each deterministic upper bound in `grid` (ascending). Every grid
/// point reuses `stream`, so neighbouring values share their random numbers.
std::vector<CurvePoint> benefit_curve(const std::function<JointDecisionModel(double)>& family,
                                      const LossSpec& loss, const std::vector<double>& grid,
                                      const mc::RngStream& stream,
                                      const EvalOptions& options = {});

struct CurveShape {
  std::size_t peak_index = 0;
  /// A point lies below some point on each side by more than the combined slack.
  bool interior_minimum = false;
};

/// Shape summary of a benefit curve. Slack at each point is
/// slack_factor * half_width of the direct estimate.
CurveShape analyze_curve(const std::vector<CurvePoint>& curve, double slack_factor = 2.0);

}  // namespace guardrail
