#include "guardrail/core/benefit.hpp"

#include <algorithm>

#include "expectation.hpp"
#include "guardrail/core/clip.hpp"
#include "guardrail/core/errors.hpp"

namespace guardrail {

namespace {

std::vector<detail::Functional> benefit_functionals(const LossSpec& loss) {
  using detail::checked_loss;
  detail::Functional direct = [&loss](const Draw& d, double) {
    return checked_loss(loss, d.xa, d) - checked_loss(loss, clip(d.xa, d.lower, d.upper), d);
  };
  detail::Functional identity = [&loss](const Draw& d, double) {
    double v = 0.0;
    if (d.xa <= d.lower) v += checked_loss(loss, d.xa, d) - checked_loss(loss, d.lower, d);
    if (d.xa >= d.upper) v += checked_loss(loss, d.xa, d) - checked_loss(loss, d.upper, d);
    return v;
  };
  return {direct, identity};
}

}  // namespace

BenefitEstimate benefit(const JointDecisionModel& model, const LossSpec& loss,
                        const mc::RngStream& stream, const EvalOptions& options) {
  const auto functionals = benefit_functionals(loss);
  if (options.method == mc::Method::kQuadrature) {
    const auto r = detail::quadrature(model, loss, functionals, false, options);
    return {r[0], r[1]};
  }
  const mc::MomentSummary m =
      detail::monte_carlo(model, loss, functionals, false, stream, options);
  return {m.estimate(0, options.confidence), m.estimate(1, options.confidence)};
}

std::vector<CurvePoint> benefit_curve(const std::function<JointDecisionModel(double)>& family,
                                      const LossSpec& loss, const std::vector<double>& grid,
                                      const mc::RngStream& stream, const EvalOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::kArgument, "benefit_curve: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw Error(ErrorCode::kArgument, "benefit_curve: grid must be ascending");
  }
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  for (double x_h : grid) out.push_back({x_h, benefit(family(x_h), loss, stream, options)});
  return out;
}

CurveShape analyze_curve(const std::vector<CurvePoint>& curve, double slack_factor) {
  CurveShape shape;
  if (curve.empty()) return shape;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].benefit.direct.mean > curve[shape.peak_index].benefit.direct.mean) {
      shape.peak_index = i;
    }
  }
  auto low = [&](std::size_t i) {
    return curve[i].benefit.direct.mean - slack_factor * curve[i].benefit.direct.half_width;
  };
  auto high = [&](std::size_t i) {
    return curve[i].benefit.direct.mean + slack_factor * curve[i].benefit.direct.half_width;
  };
  // Running maxima of the lower envelope from each side.
  const std::size_t n = curve.size();
  std::vector<double> left(n), right(n);
  for (std::size_t i = 0; i < n; ++i) left[i] = i == 0 ? low(0) : std::max(left[i - 1], low(i));
  for (std::size_t i = n; i-- > 0;) right[i] = i + 1 == n ? low(i) : std::max(right[i + 1], low(i));
  for (std::size_t j = 1; j + 1 < n; ++j) {
    if (left[j - 1] > high(j) && right[j + 1] > high(j)) shape.interior_minimum = true;
  }
  return shape;
}

}  // namespace guardrail
