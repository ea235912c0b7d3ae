#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "guardrail/core/errors.hpp"
#include "guardrail/mc/estimate.hpp"

namespace guardrail::mc {

struct QuadratureOptions {
  double abs_tol = 1e-8;
  double rel_tol = 0.0;
  std::size_t max_subdivisions = 5000;
  /// Interior points where the integrand may jump or kink. Points outside
  /// (a, b) are ignored.
  std::vector<double> breakpoints;
};

/// Thrown when the subdivision budget runs out. Carries the best estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, EstimateWithCI partial)
      : Error(ErrorCode::kConvergence, what), partial_(partial) {}

  const EstimateWithCI& partial() const noexcept { return partial_; }

 private:
  EstimateWithCI partial_;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration over [a, b].
///
/// Either end may be infinite. Semi-infinite pieces are mapped to [0, 1) with
/// x = a + t/(1-t), so algebraic tails need no truncation point. The returned
/// half_width is the sum of per-panel |K15 - G7| differences.
EstimateWithCI quadrature_1d(const std::function<double(double)>& f, double a, double b,
                             const QuadratureOptions& options = {});

/// As quadrature_1d for an integrand that is itself an approximation:
/// f(x) returns (value, error bound of that value). The errors are integrated
/// with the Kronrod weights and added to the reported bound.
EstimateWithCI quadrature_1d_nested(const std::function<std::pair<double, double>(double)>& f,
                                    double a, double b, const QuadratureOptions& options = {});

struct Rectangle {
  double x_lo, x_hi, y_lo, y_hi;
};

/// Nested adaptive integration: outer over x, inner over y for each outer node.
/// Inner errors are integrated alongside the outer rule and added to the bound.
/// `inner_breakpoints(x)` may supply x-dependent breakpoints for the inner
/// integral (e.g. the diagonal y = x).
EstimateWithCI quadrature_2d(
    const std::function<double(double, double)>& f, const Rectangle& domain,
    const QuadratureOptions& options = {},
    const std::function<std::vector<double>(double)>& inner_breakpoints = {});

}  // namespace guardrail::mc
