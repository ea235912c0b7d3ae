#include "guardrail/mc/estimate.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "guardrail/core/errors.hpp"

namespace guardrail::mc {

std::string_view to_string(Method method) {
  return method == Method::kMonteCarlo ? "monte-carlo" : "quadrature";
}

double normal_critical_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kArgument, "confidence must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 + 0.5 * confidence);
}

double chi_critical_value(double confidence, std::size_t dof) {
  if (!(confidence > 0.0 && confidence < 1.0) || dof == 0) {
    throw Error(ErrorCode::kArgument, "chi critical value needs confidence in (0,1), dof >= 1");
  }
  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(dof));
  return std::sqrt(boost::math::quantile(chi2, confidence));
}

bool agree(const EstimateWithCI& a, const EstimateWithCI& b) {
  return std::abs(a.mean - b.mean) <= a.half_width + b.half_width;
}

}  // namespace guardrail::mc
