#pragma once

#include <cstddef>
#include <string_view>

namespace guardrail::mc {

enum class Method { kMonteCarlo, kQuadrature };

std::string_view to_string(Method method);

/// A point estimate with a symmetric uncertainty interval.
///
/// For Monte Carlo the half-width is a CLT interval at the confidence level
/// the estimate was produced with. For quadrature it is the a-posteriori
/// error bound and `n_samples` counts integrand evaluations.
struct EstimateWithCI {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n_samples = 0;
  Method method = Method::kMonteCarlo;

  double lower() const { return mean - half_width; }
  double upper() const { return mean + half_width; }
  bool contains(double x) const { return lower() <= x && x <= upper(); }
};

/// Two-sided standard normal critical value: P(|Z| <= z) = confidence.
double normal_critical_value(double confidence);

/// sqrt of the chi-square quantile with `dof` degrees of freedom at `confidence`.
double chi_critical_value(double confidence, std::size_t dof);

/// Whether two estimates are compatible: |a - b| <= a.hw + b.hw.
bool agree(const EstimateWithCI& a, const EstimateWithCI& b);

}  // namespace guardrail::mc
