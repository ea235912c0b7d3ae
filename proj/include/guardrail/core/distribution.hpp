#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "guardrail/mc/rng.hpp"

namespace guardrail {

/// Law of a scalar random variable: an optional continuous part plus atoms.
///
/// Atoms may sit at +/-infinity (an absent bound with positive probability).
/// The sampler and the density describe the same law; tests check this.
struct Density1D {
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::function<double(double)> pdf;  // density of the continuous part, may be empty
  double support_lo = -kInf;
  double support_hi = kInf;
  std::vector<double> breakpoints;  // kinks or jumps of pdf, and where its mass sits
  std::vector<std::pair<double, double>> atoms;  // (location, probability)
  std::function<double(mc::RngStream&)> sample;

  static Density1D point(double x);
  static Density1D normal(double mean, double sd);
  static Density1D uniform(double lo, double hi);
  /// Mixture: with probability `weight` draw from `a`, else from `b`.
  static Density1D mixture(const Density1D& a, const Density1D& b, double weight);
  /// Mass 1 - eps at +inf and density 3 eps / (x - x*)^4 on x <= x* - 1.
  static Density1D heavy_left_tail(double xstar, double eps);

  bool has_continuous_part() const { return static_cast<bool>(pdf); }
};

}  // namespace guardrail
