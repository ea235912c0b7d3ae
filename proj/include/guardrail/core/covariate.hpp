#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>

#include "guardrail/core/errors.hpp"

namespace guardrail {

inline constexpr std::size_t kMaxCovariateDim = 8;

/// Small fixed-capacity covariate vector. Lives inside every Monte Carlo draw,
/// so it must not allocate.
struct Covariate {
  std::array<double, kMaxCovariateDim> values{};
  std::size_t dim = 0;

  static Covariate of(std::initializer_list<double> xs) {
    if (xs.size() > kMaxCovariateDim) {
      throw Error(ErrorCode::kArgument, "covariate dimension exceeds capacity");
    }
    Covariate c;
    for (double x : xs) c.values[c.dim++] = x;
    return c;
  }

  static Covariate of(std::span<const double> xs) {
    if (xs.size() > kMaxCovariateDim) {
      throw Error(ErrorCode::kArgument, "covariate dimension exceeds capacity");
    }
    Covariate c;
    for (double x : xs) c.values[c.dim++] = x;
    return c;
  }

  std::span<const double> view() const { return {values.data(), dim}; }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool empty() const { return dim == 0; }
};

}  // namespace guardrail
