#include "kernels_impl.hpp"

namespace guardrail::simd::detail {

double sum_scalar(const double* x, std::size_t n) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += x[i + l];
  }
  for (std::size_t l = 0; i + l < n; ++l) acc[l] += x[i + l];
  return fold_lanes(acc);
}

double sum_sq_dev_scalar(const double* x, std::size_t n, double m) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double d = x[i + l] - m;
      acc[l] += d * d;
    }
  }
  for (std::size_t l = 0; i + l < n; ++l) {
    const double d = x[i + l] - m;
    acc[l] += d * d;
  }
  return fold_lanes(acc);
}

CrossMoments cross_moments_scalar(const double* x, const double* y, std::size_t n, double mx,
                                  double my) {
  double axx[kLanes] = {};
  double axy[kLanes] = {};
  double ayy[kLanes] = {};
  auto step = [&](std::size_t idx, std::size_t l) {
    const double dx = x[idx] - mx;
    const double dy = y[idx] - my;
    axx[l] += dx * dx;
    axy[l] += dx * dy;
    ayy[l] += dy * dy;
  };
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) step(i + l, l);
  }
  for (std::size_t l = 0; i + l < n; ++l) step(i + l, l);
  return {fold_lanes(axx), fold_lanes(axy), fold_lanes(ayy)};
}

std::size_t clip_scalar(const double* x, const double* lo, const double* hi, double* out,
                        std::size_t n) {
  std::size_t first_bad = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (first_bad == n && lo[i] > hi[i]) first_bad = i;
    // Same operand order as maxpd/minpd: ties and NaN pick the bound.
    const double raised = x[i] > lo[i] ? x[i] : lo[i];
    out[i] = raised < hi[i] ? raised : hi[i];
  }
  return first_bad;
}

}  // namespace guardrail::simd::detail
