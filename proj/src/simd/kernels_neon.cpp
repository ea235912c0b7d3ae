// AArch64 Advanced SIMD variant. Four 2-wide registers hold lanes 0..7.
#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace guardrail::simd::detail {
namespace {

struct Acc8 {
  float64x2_t r[4] = {vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0)};

  void spill(double* lanes) const {
    for (int k = 0; k < 4; ++k) vst1q_f64(lanes + 2 * k, r[k]);
  }
};

}  // namespace

double sum_neon(const double* x, std::size_t n) {
  Acc8 acc;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int k = 0; k < 4; ++k) acc.r[k] = vaddq_f64(acc.r[k], vld1q_f64(x + i + 2 * k));
  }
  double lanes[kLanes];
  acc.spill(lanes);
  for (std::size_t l = 0; i + l < n; ++l) lanes[l] += x[i + l];
  return fold_lanes(lanes);
}

double sum_sq_dev_neon(const double* x, std::size_t n, double m) {
  const float64x2_t mv = vdupq_n_f64(m);
  Acc8 acc;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int k = 0; k < 4; ++k) {
      const float64x2_t d = vsubq_f64(vld1q_f64(x + i + 2 * k), mv);
      acc.r[k] = vaddq_f64(acc.r[k], vmulq_f64(d, d));
    }
  }
  double lanes[kLanes];
  acc.spill(lanes);
  for (std::size_t l = 0; i + l < n; ++l) {
    const double d = x[i + l] - m;
    lanes[l] += d * d;
  }
  return fold_lanes(lanes);
}

CrossMoments cross_moments_neon(const double* x, const double* y, std::size_t n, double mx,
                                double my) {
  const float64x2_t mxv = vdupq_n_f64(mx);
  const float64x2_t myv = vdupq_n_f64(my);
  Acc8 axx, axy, ayy;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int k = 0; k < 4; ++k) {
      const float64x2_t dx = vsubq_f64(vld1q_f64(x + i + 2 * k), mxv);
      const float64x2_t dy = vsubq_f64(vld1q_f64(y + i + 2 * k), myv);
      axx.r[k] = vaddq_f64(axx.r[k], vmulq_f64(dx, dx));
      axy.r[k] = vaddq_f64(axy.r[k], vmulq_f64(dx, dy));
      ayy.r[k] = vaddq_f64(ayy.r[k], vmulq_f64(dy, dy));
    }
  }
  double lxx[kLanes], lxy[kLanes], lyy[kLanes];
  axx.spill(lxx);
  axy.spill(lxy);
  ayy.spill(lyy);
  for (std::size_t l = 0; i + l < n; ++l) {
    const double dx = x[i + l] - mx;
    const double dy = y[i + l] - my;
    lxx[l] += dx * dx;
    lxy[l] += dx * dy;
    lyy[l] += dy * dy;
  }
  return {fold_lanes(lxx), fold_lanes(lxy), fold_lanes(lyy)};
}

std::size_t clip_neon(const double* x, const double* lo, const double* hi, double* out,
                      std::size_t n) {
  std::size_t first_bad = n;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xv = vld1q_f64(x + i);
    const float64x2_t lv = vld1q_f64(lo + i);
    const float64x2_t hv = vld1q_f64(hi + i);
    // Select-based max/min to keep the scalar tie and NaN behaviour.
    const float64x2_t raised = vbslq_f64(vcgtq_f64(xv, lv), xv, lv);
    vst1q_f64(out + i, vbslq_f64(vcltq_f64(raised, hv), raised, hv));
    if (first_bad == n) {
      if (lo[i] > hi[i]) first_bad = i;
      else if (lo[i + 1] > hi[i + 1]) first_bad = i + 1;
    }
  }
  for (; i < n; ++i) {
    if (first_bad == n && lo[i] > hi[i]) first_bad = i;
    const double raised = x[i] > lo[i] ? x[i] : lo[i];
    out[i] = raised < hi[i] ? raised : hi[i];
  }
  return first_bad;
}

}  // namespace guardrail::simd::detail
