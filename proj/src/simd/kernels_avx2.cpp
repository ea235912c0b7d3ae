// Compiled with -mavx2 (no FMA) on x86-64 only.
#include <immintrin.h>

#include "kernels_impl.hpp"

namespace guardrail::simd::detail {
namespace {

// Two 4-wide registers hold lanes 0..3 and 4..7.
struct Acc8 {
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();

  void spill(double* lanes) const {
    _mm256_storeu_pd(lanes, lo);
    _mm256_storeu_pd(lanes + 4, hi);
  }
};

}  // namespace

double sum_avx2(const double* x, std::size_t n) {
  Acc8 acc;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    acc.lo = _mm256_add_pd(acc.lo, _mm256_loadu_pd(x + i));
    acc.hi = _mm256_add_pd(acc.hi, _mm256_loadu_pd(x + i + 4));
  }
  double lanes[kLanes];
  acc.spill(lanes);
  for (std::size_t l = 0; i + l < n; ++l) lanes[l] += x[i + l];
  return fold_lanes(lanes);
}

double sum_sq_dev_avx2(const double* x, std::size_t n, double m) {
  const __m256d mv = _mm256_set1_pd(m);
  Acc8 acc;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), mv);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), mv);
    acc.lo = _mm256_add_pd(acc.lo, _mm256_mul_pd(d0, d0));
    acc.hi = _mm256_add_pd(acc.hi, _mm256_mul_pd(d1, d1));
  }
  double lanes[kLanes];
  acc.spill(lanes);
  for (std::size_t l = 0; i + l < n; ++l) {
    const double d = x[i + l] - m;
    lanes[l] += d * d;
  }
  return fold_lanes(lanes);
}

CrossMoments cross_moments_avx2(const double* x, const double* y, std::size_t n, double mx,
                                double my) {
  const __m256d mxv = _mm256_set1_pd(mx);
  const __m256d myv = _mm256_set1_pd(my);
  Acc8 axx, axy, ayy;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d dx0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), mxv);
    const __m256d dx1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), mxv);
    const __m256d dy0 = _mm256_sub_pd(_mm256_loadu_pd(y + i), myv);
    const __m256d dy1 = _mm256_sub_pd(_mm256_loadu_pd(y + i + 4), myv);
    axx.lo = _mm256_add_pd(axx.lo, _mm256_mul_pd(dx0, dx0));
    axx.hi = _mm256_add_pd(axx.hi, _mm256_mul_pd(dx1, dx1));
    axy.lo = _mm256_add_pd(axy.lo, _mm256_mul_pd(dx0, dy0));
    axy.hi = _mm256_add_pd(axy.hi, _mm256_mul_pd(dx1, dy1));
    ayy.lo = _mm256_add_pd(ayy.lo, _mm256_mul_pd(dy0, dy0));
    ayy.hi = _mm256_add_pd(ayy.hi, _mm256_mul_pd(dy1, dy1));
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

std::size_t clip_avx2(const double* x, const double* lo, const double* hi, double* out,
                      std::size_t n) {
  std::size_t first_bad = n;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d lv = _mm256_loadu_pd(lo + i);
    const __m256d hv = _mm256_loadu_pd(hi + i);
    const __m256d raised = _mm256_max_pd(_mm256_loadu_pd(x + i), lv);
    _mm256_storeu_pd(out + i, _mm256_min_pd(raised, hv));
    if (first_bad == n) {
      const int bad = _mm256_movemask_pd(_mm256_cmp_pd(lv, hv, _CMP_GT_OQ));
      if (bad != 0) first_bad = i + static_cast<std::size_t>(__builtin_ctz(bad));
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
