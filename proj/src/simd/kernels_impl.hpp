#pragma once

// Raw-pointer kernel entry points. The ISA-specific translation units include
// only this header and the intrinsics header so that no inline library code is
// instantiated with wider instruction sets than the rest of the binary.

#include <cstddef>

#include "guardrail/simd/kernels.hpp"

namespace guardrail::simd::detail {

inline constexpr std::size_t kLanes = 8;

inline double fold_lanes(const double* acc) {
  const double f0 = acc[0] + acc[4];
  const double f1 = acc[1] + acc[5];
  const double f2 = acc[2] + acc[6];
  const double f3 = acc[3] + acc[7];
  return (f0 + f1) + (f2 + f3);
}

double sum_scalar(const double* x, std::size_t n);
double sum_sq_dev_scalar(const double* x, std::size_t n, double m);
CrossMoments cross_moments_scalar(const double* x, const double* y, std::size_t n, double mx,
                                  double my);
std::size_t clip_scalar(const double* x, const double* lo, const double* hi, double* out,
                        std::size_t n);

#if defined(GUARDRAIL_HAVE_AVX2)
double sum_avx2(const double* x, std::size_t n);
double sum_sq_dev_avx2(const double* x, std::size_t n, double m);
CrossMoments cross_moments_avx2(const double* x, const double* y, std::size_t n, double mx,
                                double my);
std::size_t clip_avx2(const double* x, const double* lo, const double* hi, double* out,
                      std::size_t n);
#endif

#if defined(GUARDRAIL_HAVE_NEON)
double sum_neon(const double* x, std::size_t n);
double sum_sq_dev_neon(const double* x, std::size_t n, double m);
CrossMoments cross_moments_neon(const double* x, const double* y, std::size_t n, double mx,
                                double my);
std::size_t clip_neon(const double* x, const double* lo, const double* hi, double* out,
                      std::size_t n);
#endif

}  // namespace guardrail::simd::detail
