#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel reductions used by the Monte Carlo and least-squares paths.
//
// Every kernel has a scalar reference and optional AVX2 / NEON variants. All
// variants use the same 8-lane accumulation order (element i goes to lane
// i % 8, lanes are folded as (l0+l4, l1+l5, l2+l6, l3+l7) and then
// ((f0+f1)+(f2+f3))) and never contract multiply-add, so their results are
// bit-identical. Tests compare every available variant against the scalar
// table.

namespace guardrail::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa);

struct CrossMoments {
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
};

struct KernelTable {
  Isa isa;
  /// sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  /// sum_i (x[i] - m)^2
  double (*sum_sq_dev)(const double* x, std::size_t n, double m);
  /// centered second moments of (x, y) about (mx, my)
  CrossMoments (*cross_moments)(const double* x, const double* y, std::size_t n, double mx,
                                double my);
  /// out[i] = min(max(x[i], lo[i]), hi[i]). Returns the first index with
  /// lo[i] > hi[i], or n when every interval is well-ordered.
  std::size_t (*clip)(const double* x, const double* lo, const double* hi, double* out,
                      std::size_t n);
};

const KernelTable& scalar_kernels();

/// Table for `isa`, or nullptr when it was not compiled in or the CPU lacks it.
const KernelTable* kernels_for(Isa isa);

/// Best table for this CPU. GUARDRAIL_SIMD=scalar|avx2|neon overrides the choice
/// (falls back to scalar if the requested ISA is unavailable).
const KernelTable& active_kernels();

// Convenience wrappers over the active table.
double sum(std::span<const double> x);
double sum_sq_dev(std::span<const double> x, double m);
CrossMoments cross_moments(std::span<const double> x, std::span<const double> y, double mx,
                           double my);
std::size_t clip(std::span<const double> x, std::span<const double> lo,
                 std::span<const double> hi, std::span<double> out);

}  // namespace guardrail::simd
