#include <cstdlib>
#include <string_view>

#include "guardrail/core/errors.hpp"
#include "kernels_impl.hpp"

namespace guardrail::simd {
namespace {

constexpr KernelTable kScalar{Isa::kScalar, detail::sum_scalar, detail::sum_sq_dev_scalar,
                              detail::cross_moments_scalar, detail::clip_scalar};

#if defined(GUARDRAIL_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::kAvx2, detail::sum_avx2, detail::sum_sq_dev_avx2,
                            detail::cross_moments_avx2, detail::clip_avx2};
#endif

#if defined(GUARDRAIL_HAVE_NEON)
constexpr KernelTable kNeon{Isa::kNeon, detail::sum_neon, detail::sum_sq_dev_neon,
                            detail::cross_moments_neon, detail::clip_neon};
#endif

const KernelTable& choose() {
  const char* env = std::getenv("GUARDRAIL_SIMD");
  if (env != nullptr) {
    const std::string_view want(env);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (want == to_string(isa)) {
        if (const KernelTable* t = kernels_for(isa)) return *t;
      }
    }
    return kScalar;
  }
  if (const KernelTable* t = kernels_for(Isa::kAvx2)) return *t;
  if (const KernelTable* t = kernels_for(Isa::kNeon)) return *t;
  return kScalar;
}

void check_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::kArgument, "simd kernel: operand lengths differ");
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &kScalar;
    case Isa::kAvx2:
#if defined(GUARDRAIL_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2")) return &kAvx2;
#endif
      return nullptr;
    case Isa::kNeon:
#if defined(GUARDRAIL_HAVE_NEON)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& active_kernels() {
  static const KernelTable& table = choose();
  return table;
}

double sum(std::span<const double> x) { return active_kernels().sum(x.data(), x.size()); }

double sum_sq_dev(std::span<const double> x, double m) {
  return active_kernels().sum_sq_dev(x.data(), x.size(), m);
}

CrossMoments cross_moments(std::span<const double> x, std::span<const double> y, double mx,
                           double my) {
  check_same_size(x.size(), y.size());
  return active_kernels().cross_moments(x.data(), y.data(), x.size(), mx, my);
}

std::size_t clip(std::span<const double> x, std::span<const double> lo,
                 std::span<const double> hi, std::span<double> out) {
  check_same_size(x.size(), lo.size());
  check_same_size(x.size(), hi.size());
  check_same_size(x.size(), out.size());
  return active_kernels().clip(x.data(), lo.data(), hi.data(), out.data(), x.size());
}

}  // namespace guardrail::simd
