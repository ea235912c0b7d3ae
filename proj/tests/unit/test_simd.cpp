#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"
#include "guardrail/mc/rng.hpp"
#include "guardrail/simd/kernels.hpp"

namespace simd = guardrail::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale) {
  guardrail::mc::RngStream rng(seed);
  std::vector<double> v(n);
  // Mixed magnitudes make reduction-order differences visible.
  for (auto& x : v) x = scale * rng.normal() * std::exp(4.0 * rng.uniform());
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<const simd::KernelTable*> variants() {
  std::vector<const simd::KernelTable*> out;
  for (auto isa : {simd::Isa::kAvx2, simd::Isa::kNeon}) {
    if (const auto* t = simd::kernels_for(isa)) out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar reference matches naive sums closely") {
    const auto x = random_vector(1001, 1, 1.0);
    long double naive = 0;
    for (double v : x) naive += v;
    const auto& s = simd::scalar_kernels();
    CHECK(s.sum(x.data(), x.size()) == doctest::Approx(static_cast<double>(naive)).epsilon(1e-12));
    CHECK(s.sum(nullptr, 0) == 0.0);
  }

  TEST_CASE("every compiled variant is bit-identical to scalar") {
    const auto& ref = simd::scalar_kernels();
    INFO("variants available: " << variants().size());
    for (const auto* t : variants()) {
      INFO("isa = " << simd::to_string(t->isa));
      for (std::size_t n = 0; n <= 67; ++n) {
        const auto x = random_vector(n, 100 + n, 3.0);
        const auto y = random_vector(n, 200 + n, 0.5);
        REQUIRE(same_bits(t->sum(x.data(), n), ref.sum(x.data(), n)));
        REQUIRE(same_bits(t->sum_sq_dev(x.data(), n, 0.25), ref.sum_sq_dev(x.data(), n, 0.25)));
        const auto a = t->cross_moments(x.data(), y.data(), n, 0.1, -0.2);
        const auto b = ref.cross_moments(x.data(), y.data(), n, 0.1, -0.2);
        REQUIRE(same_bits(a.sxx, b.sxx));
        REQUIRE(same_bits(a.sxy, b.sxy));
        REQUIRE(same_bits(a.syy, b.syy));
      }
      const auto big = random_vector(100003, 7, 1.0);
      CHECK(same_bits(t->sum(big.data(), big.size()), ref.sum(big.data(), big.size())));
    }
  }

  TEST_CASE("clip variants agree including ties, infinities and NaN") {
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x{5, 2, 0, 1, 3, -inf, inf, nan, 0.0, -0.0, 7, 1};
    std::vector<double> lo{1, 1, 1, 1, 1, -inf, -inf, 0, -0.0, 0.0, -inf, 2};
    std::vector<double> hi{3, 3, 3, 3, 3, inf, 4, 1, 0.0, -0.0, inf, 2};
    const auto& ref = simd::scalar_kernels();
    std::vector<double> expect(x.size());
    CHECK(ref.clip(x.data(), lo.data(), hi.data(), expect.data(), x.size()) == x.size());
    CHECK(expect[0] == 3);
    CHECK(expect[1] == 2);
    CHECK(expect[2] == 1);
    CHECK(expect[5] == -inf);
    CHECK(expect[6] == 4);
    CHECK(expect[11] == 2);
    for (const auto* t : variants()) {
      std::vector<double> got(x.size());
      CHECK(t->clip(x.data(), lo.data(), hi.data(), got.data(), x.size()) == x.size());
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(same_bits(got[i], expect[i]));
    }
  }

  TEST_CASE("clip reports the first ill-ordered interval") {
    for (std::size_t n : {1u, 3u, 4u, 5u, 9u, 17u}) {
      for (std::size_t bad = 0; bad < n; ++bad) {
        std::vector<double> x(n, 0.5), lo(n, 0.0), hi(n, 1.0), out(n);
        lo[bad] = 2.0;
        if (bad + 1 < n) lo[n - 1] = 3.0;
        REQUIRE(simd::scalar_kernels().clip(x.data(), lo.data(), hi.data(), out.data(), n) == bad);
        for (const auto* t : variants()) {
          REQUIRE(t->clip(x.data(), lo.data(), hi.data(), out.data(), n) == bad);
        }
      }
    }
  }

  TEST_CASE("span wrappers check lengths") {
    std::vector<double> a(3), b(4);
    CHECK_THROWS(simd::cross_moments(a, b, 0, 0));
    CHECK_THROWS(simd::clip(a, a, b, a));
  }

  TEST_CASE("active table is one of the known tables") {
    const auto isa = simd::active_kernels().isa;
    CHECK(simd::kernels_for(isa) == &simd::active_kernels());
  }
}
