#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "guardrail/mc/quadrature.hpp"

using namespace guardrail;
using namespace guardrail::mc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST_SUITE("quadrature") {
  TEST_CASE("linear on the unit interval") {
    const auto r = quadrature_1d([](double x) { return x; }, 0.0, 1.0);
    CHECK(r.mean == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.half_width <= 1e-8);
    CHECK(r.method == Method::kQuadrature);
  }

  TEST_CASE("gaussian variance over the real line") {
    const auto r = quadrature_1d([](double x) { return x * x * phi(x); }, -kInf, kInf);
    CHECK(std::abs(r.mean - 1.0) <= 1e-8);
    CHECK(r.half_width <= 1e-8);
  }

  TEST_CASE("heavy algebraic tail") {
    // 3 eps / (x - x*)^4 * (x - x*)^2 on (-inf, x* - 1] integrates to 3 eps.
    const double eps = 0.5;
    const double xs = 0.3;
    const auto r = quadrature_1d(
        [&](double x) { return 3.0 * eps / std::pow(x - xs, 4) * (x - xs) * (x - xs); }, -kInf,
        xs - 1.0);
    CHECK(std::abs(r.mean - 1.5) <= 1e-8);
  }

  TEST_CASE("reversed limits flip the sign") {
    const auto r = quadrature_1d([](double x) { return x * x; }, 2.0, 0.0);
    CHECK(r.mean == doctest::Approx(-8.0 / 3.0));
  }

  TEST_CASE("breakpoints at a discontinuity") {
    auto step = [](double x) { return x >= 0.5 ? (x * x - 0.25) * phi(x) : 0.0; };
    QuadratureOptions with;
    with.breakpoints = {0.5};
    const auto a = quadrature_1d(step, -kInf, kInf, with);
    const auto b = quadrature_1d([](double x) { return (x * x - 0.25) * phi(x); }, 0.5, kInf);
    CHECK(std::abs(a.mean - b.mean) <= 2e-8);
    // Without the breakpoint bisection still localizes the jump.
    const auto c = quadrature_1d(step, -kInf, kInf);
    CHECK(std::abs(c.mean - b.mean) <= c.half_width + b.half_width);
  }

  TEST_CASE("non-convergence carries the partial estimate") {
    QuadratureOptions o;
    o.max_subdivisions = 3;
    o.abs_tol = 1e-14;
    try {
      quadrature_1d([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, o);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.code() == ErrorCode::kConvergence);
      CHECK(e.partial().mean > 1.5);
      CHECK(e.partial().half_width > 1e-14);
    }
  }

  TEST_CASE("non-finite integrand is a domain error") {
    CHECK_THROWS_AS(quadrature_1d([](double) { return std::nan(""); }, 0.0, 1.0), Error);
  }

  TEST_CASE("2-D unit square of one") {
    const auto r = quadrature_2d([](double, double) { return 1.0; }, {0, 1, 0, 1});
    CHECK(r.mean == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("2-D independent normals, f = x y") {
    const auto r = quadrature_2d([](double x, double y) { return x * y * phi(x) * phi(y); },
                                 {-kInf, kInf, -kInf, kInf});
    CHECK(std::abs(r.mean) <= 1e-8);
  }

  TEST_CASE("2-D benefit reduces to the 1-D integral") {
    // X_a ~ N(0,1), upper bound degenerate at 0.5 approximated by a narrow uniform.
    // With f(x, y) = phi(x) on [-inf,inf] x [0,1], the y-integral is trivial.
    auto one_d = quadrature_1d([](double x) { return (x * x - 0.25) * phi(x); }, 0.5, kInf);
    QuadratureOptions o;
    o.breakpoints = {0.5};
    auto two_d = quadrature_2d(
        [](double x, double) { return x >= 0.5 ? (x * x - 0.25) * phi(x) : 0.0; },
        {-kInf, kInf, 0.0, 1.0}, o);
    CHECK(std::abs(one_d.mean - two_d.mean) <= one_d.half_width + two_d.half_width + 1e-12);
  }

  TEST_CASE("2-D diagonal breakpoints") {
    // P(X <= Y) for independent standard normals is 1/2.
    QuadratureOptions o;
    auto r = quadrature_2d([](double x, double y) { return x <= y ? phi(x) * phi(y) : 0.0; },
                           {-kInf, kInf, -kInf, kInf}, o,
                           [](double x) { return std::vector<double>{x}; });
    CHECK(std::abs(r.mean - 0.5) <= 1e-8);
  }
}
