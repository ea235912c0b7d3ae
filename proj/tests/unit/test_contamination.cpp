#include <cmath>
#include <span>

#include "doctest.h"
#include "guardrail/contamination/contamination.hpp"
#include "guardrail/core/errors.hpp"

using namespace guardrail;
using namespace guardrail::contamination;
using mc::RngStream;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

BoundedLinearModel unit_square_model(double noise = 1.0) {
  return {vec({1.0, 2.0}), Domain::box(vec({0.0, 0.0}), vec({1.0, 1.0})), noise};
}

mc::VectorSampler gaussian(double sd) {
  return [sd](RngStream& r, std::span<double> out) {
    for (double& x : out) x = sd * r.normal();
  };
}

// Scalar errors-in-variables setup with N(0, 1) covariate and N(0, su^2) error.
CovariateContamination scalar_eiv(double su) {
  CovariateContamination c;
  c.dim = 1;
  c.z_sampler = gaussian(1.0);
  c.u_sampler = gaussian(su);
  c.sigma1 = Matrix::Constant(1, 1, 1.0);
  c.sigma2 = Matrix::Constant(1, 1, su * su);
  c.z_domain = Domain::box(vec({-3.0}), vec({3.0}));
  return c;
}

// Two coordinates; training error only on the first axis, deployment error
// U0 = (0, s) with s = +-1/3 w.p. q each, so U0^T beta = +-1 for beta = (0, 3).
CovariateContamination null_space_setup(double q) {
  CovariateContamination c;
  c.dim = 2;
  c.z_sampler = [](RngStream& r, std::span<double> out) {
    out[0] = r.uniform(-1.0, 1.0);
    out[1] = r.uniform(-1.0, 1.0);
  };
  c.u_sampler = [](RngStream& r, std::span<double> out) {
    out[0] = r.normal();
    out[1] = 0.0;
  };
  c.u_deploy_sampler = [q](RngStream& r, std::span<double> out) {
    const double u = r.uniform();
    out[0] = 0.0;
    out[1] = u < q ? 1.0 / 3.0 : (u < 2.0 * q ? -1.0 / 3.0 : 0.0);
  };
  c.sigma1 = Matrix::Identity(2, 2) / 3.0;
  c.sigma2 = Matrix::Zero(2, 2);
  c.sigma2(0, 0) = 1.0;
  c.z_domain = Domain::box(vec({-1.0, -1.0}), vec({1.0, 1.0}));
  return c;
}

}  // namespace

TEST_SUITE("contamination") {
  TEST_CASE("domain extremes by enumeration") {
    const Domain sq = Domain::box(vec({0.0, 0.0}), vec({1.0, 1.0}));
    CHECK(sq.max_linear(vec({1.0, 2.0})) == 3.0);
    CHECK(sq.min_linear(vec({1.0, 2.0})) == 0.0);
    CHECK(sq.max_linear(vec({1.0, -2.0})) == 1.0);
    CHECK(sq.min_linear(vec({1.0, -2.0})) == -2.0);
    Matrix pts(3, 2);
    pts << 0.0, 1.0, 2.0, -1.0, 0.5, 0.5;
    const Domain ps = Domain::points(pts);
    CHECK(ps.max_linear(vec({1.0, 1.0})) == 1.0);
    CHECK(ps.min_linear(vec({0.0, 1.0})) == -1.0);
    CHECK(sq.grid(10).rows() == 100);
    CHECK(Domain::box(vec({1.0, 0.0}), vec({1.0, 1.0})).grid(5).rows() == 5);
    CHECK_THROWS_AS(Domain::box(vec({1.0}), vec({0.0})), Error);
  }

  TEST_CASE("two-point contamination frequency") {
    const ResponseContamination c = ResponseContamination::two_point(1.0, 0.3);
    CHECK(c.mean() == doctest::Approx(0.3));
    RngStream rng(1);
    const int n = 200000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += c.draw(rng) == 1.0;
    CHECK(std::abs(hits / double(n) - 0.3) < 4.0 * std::sqrt(0.21 / n));
    CHECK(ResponseContamination::two_point(0.0, 0.7).mean() == 0.0);
  }

  TEST_CASE("noiseless clean data predicts exactly") {
    const Dataset d = simulate_response_contaminated(unit_square_model(0.0),
                                                     ResponseContamination::two_point(1.0, 0.0), 50,
                                                     RngStream(2));
    const Vector w = vec({0.3, 0.8});
    CHECK(ols_predict(d, w) == doctest::Approx(0.3 + 1.6).epsilon(1e-12));
    Dataset bad = d;
    bad.W.col(1) = bad.W.col(0);
    CHECK_THROWS_AS(ols_fit(bad), Error);
  }

  TEST_CASE("predictions shift by the contamination mean") {
    const ResponseContamination c = ResponseContamination::two_point(1.0, 0.5);
    // The constant shift needs an intercept axis fixed at 1.
    const BoundedLinearModel mi{vec({0.0, 1.0, 2.0}),
                                Domain::box(vec({1.0, 0.0, 0.0}), vec({1.0, 1.0, 1.0})), 1.0};
    const OlsFit g = ols_fit(simulate_response_contaminated(mi, c, 200000, RngStream(4)));
    const Matrix grid = mi.domain.grid(10);
    const double band = mc::chi_critical_value(0.99, 3);
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      const Vector w = grid.row(i).transpose();
      const double bias = g.predict(w) - w.dot(mi.beta);
      CHECK(std::abs(bias - 0.5) <= band * g.prediction_se(w));
    }
  }

  TEST_CASE("general contamination with a negative mean") {
    const auto c = ResponseContamination::general([](RngStream& r) { return r.normal(-0.7, 2.0); }, -0.7);
    RngStream rng(5);
    double s = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) s += c.draw(rng);
    CHECK(std::abs(s / n + 0.7) < 4.0 * 2.0 / std::sqrt(n));
    CHECK(response_plim(c).bias == -0.7);
    CHECK(response_plim(c).loss == doctest::Approx(0.49));
    const ResponseLimit l = response_plim(ResponseContamination::two_point(1.0, 0.5));
    CHECK(l.bias == 0.5);
    CHECK(l.loss == 0.25);
    CHECK(response_plim(ResponseContamination::two_point(1.0, 0.0)).bias == 0.0);
  }

  TEST_CASE("response bound conditions") {
    const BoundedLinearModel m = unit_square_model();
    const ResponseContamination c = ResponseContamination::two_point(1.0, 0.5);
    const ResponseCondition one = response_guardrail_condition(m, c, 2.5);
    CHECK(one.upper_threshold == 2.5);
    CHECK(one.holds);
    CHECK_FALSE(response_guardrail_condition(m, c, 2.4).holds);
    CHECK(response_guardrail_condition(m, c, std::numeric_limits<double>::infinity()).holds);
    const ResponseCondition two = response_guardrail_condition(m, c, 2.5, 0.5);
    CHECK(two.lower_threshold == 0.5);
    CHECK(two.holds);
    CHECK_FALSE(response_guardrail_condition(m, c, 2.5, 0.6).holds);
    CHECK_THROWS_AS(response_guardrail_condition(m, c, 1.0, 2.0), Error);
  }

  TEST_CASE("asymptotic pointwise losses") {
    const BoundedLinearModel m = unit_square_model();
    const ResponseContamination c = ResponseContamination::two_point(1.0, 0.5);
    const Matrix grid = m.domain.grid(10);
    RngStream rng(6);
    for (int t = 0; t < 200; ++t) {
      const double up = 2.5 + rng.uniform(0.0, 2.0);
      const double lo = 0.5 - rng.uniform(0.0, 2.0);
      REQUIRE(response_guardrail_condition(m, c, up, lo).holds);
      for (const LossRow& r : mse_compare_response(m, c, {lo, up}, grid)) {
        CHECK(r.loss_algorithmic == 0.25);
        CHECK(r.loss_safeguarded <= r.loss_algorithmic);
      }
    }
    bool worse = false;
    for (const LossRow& r : mse_compare_response(m, c, {-1e300, 2.4}, grid)) {
      worse = worse || r.loss_safeguarded > 0.25;
    }
    CHECK(worse);
    for (const LossRow& r : mse_compare_response(m, c, {}, grid)) {
      CHECK(r.loss_safeguarded == r.loss_algorithmic);
    }
  }

  TEST_CASE("covariate limits") {
    const Vector b = vec({0.0, 3.0});
    Matrix s2 = Matrix::Zero(2, 2);
    const CovariateLimit none = covariate_plim(Matrix::Identity(2, 2), s2, vec({1.0, -2.0}));
    CHECK(none.consistent);
    CHECK(none.beta.isApprox(vec({1.0, -2.0})));
    s2(0, 0) = 1.0;
    const CovariateLimit ns = covariate_plim(Matrix::Identity(2, 2), s2, b);
    CHECK(ns.consistent);
    CHECK((ns.beta - b).norm() < 1e-14);
    const CovariateLimit att = covariate_plim(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0), vec({2.0}));
    CHECK_FALSE(att.consistent);
    CHECK(att.beta(0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(covariate_plim(Matrix::Zero(1, 1), Matrix::Zero(1, 1), vec({1.0})), Error);
  }

  TEST_CASE("attenuation by Monte Carlo") {
    const CovariateContamination c = scalar_eiv(1.0);
    const OlsFit f = ols_fit(simulate_covariate_contaminated(c, vec({2.0}), 0.5, 200000, RngStream(7)));
    const double se = std::sqrt(f.covariance(0, 0));
    CHECK(std::abs(f.beta_hat(0) - covariate_plim(c, vec({2.0})).beta(0)) < 4.0 * se);
  }

  TEST_CASE("random covariate limits match large-sample OLS") {
    RngStream rng(8);
    for (int t = 0; t < 5; ++t) {
      Matrix a = Matrix::Random(2, 2);
      for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
      const Matrix l1 = a + 1.5 * Matrix::Identity(2, 2);
      const Matrix l2 = Matrix::Identity(2, 2) * rng.uniform(0.2, 1.0);
      CovariateContamination c;
      c.dim = 2;
      c.z_sampler = [l1](RngStream& r, std::span<double> out) {
        const Eigen::Vector2d e(r.normal(), r.normal());
        Eigen::Map<Eigen::Vector2d>(out.data()) = l1 * e;
      };
      c.u_sampler = [l2](RngStream& r, std::span<double> out) {
        const Eigen::Vector2d e(r.normal(), r.normal());
        Eigen::Map<Eigen::Vector2d>(out.data()) = l2 * e;
      };
      c.sigma1 = l1 * l1.transpose();
      c.sigma2 = l2 * l2.transpose();
      const Vector beta = vec({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
      const OlsFit f = ols_fit(simulate_covariate_contaminated(c, beta, 0.3, 200000, RngStream(9, {std::uint64_t(t)})));
      const Vector diff = f.beta_hat - covariate_plim(c, beta).beta;
      // Chi-square(2) 99.9% Mahalanobis bound.
      CHECK(diff.dot(f.covariance.ldlt().solve(diff)) < 13.8);
    }
  }

  TEST_CASE("moment assumptions") {
    CHECK_NOTHROW(check_moment_assumptions(scalar_eiv(1.0), 10000, RngStream(10)));
    CovariateContamination bad = scalar_eiv(1.0);
    bad.z_sampler = [](RngStream&, std::span<double> out) { out[0] = 0.0; };
    CHECK_THROWS_AS(check_moment_assumptions(bad, 1000, RngStream(10)), Error);
  }

  TEST_CASE("covariate bound condition and certification") {
    const CovariateContamination c = null_space_setup(0.3);
    const Vector beta = vec({0.0, 3.0});
    const CovariateCondition cond = covariate_guardrail_condition(c, beta, {-2.5, 2.5}, 1.0, 0.3, RngStream(11));
    CHECK(cond.slack == doctest::Approx(std::sqrt(0.3 / 0.7)));
    CHECK(cond.lower_threshold == doctest::Approx(-3.0 + cond.slack));
    CHECK(cond.upper_threshold == doctest::Approx(3.0 - cond.slack));
    CHECK(cond.holds);
    const CovariateCondition c2 = covariate_guardrail_condition(c, beta, {}, 1.0, 0.2, RngStream(11));
    CHECK(c2.slack == doctest::Approx(0.5));
    CHECK(c2.holds);
    CHECK_FALSE(covariate_guardrail_condition(c, beta, {-2.0, 2.0}, 1.0, 0.3, RngStream(11)).holds);

    auto code_of = [&](auto&& f) {
      try {
        f();
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::kArgument;
    };
    CHECK(code_of([&] { covariate_guardrail_condition(c, beta, {}, 1.0, 0.5, RngStream(1)); }) ==
          ErrorCode::kHypothesisViolated);
    CHECK(code_of([&] { covariate_guardrail_condition(c, beta, {}, 1.0, 0.4, RngStream(1)); }) ==
          ErrorCode::kHypothesisViolated);
    CHECK(code_of([&] { covariate_guardrail_condition(c, vec({1.0, 3.0}), {}, 1.0, 0.3, RngStream(1)); }) ==
          ErrorCode::kHypothesisViolated);
    CovariateContamination zero = c;
    zero.u_deploy_sampler = [](RngStream&, std::span<double> out) { out[0] = out[1] = 0.0; };
    CHECK(code_of([&] { covariate_guardrail_condition(zero, beta, {}, 1.0, 0.1, RngStream(1)); }) ==
          ErrorCode::kHypothesisViolated);
  }

  TEST_CASE("expected loss does not increase under the condition") {
    const CovariateContamination c = null_space_setup(0.3);
    const Vector beta = vec({0.0, 3.0});
    const CovariateCondition cond = covariate_guardrail_condition(c, beta, {-2.4, 2.4}, 1.0, 0.3, RngStream(12));
    REQUIRE(cond.holds);
    const ExpectedLossComparison cmp = mse_compare_covariate(c, beta, beta, {-2.4, 2.4}, 200000, RngStream(13));
    CHECK(cmp.algorithmic.mean == doctest::Approx(0.6).epsilon(0.02));
    CHECK(cmp.difference.lower() <= 0.0);
    CHECK(cmp.difference.mean <= cmp.difference.half_width);
    const ExpectedLossComparison same = mse_compare_covariate(c, beta, beta, {}, 10000, RngStream(13));
    CHECK(same.difference.mean == 0.0);
  }
}
