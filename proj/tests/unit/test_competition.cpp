#include <cmath>
#include <vector>

#include "doctest.h"
#include "guardrail/competition/competition.hpp"
#include "guardrail/core/errors.hpp"

using namespace guardrail;
using namespace guardrail::competition;
using mc::RngStream;

namespace {

DuopolyParams base_params(double noise = 1.0) { return {10.0, 2.0, 1.0, noise}; }

PriceHistoryModel history(double mu, double rho, PriceFamily fam = PriceFamily::kGaussian) {
  return {mu, 1.0, rho, fam};
}

// Both roots of r(q) - r(p_a) = 0 in the competitor price q, where the
// matched price is q itself: -(beta-gamma) q^2 + (alpha - gamma p_a) q
// - p_a (alpha - beta p_a) = 0.
std::pair<double, double> revenue_equality_roots(const DuopolyParams& pr, double p_a) {
  const double A = -(pr.beta - pr.gamma);
  const double B = pr.alpha - pr.gamma * p_a;
  const double C = -p_a * (pr.alpha - pr.beta * p_a);
  const double disc = std::sqrt(B * B - 4.0 * A * C);
  const double q = -0.5 * (B + std::copysign(disc, B));
  const double r1 = q / A;
  const double r2 = C / q;
  return {std::min(r1, r2), std::max(r1, r2)};
}

}  // namespace

TEST_SUITE("competition") {
  TEST_CASE("noiseless demand lies on the plane") {
    RngStream rng(1);
    const std::vector<double> p{1.0, 2.0, 3.5};
    const std::vector<double> q{2.0, 0.5, 4.0};
    const History h = simulate_demand(base_params(0.0), p, q, rng);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(h.demand[i] == 10.0 - 2.0 * p[i] + 1.0 * q[i]);
    }
  }

  TEST_CASE("exact recovery and the rho = 1 slope") {
    const DuopolyParams mono{10.0, 2.0, 0.0, 0.0};
    const MonopolyFit f = ols_monopoly_fit(simulate_history(mono, history(4.0, 0.3), 200, RngStream(2)));
    CHECK(f.alpha_hat == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(f.beta_hat == doctest::Approx(2.0).epsilon(1e-12));

    const MonopolyFit g = ols_monopoly_fit(simulate_history(base_params(0.0), history(4.0, 1.0), 200, RngStream(3)));
    CHECK(g.alpha_hat == doctest::Approx(10.0).epsilon(1e-10));
    CHECK(g.beta_hat == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("large-sample fit near the biased limit") {
    const std::size_t n = 100000;
    for (double rho : {0.0, 0.5}) {
      const PriceHistoryModel h = history(4.0, rho);
      const MonopolyFit f = ols_monopoly_fit(simulate_history(base_params(), h, n, RngStream(4)));
      // Residual variance gamma^2 sigma^2 (1 - rho^2) + noise^2 over n sigma^2.
      const double se = std::sqrt((1.0 - rho * rho + 1.0) / static_cast<double>(n));
      CHECK(std::abs(f.beta_hat - (2.0 - rho)) < 5.0 * se);
      CHECK(std::abs(f.alpha_hat - (10.0 + 4.0 * (1.0 - rho))) < 5.0 * 4.2 * se);
    }
  }

  TEST_CASE("streaming fit matches the materialized fit and ignores threads") {
    const PriceHistoryModel h = history(4.0, 0.2);
    const std::size_t n = 50000;
    const MonopolyFit a = ols_monopoly_fit(simulate_history(base_params(), h, n, RngStream(5)));
    const MonopolyFit b1 = streaming_monopoly_fit(base_params(), h, n, RngStream(5), 1);
    const MonopolyFit b4 = streaming_monopoly_fit(base_params(), h, n, RngStream(5), 4);
    CHECK(b1.beta_hat == doctest::Approx(a.beta_hat).epsilon(1e-10));
    CHECK(b1.alpha_hat == doctest::Approx(a.alpha_hat).epsilon(1e-10));
    CHECK(b1.beta_hat == b4.beta_hat);
    CHECK(b1.alpha_hat == b4.alpha_hat);
  }

  TEST_CASE("history moments for both families") {
    for (PriceFamily fam : {PriceFamily::kGaussian, PriceFamily::kLognormal}) {
      const PriceHistoryModel h{4.0, 1.0, 0.6, fam};
      const History d = simulate_history(base_params(), h, 200000, RngStream(6));
      double mp = 0, mq = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        mp += d.price[i];
        mq += d.competitor[i];
      }
      mp /= d.size();
      mq /= d.size();
      double vp = 0, vq = 0, cpq = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        vp += (d.price[i] - mp) * (d.price[i] - mp);
        vq += (d.competitor[i] - mq) * (d.competitor[i] - mq);
        cpq += (d.price[i] - mp) * (d.competitor[i] - mq);
      }
      vp /= d.size();
      vq /= d.size();
      cpq /= d.size();
      CHECK(mp == doctest::Approx(4.0).epsilon(0.005));
      CHECK(mq == doctest::Approx(4.0).epsilon(0.005));
      CHECK(vp == doctest::Approx(1.0).epsilon(0.03));
      CHECK(vq == doctest::Approx(1.0).epsilon(0.03));
      CHECK(cpq / std::sqrt(vp * vq) == doctest::Approx(0.6).epsilon(0.02));
    }
  }

  TEST_CASE("algorithmic and plim prices") {
    CHECK(algorithmic_price(10.0, 2.0) == 2.5);
    CHECK_THROWS_AS(algorithmic_price(1.0, 0.0), Error);
    try {
      algorithmic_price(1.0, -1.0);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNonpositiveSlope);
    }
    CHECK(plim_price(base_params(), history(4.0, 1.0)) == doctest::Approx(5.0));
    CHECK(plim_price(base_params(), history(10.0 / 3.0, 0.0)) == doctest::Approx(10.0 / 3.0));
    CHECK(plim_price({10.0, 2.0, 0.0, 1.0}, history(4.0, 0.0)) == 2.5);
    CHECK(plim_price(base_params(), history(4.0, 0.0)) == 3.5);
    CHECK(algorithmic_price(10.0 + 4.0, 2.0) == plim_price(base_params(), history(4.0, 0.0)));
  }

  TEST_CASE("equilibrium prices") {
    const Equilibrium e = equilibrium_prices(base_params());
    CHECK(e.nash == doctest::Approx(10.0 / 3.0));
    CHECK(e.collusive == doctest::Approx(5.0));
    const Equilibrium z = equilibrium_prices({10.0, 2.0, 1e-9, 1.0});
    CHECK(z.nash == doctest::Approx(2.5));
    CHECK(z.collusive == doctest::Approx(2.5));
    RngStream rng(7);
    for (int i = 0; i < 500; ++i) {
      const double beta = rng.uniform(0.5, 5.0);
      const DuopolyParams p{rng.uniform(1.0, 20.0), beta, rng.uniform(0.01, 0.99) * beta, 1.0};
      const Equilibrium q = equilibrium_prices(p);
      CHECK(q.nash < q.collusive);
    }
    CHECK_THROWS_AS(DuopolyParams({10.0, 1.0, 1.0, 1.0}).validate(), Error);
  }

  TEST_CASE("matching threshold against the revenue-equality roots") {
    const DuopolyParams pr = base_params();
    const MatchingThreshold t = matching_threshold(pr, history(4.0, 0.0));
    CHECK(t.p_low == 3.0);
    CHECK(t.p_high == 3.5);
    CHECK_FALSE(t.boundary);
    const auto roots = revenue_equality_roots(pr, t.p_high);
    CHECK(std::abs(roots.first - t.p_low) < 1e-8);
    CHECK(std::abs(roots.second - t.p_high) < 1e-8);

    const MatchingThreshold b = matching_threshold(pr, history(10.0 / 3.0, 0.0));
    CHECK(b.boundary);
    CHECK(b.p_low == doctest::Approx(b.nash));
    CHECK(b.p_high == doctest::Approx(b.nash));

    for (double mu : {4.0, 6.0, 9.0}) {
      const MatchingThreshold r = matching_threshold(pr, history(mu, 1.0));
      CHECK(r.p_low == doctest::Approx(10.0 * (2.0 - 2.0) / (2.0 * 1.0)));
      CHECK(std::abs(revenue_equality_roots(pr, r.p_high).first - r.p_low) < 1e-8);
    }

    try {
      matching_threshold(pr, history(3.0, 0.0));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kHypothesisViolated);
    }
  }

  TEST_CASE("ordering p_L <= p_NE <= plim over random parameters") {
    RngStream rng(8);
    for (int i = 0; i < 2000; ++i) {
      const double beta = rng.uniform(0.5, 5.0);
      const DuopolyParams p{rng.uniform(1.0, 20.0), beta, rng.uniform(0.01, 0.99) * beta, 1.0};
      const double nash = equilibrium_prices(p).nash;
      const PriceHistoryModel h = history(nash * rng.uniform(1.0, 3.0), rng.uniform());
      const MatchingThreshold t = matching_threshold(p, h);
      const double tol = 1e-12 * t.p_high;
      CHECK(t.p_low <= t.nash + tol);
      CHECK(t.nash <= t.p_high + tol);
      CHECK(std::abs(revenue_equality_roots(p, t.p_high).first - t.p_low) < 1e-8 * t.p_high);
    }
  }

  TEST_CASE("revenue comparison signs around the threshold") {
    const DuopolyParams pr = base_params();
    const double pa = 3.5;
    for (double q : {3.05, 3.2, 3.45}) CHECK(revenue_compare(pr, pa, q).gain() > 0.0);
    CHECK(revenue_compare(pr, pa, 2.9).gain() < 0.0);
    CHECK(revenue_compare(pr, pa, 4.0).gain() == 0.0);
    // Sign flips only at p_L and p_a over a fine grid.
    int flips = 0;
    double prev = revenue_compare(pr, pa, 0.01).gain();
    for (int i = 2; i < 2 * 334; ++i) {
      const double q = 0.01 * i;
      const double g = revenue_compare(pr, pa, q).gain();
      if ((g > 0) != (prev > 0)) {
        ++flips;
        CHECK((std::abs(q - 3.0) < 0.011 || std::abs(q - 3.5) < 0.011));
      }
      prev = g;
    }
    CHECK(flips == 2);
  }

  TEST_CASE("replication records") {
    const CompetitionOutcome o = run_replication(base_params(), history(4.0, 0.0), 20000, 3.2, RngStream(9));
    CHECK_FALSE(o.degenerate);
    CHECK(o.p_prime == 3.2);
    CHECK(o.p_matched == std::min(o.p_a, 3.2));
    CHECK(o.revenue_matched == revenue(base_params(), o.p_matched, 3.2));

    const CompetitionOutcome d = run_replication(base_params(), history(4.0, 0.0), 1000, {}, RngStream(9));
    CHECK(d.p_prime == d.p_prime);

    bool saw_degenerate = false;
    for (std::uint64_t s = 0; s < 200 && !saw_degenerate; ++s) {
      const CompetitionOutcome x = run_replication(base_params(1e3), history(4.0, 0.0), 3, {}, RngStream(s));
      if (x.degenerate) {
        saw_degenerate = true;
        CHECK(std::isnan(x.p_a));
        CHECK(x.beta_hat <= 0.0);
      }
    }
    CHECK(saw_degenerate);
  }
}
