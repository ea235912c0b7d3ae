#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "guardrail/core/errors.hpp"
#include "guardrail/misspec/misspec.hpp"

using namespace guardrail;
using namespace guardrail::misspec;
using mc::RngStream;

namespace {

DemandOracle decaying_demand() { return DemandOracle::exponential(1.0 / 3.0, 10.0); }

GridExperiment reference_grid(std::size_t K = 3, double sd = 0.5) { return {1.0, 10.0, 10, K, sd}; }

// Independent path: least squares on the noiseless grid through Eigen's QR,
// then the usual pricing rule.
double eigen_limit_price(const DemandOracle& f, const GridExperiment& e) {
  Eigen::MatrixXd X(e.n + 1, 2);
  Eigen::VectorXd y(e.n + 1);
  for (std::size_t j = 0; j <= e.n; ++j) {
    const double p = e.c + (e.p_bar - e.c) * static_cast<double>(j) / static_cast<double>(e.n);
    X(j, 0) = 1.0;
    X(j, 1) = -p;
    y(j) = f(p);
  }
  const Eigen::Vector2d coef = X.colPivHouseholderQr().solve(y);
  return coef(0) / (2.0 * coef(1)) + e.c / 2.0;
}

}  // namespace

TEST_SUITE("misspec") {
  TEST_CASE("grid endpoints and spacing") {
    const GridExperiment e{0.7, 9.3, 7, 1, 0.0};
    CHECK(e.price(0) == 0.7);
    CHECK(e.price(7) == 9.3);
    for (std::size_t j = 1; j <= 7; ++j) {
      CHECK(e.price(j) - e.price(j - 1) == doctest::Approx(e.step()).epsilon(1e-14));
    }
    CHECK_THROWS_AS((GridExperiment{2.0, 2.0, 10, 3, 0.5}.validate()), Error);
  }

  TEST_CASE("noiseless rows are constant and noisy rows average out") {
    const Observations z = run_grid_experiment(decaying_demand(), reference_grid(5, 0.0), RngStream(1));
    for (Eigen::Index j = 0; j < z.rows(); ++j) {
      for (Eigen::Index k = 0; k < z.cols(); ++k) CHECK(z(j, k) == decaying_demand()(reference_grid().price(j)));
    }
    const GridExperiment big = reference_grid(100000, 0.5);
    const Observations o = run_grid_experiment(decaying_demand(), big, RngStream(2));
    const Eigen::VectorXd m = o.rowwise().mean();
    for (std::size_t j = 0; j <= big.n; ++j) {
      CHECK(std::abs(m(j) - decaying_demand()(big.price(j))) < 4.0 * 0.5 / std::sqrt(1e5));
    }
  }

  TEST_CASE("linear data is recovered exactly") {
    const DemandOracle lin = DemandOracle::linear(12.0, 1.5);
    const GridExperiment e{1.0, 6.0, 8, 4, 0.0};
    const LinearFit f = ols_linear_fit(run_grid_experiment(lin, e, RngStream(3)), e);
    CHECK(f.alpha_hat == doctest::Approx(12.0).epsilon(1e-13));
    CHECK(f.beta_hat == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(algorithmic_price_misspec(6.0, 1.0, 0.0) == 3.0);
    CHECK(algorithmic_price_misspec(12.0, 1.5, 1.0) == doctest::Approx(lin.optimal_price(1.0, 6.0)));
    CHECK(limit_algorithmic_price(lin, e) == doctest::Approx(0.5 * (12.0 / 1.5 + 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(algorithmic_price_misspec(1.0, 0.0, 0.0), Error);
  }

  TEST_CASE("limit price agrees with the noiseless OLS pipeline") {
    RngStream rng(4);
    for (int i = 0; i < 200; ++i) {
      const bool iso = i % 2 == 0;
      const DemandOracle f = iso ? DemandOracle::isoelastic(rng.uniform(1.2, 4.0), rng.uniform(1.0, 50.0))
                                 : DemandOracle::exponential(rng.uniform(0.1, 2.0), rng.uniform(1.0, 50.0));
      const double c = rng.uniform(0.2, 3.0);
      const GridExperiment e{c, c + rng.uniform(0.5, 10.0), 2 + rng.below(30), 1, 0.0};
      const double a = limit_algorithmic_price(f, e);
      const double b = eigen_limit_price(f, e);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
      const LinearFit lf = ols_linear_fit(run_grid_experiment(f, e, RngStream(i)), e);
      CHECK(std::abs(algorithmic_price_misspec(lf.alpha_hat, lf.beta_hat, c) - a) <=
            1e-10 * std::max(1.0, std::abs(a)));
    }
  }

  TEST_CASE("decaying-demand fit slopes down with overwhelming frequency") {
    int down = 0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
      const LinearFit f = ols_linear_fit(run_grid_experiment(decaying_demand(), reference_grid(), RngStream(5, {std::uint64_t(r)})), reference_grid());
      down += f.beta_hat > 0.0;
    }
    CHECK(down >= 0.99 * reps);
  }

  TEST_CASE("human best index") {
    const GridExperiment e = reference_grid(1, 0.0);
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t j = 0; j <= e.n; ++j) {
      const double p = 1.0 + 0.9 * j;
      const double v = (p - 1.0) * 10.0 * std::exp(-p / 3.0);
      if (v > bv) {
        bv = v;
        best = j;
      }
    }
    CHECK(grid_best_index(decaying_demand(), e) == best);
    CHECK(human_best_index(run_grid_experiment(decaying_demand(), e, RngStream(6)), e) == best);
    CHECK(std::abs(e.price(best) - 4.0) < e.step());

    Observations ties = Observations::Constant(e.n + 1, 1, 0.0);
    ties(2, 0) = 1.0 / (e.price(2) - 1.0);
    ties(5, 0) = 1.0 / (e.price(5) - 1.0);
    const std::size_t j = human_best_index(ties, e);
    CHECK((j == 2 || j == 5));
    Observations flat = Observations::Constant(e.n + 1, 1, -1.0);
    CHECK(human_best_index(flat, e) == 0);
    flat(7, 0) = 0.5;
    CHECK(human_best_index(flat, e) == 7);
  }

  TEST_CASE("exact ties go to the smallest index") {
    const GridExperiment e{0.0, 4.0, 4, 1, 0.0};
    Observations o(5, 1);
    o << 0.0, 2.0, 1.0, 0.5, 0.25;  // profits 0, 2, 2, 1.5, 1
    CHECK(human_best_index(o, e) == 1);
  }

  TEST_CASE("interval clamping and safeguarded price") {
    const GridExperiment e = reference_grid();
    CHECK(human_interval(0, e).lo == e.price(0));
    CHECK(human_interval(0, e).hi == e.price(1));
    CHECK(human_interval(10, e).lo == e.price(9));
    CHECK(human_interval(10, e).hi == e.price(10));
    CHECK(safeguarded_price_misspec(4.0, 3, e) == 4.0);
    CHECK(safeguarded_price_misspec(7.0, 3, e) == e.price(4));
    CHECK(safeguarded_price_misspec(1.5, 3, e) == e.price(2));
    CHECK_THROWS_AS(human_interval(11, e), Error);
  }

  TEST_CASE("improvement condition thresholds") {
    for (double c : {0.0, 1.0, 2.5}) {
      const GridExperiment e{c, c + 1.0, 10, 1, 0.0};
      CHECK(improvement_condition(DemandOracle::exponential(2.0, 1.0), e).threshold_p_bar ==
            doctest::Approx(3.75 + 2.25 * c).epsilon(1e-14));
      CHECK(improvement_condition(DemandOracle::isoelastic(2.0, 1.0), e).threshold_p_bar ==
            doctest::Approx(9.75 * c).epsilon(1e-14));
    }
    const GridExperiment huge{1.0, 2.0, 100000000, 1, 0.0};
    CHECK(improvement_condition(DemandOracle::isoelastic(3.0, 1.0), huge).threshold_p_bar ==
          doctest::Approx(3.0 * (1.5 - 0.5)).epsilon(1e-6));
    CHECK(improvement_condition(DemandOracle::exponential(0.5, 1.0), huge).threshold_p_bar ==
          doctest::Approx(3.0 * (2.0 + 0.5)).epsilon(1e-6));
    try {
      improvement_condition(decaying_demand(), GridExperiment{1.0, 10.0, 6, 1, 0.0});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConditionInapplicable);
    }
    CHECK_THROWS_AS(improvement_condition(DemandOracle::linear(5, 1), reference_grid()), Error);
  }

  TEST_CASE("flag implies the limit price leaves the interval") {
    RngStream rng(7);
    for (int i = 0; i < 2000; ++i) {
      const bool iso = i % 2 == 0;
      const double a = iso ? rng.uniform(1.1, 5.0) : rng.uniform(0.1, 3.0);
      const DemandOracle f = iso ? DemandOracle::isoelastic(a, 1.0) : DemandOracle::exponential(a, 1.0);
      const double c = rng.uniform(0.1, 3.0);
      const GridExperiment e{c, c + rng.uniform(0.1, 40.0), 7 + rng.below(40), 1, 0.0};
      const ImprovementCondition cond = improvement_condition(f, e);
      if (cond.strict_improvement) {
        const PriceInterval iv = human_interval(grid_best_index(f, e), e);
        CHECK_FALSE(iv.contains(limit_algorithmic_price(f, e)));
      }
    }
  }

  TEST_CASE("concavity estimators") {
    const GridExperiment e = reference_grid(10000, 0.5);
    const double curv = estimate_concavity(decaying_demand(), e, ConcavityEstimator::kCurvature);
    CHECK(curv < 0.0);
    // Profit 10 (p-1) e^{-p/3} has r'' = (10/9) e^{-p/3} (p - 7), most negative... at p = 10.
    CHECK(curv == doctest::Approx(-(10.0 / 9.0) * std::exp(-10.0 / 3.0) * 3.0).epsilon(1e-3));
    try {
      finite_sample_check(decaying_demand(), e, 0.05, 10, RngStream(8));
      FAIL("expected an error");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::kHypothesisViolated);
    }
    const double steps = estimate_concavity(decaying_demand(), e, ConcavityEstimator::kGridSteps);
    CHECK(steps > 0.0);
    // Oracle: smallest neighbour step on the correct side of p* = 4.
    const double h = 0.9;
    double lam = 1e300;
    for (int j = 0; j <= 10; ++j) {
      const double p = 1.0 + h * j;
      auto r = [](double x) { return (x - 1.0) * 10.0 * std::exp(-x / 3.0); };
      if (p < 4.0 && j > 0) lam = std::min(lam, 2.0 * (r(p) - r(p - h)) / (h * h));
      if (p >= 4.0 && j < 10) lam = std::min(lam, 2.0 * (r(p) - r(p + h)) / (h * h));
    }
    CHECK(steps == doctest::Approx(lam).epsilon(1e-12));

    const DemandOracle lin = DemandOracle::linear(10.0, 1.0);
    CHECK(estimate_concavity(lin, e, ConcavityEstimator::kCurvature) == doctest::Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("human miss bound by substitution") {
    const GridExperiment e = reference_grid(10000, 0.5);
    const double lambda = 0.8;
    const double expected = 22.0 * std::exp(-1e4 * 0.64 * std::pow(9.0, 4) / (32.0 * 0.25 * 100.0 * 1e4));
    CHECK(human_miss_bound(lambda, e) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(human_miss_bound(lambda, reference_grid(10, 0.0)) == 0.0);
  }

  TEST_CASE("noiseless finite-sample check") {
    const GridExperiment e = reference_grid(3, 0.0);
    const FiniteSampleReport r = finite_sample_check(decaying_demand(), e, 1e-6, 20, RngStream(9),
                                                     ConcavityEstimator::kGridSteps);
    CHECK(r.freq_ai_deviation == 0.0);
    CHECK(r.freq_human_miss == 0.0);
    CHECK(std::isnan(r.bound_ai));
    CHECK(r.guardrail_losses == 0);
  }

  TEST_CASE("guardrail never hurts when the interval contains the optimum") {
    RngStream rng(10);
    std::size_t contained = 0;
    for (int i = 0; i < 600; ++i) {
      const bool iso = i % 3 == 0;
      const DemandOracle f = iso ? DemandOracle::isoelastic(rng.uniform(1.5, 4.0), 20.0)
                                 : DemandOracle::exponential(rng.uniform(0.2, 1.0), 10.0);
      const double c = rng.uniform(0.5, 2.0);
      const GridExperiment e{c, c + rng.uniform(2.0, 12.0), 4 + rng.below(12), 1 + rng.below(20),
                             rng.uniform(0.0, 1.0)};
      const MisspecOutcome o = run_replication(f, e, RngStream(11, {std::uint64_t(i)}));
      if (o.degenerate || !o.contains_opt) continue;
      ++contained;
      CHECK(o.profit_safeguarded >= o.profit_a);
    }
    CHECK(contained > 100);
  }

  TEST_CASE("miss frequency does not grow with K") {
    std::vector<double> freq;
    for (std::size_t K : {10u, 100u, 1000u}) {
      const FiniteSampleReport r = finite_sample_check(decaying_demand(), reference_grid(K, 2.0), 0.05, 400,
                                                       RngStream(12), ConcavityEstimator::kGridSteps);
      freq.push_back(r.freq_human_miss);
      CHECK(r.guardrail_losses == 0);
    }
    // Binomial slack at 400 replications.
    for (std::size_t i = 1; i < freq.size(); ++i) CHECK(freq[i] <= freq[i - 1] + 0.06);
  }

  TEST_CASE("demand oracles") {
    CHECK(DemandOracle::isoelastic(2.0, 1.0).optimal_price(1.5, 10.0) == 3.0);
    CHECK(DemandOracle::exponential(0.5, 1.0).optimal_price(1.0, 10.0) == 3.0);
    const DemandOracle cu = DemandOracle::custom([](double p) { return 10.0 * std::exp(-p / 3.0); });
    CHECK(cu.optimal_price(1.0, 10.0) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(cu.nonincreasing_on(1.0, 10.0));
    CHECK_FALSE(DemandOracle::custom([](double p) { return p; }).nonincreasing_on(1.0, 2.0));
    CHECK_THROWS_AS(DemandOracle::isoelastic(1.0, 1.0), Error);
  }
}
