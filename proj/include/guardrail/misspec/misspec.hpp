#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "guardrail/mc/rng.hpp"

// Grid price experiments on a nonlinear demand, a linear OLS pricer that is
// misspecified for it, and the empirical-best-interval guardrail.

namespace guardrail::misspec {

enum class DemandFamily { kIsoelastic, kExponential, kLinear, kCustom };

/// Demand curve f(p). Profit at unit cost c is (p - c) f(p).
class DemandOracle {
 public:
  /// f(p) = b p^(-a), a > 1, b > 0.
  static DemandOracle isoelastic(double a, double b);
  /// f(p) = b exp(-a p), a > 0, b > 0.
  static DemandOracle exponential(double a, double b);
  /// f(p) = alpha - beta p, beta > 0.
  static DemandOracle linear(double alpha, double beta);
  /// Arbitrary curve; the optimal price is found numerically on [c, p_bar].
  static DemandOracle custom(std::function<double(double)> f, std::string name = "custom");

  double operator()(double p) const { return f_(p); }
  double profit(double p, double c) const { return (p - c) * f_(p); }

  DemandFamily family() const { return family_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const std::string& name() const { return name_; }

  /// Closed-form maximizer of the profit over p > c (isoelastic, exponential,
  /// linear), or a Brent search on [c, p_bar] for custom curves.
  double optimal_price(double c, double p_bar) const;

  /// Sampled check that f is nonincreasing on [lo, hi].
  bool nonincreasing_on(double lo, double hi, std::size_t points = 1000) const;

 private:
  DemandOracle(DemandFamily family, double a, double b, std::function<double(double)> f,
               std::string name);

  DemandFamily family_;
  double a_ = 0.0;
  double b_ = 0.0;
  std::function<double(double)> f_;
  std::string name_;
};

/// Prices p_j = c + j (p_bar - c) / n for j = 0..n, K observations each.
struct GridExperiment {
  double c = 1.0;
  double p_bar = 10.0;
  std::size_t n = 10;
  std::size_t K = 3;
  double noise_sd = 0.5;

  void validate() const;
  double step() const { return (p_bar - c) / static_cast<double>(n); }
  /// p_n is exactly p_bar.
  double price(std::size_t j) const;
};

/// (n+1) x K demand observations; row j belongs to p_j.
using Observations = Eigen::MatrixXd;

/// Entry (j, k) = f(p_j) + N(0, noise_sd^2). Row j draws from stream.derive(j).
Observations run_grid_experiment(const DemandOracle& oracle, const GridExperiment& exp,
                                 const mc::RngStream& stream);

struct LinearFit {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
};

/// OLS of all observations on (1, -p). With K rows per price this equals the
/// fit through the row means.
LinearFit ols_linear_fit(const Observations& obs, const GridExperiment& exp);

/// alpha_hat / (2 beta_hat) + c / 2. beta_hat <= 0 -> kNonpositiveSlope.
double algorithmic_price_misspec(double alpha_hat, double beta_hat, double c);

/// Limit of the algorithmic price as K grows, from grid averages of f and p f.
double limit_algorithmic_price(const DemandOracle& oracle, const GridExperiment& exp);

/// argmax_j (p_j - c) * rowmean_j; ties go to the smallest index.
std::size_t human_best_index(const Observations& obs, const GridExperiment& exp);

/// Noiseless version of human_best_index.
std::size_t grid_best_index(const DemandOracle& oracle, const GridExperiment& exp);

struct PriceInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double p) const { return lo <= p && p <= hi; }
};

/// [p_{j-1}, p_{j+1}] with indices clamped to [0, n].
PriceInterval human_interval(std::size_t j_star, const GridExperiment& exp);

double safeguarded_price_misspec(double p_a, std::size_t j_star, const GridExperiment& exp);

struct ImprovementCondition {
  double threshold_p_bar = 0.0;
  bool strict_improvement = false;
};

/// Threshold on p_bar above which the limit price leaves the human interval.
/// Isoelastic and exponential families only; n <= 6 -> kConditionInapplicable.
ImprovementCondition improvement_condition(const DemandOracle& oracle, const GridExperiment& exp);

enum class ConcavityEstimator {
  /// Minimum of the negative second difference of the profit on a
  /// 1000-point grid over [c, p_bar].
  kCurvature,
  /// Largest lambda with r(p_{j-1}) <= r(p_j) - lambda h^2 / 2 left of p* and
  /// r(p_{j+1}) <= r(p_j) - lambda h^2 / 2 right of it, on the experiment grid.
  kGridSteps,
};

double estimate_concavity(const DemandOracle& oracle, const GridExperiment& exp,
                          ConcavityEstimator estimator);

/// 2 (n+1) exp(-K lambda^2 (p_bar - c)^4 / (32 sigma^2 p_bar^2 n^4)).
double human_miss_bound(double lambda, const GridExperiment& exp);

struct MisspecOutcome {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double p_a = 0.0;
  std::size_t j_star = 0;
  PriceInterval interval;
  double p_safeguarded = 0.0;
  double profit_a = 0.0;
  double profit_safeguarded = 0.0;
  double profit_opt = 0.0;
  bool contains_opt = false;  // p* inside the human interval
  bool degenerate = false;    // beta_hat <= 0; prices and profits are NaN
};

MisspecOutcome run_replication(const DemandOracle& oracle, const GridExperiment& exp,
                               const mc::RngStream& stream);

struct FiniteSampleReport {
  std::size_t replications = 0;
  double freq_ai_deviation = 0.0;
  double freq_human_miss = 0.0;
  /// Qualitative only; always NaN.
  double bound_ai = 0.0;
  double bound_human = 0.0;
  double lambda = 0.0;
  std::size_t degenerate = 0;
  /// Replications with p* in the interval but profit(p_hat) < profit(p_a).
  std::size_t guardrail_losses = 0;
};

/// Replication r uses stream.derive(r). `lambda` overrides the estimator;
/// a nonpositive lambda -> kHypothesisViolated.
FiniteSampleReport finite_sample_check(const DemandOracle& oracle, const GridExperiment& exp,
                                       double delta, std::size_t replications,
                                       const mc::RngStream& stream,
                                       ConcavityEstimator estimator = ConcavityEstimator::kCurvature,
                                       std::optional<double> lambda = std::nullopt,
                                       unsigned threads = 0);

}  // namespace guardrail::misspec
