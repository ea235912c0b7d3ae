#include "guardrail/misspec/misspec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "guardrail/core/errors.hpp"
#include "guardrail/mc/parallel.hpp"

namespace guardrail::misspec {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_shape(const Observations& obs, const GridExperiment& exp) {
  if (static_cast<std::size_t>(obs.rows()) != exp.n + 1 || obs.cols() < 1) {
    throw Error(ErrorCode::kArgument, "observations must have n+1 rows and K >= 1 columns");
  }
}

std::size_t argmax_profit(const GridExperiment& exp, const std::function<double(std::size_t)>& demand) {
  std::size_t best = 0;
  double best_profit = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j <= exp.n; ++j) {
    const double profit = (exp.price(j) - exp.c) * demand(j);
    if (profit > best_profit) {
      best_profit = profit;
      best = j;
    }
  }
  return best;
}

}  // namespace

DemandOracle::DemandOracle(DemandFamily family, double a, double b,
                           std::function<double(double)> f, std::string name)
    : family_(family), a_(a), b_(b), f_(std::move(f)), name_(std::move(name)) {}

DemandOracle DemandOracle::isoelastic(double a, double b) {
  if (!(a > 1.0) || !(b > 0.0)) throw Error(ErrorCode::kArgument, "isoelastic demand needs a > 1, b > 0");
  return {DemandFamily::kIsoelastic, a, b, [a, b](double p) { return b * std::pow(p, -a); },
          "isoelastic"};
}

DemandOracle DemandOracle::exponential(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::kArgument, "exponential demand needs a > 0, b > 0");
  return {DemandFamily::kExponential, a, b, [a, b](double p) { return b * std::exp(-a * p); },
          "exponential"};
}

DemandOracle DemandOracle::linear(double alpha, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorCode::kArgument, "linear demand needs beta > 0");
  return {DemandFamily::kLinear, beta, alpha,
          [alpha, beta](double p) { return alpha - beta * p; }, "linear"};
}

DemandOracle DemandOracle::custom(std::function<double(double)> f, std::string name) {
  if (!f) throw Error(ErrorCode::kArgument, "custom demand needs a callable");
  return {DemandFamily::kCustom, 0.0, 0.0, std::move(f), std::move(name)};
}

double DemandOracle::optimal_price(double c, double p_bar) const {
  switch (family_) {
    case DemandFamily::kIsoelastic: return a_ * c / (a_ - 1.0);
    case DemandFamily::kExponential: return 1.0 / a_ + c;
    case DemandFamily::kLinear: return 0.5 * (b_ / a_ + c);
    case DemandFamily::kCustom: break;
  }
  if (!(p_bar > c)) throw Error(ErrorCode::kArgument, "optimal price search needs p_bar > c");
  const auto r = boost::math::tools::brent_find_minima(
      [&](double p) { return -profit(p, c); }, c, p_bar, std::numeric_limits<double>::digits / 2);
  return r.first;
}

bool DemandOracle::nonincreasing_on(double lo, double hi, std::size_t points) const {
  if (points < 2) points = 2;
  double prev = f_(lo);
  for (std::size_t i = 1; i < points; ++i) {
    const double p = i + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(i) /
                                                    static_cast<double>(points - 1);
    const double v = f_(p);
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

void GridExperiment::validate() const {
  if (!(c >= 0.0) || !std::isfinite(c)) throw Error(ErrorCode::kArgument, "c must be >= 0");
  if (!(p_bar > c) || !std::isfinite(p_bar)) throw Error(ErrorCode::kArgument, "p_bar must exceed c");
  if (n < 2) throw Error(ErrorCode::kArgument, "grid needs n >= 2");
  if (K < 1) throw Error(ErrorCode::kArgument, "grid needs K >= 1");
  if (!(noise_sd >= 0.0)) throw Error(ErrorCode::kArgument, "noise_sd must be >= 0");
}

double GridExperiment::price(std::size_t j) const {
  if (j >= n) return j == n ? p_bar : kNaN;
  return c + static_cast<double>(j) * (p_bar - c) / static_cast<double>(n);
}

Observations run_grid_experiment(const DemandOracle& oracle, const GridExperiment& exp,
                                 const mc::RngStream& stream) {
  exp.validate();
  Observations obs(exp.n + 1, exp.K);
  for (std::size_t j = 0; j <= exp.n; ++j) {
    mc::RngStream rng = stream.derive(j);
    const double f = oracle(exp.price(j));
    for (std::size_t k = 0; k < exp.K; ++k) {
      obs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          f + exp.noise_sd * rng.normal();
    }
  }
  return obs;
}

LinearFit ols_linear_fit(const Observations& obs, const GridExperiment& exp) {
  exp.validate();
  check_shape(obs, exp);
  const Eigen::VectorXd y = obs.rowwise().mean();
  const double m = static_cast<double>(exp.n + 1);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t j = 0; j <= exp.n; ++j) {
    mx += exp.price(j);
    my += y(static_cast<Eigen::Index>(j));
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t j = 0; j <= exp.n; ++j) {
    const double dx = exp.price(j) - mx;
    sxx += dx * dx;
    sxy += dx * (y(static_cast<Eigen::Index>(j)) - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::kDegenerateDesign, "grid fit: prices do not vary");
  LinearFit fit;
  fit.beta_hat = -sxy / sxx;
  fit.alpha_hat = my + fit.beta_hat * mx;
  return fit;
}

double algorithmic_price_misspec(double alpha_hat, double beta_hat, double c) {
  if (!(beta_hat > 0.0)) {
    throw Error(ErrorCode::kNonpositiveSlope, "fitted demand slope is not negative");
  }
  return alpha_hat / (2.0 * beta_hat) + 0.5 * c;
}

double limit_algorithmic_price(const DemandOracle& oracle, const GridExperiment& exp) {
  exp.validate();
  const double m = static_cast<double>(exp.n + 1);
  double c1 = 0.0;
  double c2 = 0.0;
  for (std::size_t j = 0; j <= exp.n; ++j) {
    const double p = exp.price(j);
    const double f = oracle(p);
    c1 += f;
    c2 += p * f;
  }
  c1 /= m;
  c2 /= m;
  const double c = exp.c;
  const double pb = exp.p_bar;
  const double nn = static_cast<double>(exp.n);
  const double den = (pb + c) * c1 - 2.0 * c2;
  const double num = c * pb * c1 + (2.0 * nn + 1.0) / (6.0 * nn) * (pb - c) * (pb - c) * c1 -
                     0.5 * (pb + c) * c2;
  if (den == 0.0 || !std::isfinite(den)) {
    throw Error(ErrorCode::kDegenerateDesign, "limit price: vanishing denominator");
  }
  return num / den + 0.5 * c;
}

std::size_t human_best_index(const Observations& obs, const GridExperiment& exp) {
  exp.validate();
  check_shape(obs, exp);
  const Eigen::VectorXd means = obs.rowwise().mean();
  return argmax_profit(exp, [&](std::size_t j) { return means(static_cast<Eigen::Index>(j)); });
}

std::size_t grid_best_index(const DemandOracle& oracle, const GridExperiment& exp) {
  exp.validate();
  return argmax_profit(exp, [&](std::size_t j) { return oracle(exp.price(j)); });
}

PriceInterval human_interval(std::size_t j_star, const GridExperiment& exp) {
  if (j_star > exp.n) throw Error(ErrorCode::kArgument, "grid index out of range");
  return {exp.price(j_star == 0 ? 0 : j_star - 1), exp.price(std::min(j_star + 1, exp.n))};
}

double safeguarded_price_misspec(double p_a, std::size_t j_star, const GridExperiment& exp) {
  const PriceInterval iv = human_interval(j_star, exp);
  return std::min(std::max(p_a, iv.lo), iv.hi);
}

ImprovementCondition improvement_condition(const DemandOracle& oracle, const GridExperiment& exp) {
  exp.validate();
  const double nn = static_cast<double>(exp.n);
  const double den = 1.0 / 3.0 - 2.0 / nn;
  if (exp.n <= 6) {
    throw Error(ErrorCode::kConditionInapplicable, "improvement condition needs n > 6");
  }
  const double a = oracle.a();
  ImprovementCondition out;
  switch (oracle.family()) {
    case DemandFamily::kIsoelastic:
      out.threshold_p_bar = exp.c * (a / (a - 1.0) - 0.5 - 2.0 / nn) / den;
      break;
    case DemandFamily::kExponential:
      out.threshold_p_bar = (1.0 / a + (0.5 - 2.0 / nn) * exp.c) / den;
      break;
    default:
      throw Error(ErrorCode::kArgument,
                  "improvement condition exists for isoelastic and exponential demand only");
  }
  out.strict_improvement = exp.p_bar > out.threshold_p_bar;
  return out;
}

double estimate_concavity(const DemandOracle& oracle, const GridExperiment& exp,
                          ConcavityEstimator estimator) {
  exp.validate();
  const double c = exp.c;
  if (estimator == ConcavityEstimator::kCurvature) {
    constexpr std::size_t kPoints = 1000;
    const double g = (exp.p_bar - c) / static_cast<double>(kPoints - 1);
    double lambda = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < kPoints; ++i) {
      const double x = c + g * static_cast<double>(i);
      const double d2 = oracle.profit(x - g, c) - 2.0 * oracle.profit(x, c) +
                        oracle.profit(x + g, c);
      lambda = std::min(lambda, -d2 / (g * g));
    }
    return lambda;
  }
  const double p_star = oracle.optimal_price(c, exp.p_bar);
  const double h = exp.step();
  double lambda = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j <= exp.n; ++j) {
    const double pj = exp.price(j);
    const double rj = oracle.profit(pj, c);
    if (pj < p_star && j > 0) {
      lambda = std::min(lambda, 2.0 * (rj - oracle.profit(exp.price(j - 1), c)) / (h * h));
    } else if (pj >= p_star && j < exp.n) {
      lambda = std::min(lambda, 2.0 * (rj - oracle.profit(exp.price(j + 1), c)) / (h * h));
    }
  }
  return lambda;
}

double human_miss_bound(double lambda, const GridExperiment& exp) {
  exp.validate();
  const double nn = static_cast<double>(exp.n);
  const double span = exp.p_bar - exp.c;
  const double s2 = exp.noise_sd * exp.noise_sd;
  const double rate = static_cast<double>(exp.K) * lambda * lambda * std::pow(span, 4) /
                      (32.0 * s2 * exp.p_bar * exp.p_bar * std::pow(nn, 4));
  return 2.0 * (nn + 1.0) * std::exp(-rate);
}

MisspecOutcome run_replication(const DemandOracle& oracle, const GridExperiment& exp,
                               const mc::RngStream& stream) {
  const Observations obs = run_grid_experiment(oracle, exp, stream);
  const double p_star = oracle.optimal_price(exp.c, exp.p_bar);
  MisspecOutcome out;
  const LinearFit fit = ols_linear_fit(obs, exp);
  out.alpha_hat = fit.alpha_hat;
  out.beta_hat = fit.beta_hat;
  out.j_star = human_best_index(obs, exp);
  out.interval = human_interval(out.j_star, exp);
  out.contains_opt = out.interval.contains(p_star);
  out.profit_opt = oracle.profit(p_star, exp.c);
  if (!(fit.beta_hat > 0.0)) {
    out.degenerate = true;
    out.p_a = out.p_safeguarded = out.profit_a = out.profit_safeguarded = kNaN;
    return out;
  }
  out.p_a = algorithmic_price_misspec(fit.alpha_hat, fit.beta_hat, exp.c);
  out.p_safeguarded = safeguarded_price_misspec(out.p_a, out.j_star, exp);
  out.profit_a = oracle.profit(out.p_a, exp.c);
  out.profit_safeguarded = oracle.profit(out.p_safeguarded, exp.c);
  return out;
}

FiniteSampleReport finite_sample_check(const DemandOracle& oracle, const GridExperiment& exp,
                                       double delta, std::size_t replications,
                                       const mc::RngStream& stream, ConcavityEstimator estimator,
                                       std::optional<double> lambda, unsigned threads) {
  exp.validate();
  if (replications < 1) throw Error(ErrorCode::kArgument, "replications must be >= 1");
  if (!(delta > 0.0)) throw Error(ErrorCode::kArgument, "delta must be > 0");
  FiniteSampleReport rep;
  rep.replications = replications;
  rep.lambda = lambda ? *lambda : estimate_concavity(oracle, exp, estimator);
  if (!(rep.lambda > 0.0)) {
    throw Error(ErrorCode::kHypothesisViolated,
                "profit is not strongly concave on the grid (lambda = " +
                    std::to_string(rep.lambda) + ")");
  }
  rep.bound_ai = kNaN;
  rep.bound_human = human_miss_bound(rep.lambda, exp);

  const double target = limit_algorithmic_price(oracle, exp);
  std::vector<MisspecOutcome> outcomes(replications);
  mc::parallel_for(replications, threads, [&](std::size_t r) {
    outcomes[r] = run_replication(oracle, exp, stream.derive(r));
  });

  std::size_t deviations = 0;
  std::size_t misses = 0;
  for (const MisspecOutcome& o : outcomes) {
    if (!o.contains_opt) ++misses;
    if (o.degenerate) {
      ++rep.degenerate;
      ++deviations;
      continue;
    }
    if (std::abs(o.p_a - target) >= delta) ++deviations;
    if (o.contains_opt && o.profit_safeguarded < o.profit_a) ++rep.guardrail_losses;
  }
  const double total = static_cast<double>(replications);
  rep.freq_ai_deviation = static_cast<double>(deviations) / total;
  rep.freq_human_miss = static_cast<double>(misses) / total;
  return rep;
}

}  // namespace guardrail::misspec
