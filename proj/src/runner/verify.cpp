#include "guardrail/runner/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>

#include <Eigen/Dense>

#include "guardrail/competition/competition.hpp"
#include "guardrail/contamination/contamination.hpp"
#include "guardrail/core/benefit.hpp"
#include "guardrail/core/conditions.hpp"
#include "guardrail/core/errors.hpp"
#include "guardrail/core/tightness.hpp"
#include "guardrail/mc/parallel.hpp"
#include "guardrail/misspec/misspec.hpp"
#include "guardrail/runner/runner.hpp"

namespace guardrail::runner {
namespace {

using mc::RngStream;
using Results = std::vector<CriterionResult>;

CriterionResult check(int criterion, std::string id, std::string title, double measured,
                      std::string relation, double bound, std::string detail = {}) {
  CriterionResult r;
  r.criterion = criterion;
  r.id = std::move(id);
  r.title = std::move(title);
  r.measured = measured;
  r.relation = relation;
  r.bound = bound;
  if (relation == "<=") r.pass = measured <= bound;
  if (relation == ">=") r.pass = measured >= bound;
  if (relation == "==") r.pass = measured == bound;
  r.detail = std::move(detail);
  return r;
}

std::string num(double x) { return format_number(x); }

// ------------------------------------------------------------------ framework

struct Case {
  JointDecisionModel model;
  LossSpec loss;
  ConditionKind sufficient;
  ConditionKind necessary;
  bool densities;
};

LossSpec random_loss(RngStream& r, double xstar, bool allow_power) {
  switch (r.below(allow_power ? 4 : 3)) {
    case 0: return LossSpec::squared(xstar);
    case 1: return LossSpec::absolute(xstar);
    case 2: return LossSpec::asymmetric_linear(r.uniform(0.5, 2.0), r.uniform(0.5, 2.0), xstar);
    default: return LossSpec::power(r.uniform(1.2, 3.0), xstar);
  }
}

Density1D random_xa(RngStream& r, double m, double sd) {
  switch (r.below(3)) {
    case 0: return Density1D::normal(m, sd);
    case 1: return Density1D::uniform(m - 1.7 * sd, m + 1.7 * sd);
    default:
      return Density1D::mixture(Density1D::normal(m - 0.8 * sd, 0.6 * sd),
                                Density1D::normal(m + 0.8 * sd, 0.6 * sd), r.uniform(0.2, 0.8));
  }
}

BoundGenerator random_bound(RngStream& r, double centre, double scale) {
  const double at = centre + scale * r.uniform(-1.5, 1.5);
  switch (r.below(3)) {
    case 0: return BoundGenerator::constant(at);
    case 1: return BoundGenerator::distributed(Density1D::normal(at, scale * r.uniform(0.2, 1.0)));
    default: {
      const double w = scale * r.uniform(0.2, 1.0);
      return BoundGenerator::distributed(Density1D::uniform(at - w, at + w));
    }
  }
}

// Upper-only, correlated upper, lower-only and two-sided models, all with
// densities; `covariate` adds linear-minimizer models (Monte Carlo only).
Case random_case(RngStream& r, bool covariate) {
  const double m = r.uniform(-2.0, 2.0);
  const double sd = r.uniform(0.5, 2.0);
  const double xstar = m + sd * r.uniform(-1.0, 1.0);
  const std::size_t type = r.below(covariate ? 5 : 4);
  GuardrailSpec g;
  switch (type) {
    case 0:
      g.upper = random_bound(r, xstar, sd);
      return {independent_model(random_xa(r, m, sd), g), random_loss(r, xstar, true),
              ConditionKind::kSufficientUpper, ConditionKind::kNecessaryUpper, true};
    case 1: {
      const double mh = xstar + sd * r.uniform(-1.0, 1.5);
      return {bivariate_normal_upper(m, sd, mh, sd * r.uniform(0.3, 1.5), r.uniform(-0.8, 0.8)),
              LossSpec::squared(xstar), ConditionKind::kSufficientUpper,
              ConditionKind::kNecessaryUpper, true};
    }
    case 2:
      g.lower = random_bound(r, xstar, sd);
      return {independent_model(random_xa(r, m, sd), g), random_loss(r, xstar, true),
              ConditionKind::kSufficientLower, ConditionKind::kNecessaryLower, true};
    case 3: {
      const double lo = xstar - sd * r.uniform(0.0, 2.0);
      g.lower = BoundGenerator::constant(lo);
      const double at = lo + sd * r.uniform(0.5, 3.0);
      g.upper = r.below(2) == 0 ? BoundGenerator::constant(at)
                                : BoundGenerator::distributed(Density1D::uniform(at, at + sd));
      return {independent_model(random_xa(r, m, sd), g), random_loss(r, xstar, true),
              ConditionKind::kSufficientTwoSided, ConditionKind::kNecessaryTwoSided, true};
    }
    default: {
      const std::vector<double> beta{r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0)};
      const double noise = r.uniform(0.2, 1.5);
      const double shift = r.uniform(-1.0, 1.0);
      const double lo_gap = r.uniform(0.1, 1.5);
      const double hi_gap = r.uniform(0.1, 1.5);
      auto mean = [beta](const Covariate& w) { return beta[0] * w[0] + beta[1] * w[1]; };
      g.lower = BoundGenerator::of_covariate([=](const Covariate& w) { return mean(w) + shift - lo_gap; });
      g.upper = BoundGenerator::of_covariate([=](const Covariate& w) { return mean(w) + shift + hi_gap; });
      const double bias = r.uniform(-1.0, 1.0);
      return {compose_model([=](RngStream& s, const Covariate& w) { return mean(w) + bias + noise * s.normal(); },
                            g, [](RngStream& s) { return Covariate::of({s.uniform(), s.uniform()}); }),
              LossSpec::squared_linear(beta), ConditionKind::kSufficientCovariate,
              ConditionKind::kNecessaryCovariate, false};
    }
  }
}

EvalOptions quadrature_options() {
  EvalOptions o;
  o.method = mc::Method::kQuadrature;
  o.threads = 1;
  return o;
}

EvalOptions mc_options(std::size_t samples) {
  EvalOptions o;
  o.samples = samples;
  o.threads = 1;
  return o;
}

Results criterion_1(const RngStream& root, unsigned threads) {
  constexpr std::size_t kModels = 50;
  std::vector<double> gap(kModels, 0.0);
  std::vector<int> agree(kModels, 0);
  std::vector<std::string> errors(kModels);
  mc::parallel_for(kModels, threads, [&](std::size_t i) {
    RngStream r = root.derive(i);
    const Case c = random_case(r, false);
    try {
      const BenefitEstimate q = benefit(c.model, c.loss, root.derive(i), quadrature_options());
      const BenefitEstimate s = benefit(c.model, c.loss, root.derive(kModels + i), mc_options(100000));
      gap[i] = std::abs(q.direct.mean - q.identity.mean);
      agree[i] = std::abs(s.direct.mean - q.direct.mean) <= s.direct.half_width + q.direct.half_width;
    } catch (const Error& e) {
      gap[i] = std::numeric_limits<double>::infinity();
      errors[i] = e.what();
    }
  });
  std::string detail;
  for (std::size_t i = 0; i < kModels; ++i) {
    if (!errors[i].empty()) detail += "model " + std::to_string(i) + ": " + errors[i] + "; ";
  }
  const double worst = *std::max_element(gap.begin(), gap.end());
  const double agreeing = static_cast<double>(std::count(agree.begin(), agree.end(), 1));
  return {check(1, "1a", "quadrature direct vs identity, max gap over 50 models", worst, "<=", 1e-6, detail),
          check(1, "1b", "Monte Carlo (1e5) inside 99% CI of quadrature, models agreeing", agreeing, ">=", 48)};
}

Results criterion_2(const RngStream& root, unsigned threads) {
  constexpr std::size_t kModels = 200;
  std::vector<int> v_suff(kModels, 0), v_nec(kModels, 0), holds(kModels, 0), positive(kModels, 0);
  std::vector<std::string> errors(kModels);
  mc::parallel_for(kModels, threads, [&](std::size_t i) {
    RngStream r = root.derive(i);
    const Case c = random_case(r, true);
    const EvalOptions o = c.densities ? quadrature_options() : mc_options(100000);
    try {
      const BenefitEstimate b = benefit(c.model, c.loss, root.derive(kModels + i), o);
      const ConditionReport s = condition_report(c.model, c.loss, c.sufficient, root.derive(kModels + i), o);
      const ConditionReport n = condition_report(c.model, c.loss, c.necessary, root.derive(kModels + i), o);
      const double slack = b.direct.half_width + 1e-9;
      holds[i] = s.verdict == Verdict::kHolds;
      positive[i] = b.direct.mean > slack;
      v_suff[i] = holds[i] && b.direct.mean < -slack;
      v_nec[i] = positive[i] && n.verdict == Verdict::kFails;
    } catch (const Error& e) {
      errors[i] = e.what();
      v_suff[i] = 1;
    }
  });
  std::string detail;
  for (std::size_t i = 0; i < kModels; ++i) {
    if (!errors[i].empty()) detail += "model " + std::to_string(i) + ": " + errors[i] + "; ";
  }
  auto sum = [](const std::vector<int>& v) { return static_cast<double>(std::count(v.begin(), v.end(), 1)); };
  return {check(2, "2a", "sufficient holds => benefit >= -slack, violations over 200 models", sum(v_suff), "<=", 0,
                "sufficient held on " + num(sum(holds)) + " models; " + detail),
          check(2, "2b", "benefit > slack => necessary not failed, violations over 200 models", sum(v_nec), "<=", 0,
                "benefit significantly positive on " + num(sum(positive)) + " models")};
}

Results criterion_3(const RngStream& root, unsigned threads) {
  constexpr std::size_t kPairs = 20;
  std::vector<int> dip(kPairs, 0), off_peak(kPairs, 0);
  std::vector<double> peak_error(kPairs, 0.0);
  mc::parallel_for(kPairs, threads, [&](std::size_t i) {
    RngStream r = root.derive(i);
    const double m = r.uniform(-2.0, 2.0);
    const double sd = r.uniform(0.5, 2.0);
    const double xstar = m + sd * r.uniform(-1.0, 1.0);
    const Density1D xa = random_xa(r, m, sd);
    const LossSpec loss = random_loss(r, xstar, true);
    const double step = 0.15 * sd;
    const double start = xstar - 20.0 * step + step * r.uniform(-0.5, 0.5);
    std::vector<double> grid(41);
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = start + step * static_cast<double>(k);
    auto family = [&](double x_h) {
      GuardrailSpec g;
      g.upper = BoundGenerator::constant(x_h);
      return independent_model(xa, g);
    };
    const auto curve = benefit_curve(family, loss, grid, root.derive(kPairs + i), mc_options(100000));
    const CurveShape shape = analyze_curve(curve, 2.0);
    dip[i] = shape.interior_minimum;
    peak_error[i] = std::abs(grid[shape.peak_index] - xstar) / step;
    off_peak[i] = peak_error[i] > 1.0 + 1e-9;
  });
  auto sum = [](const std::vector<int>& v) { return static_cast<double>(std::count(v.begin(), v.end(), 1)); };
  return {check(3, "3a", "curves with an interior local minimum (20 curves, 41 points)", sum(dip), "<=", 0),
          check(3, "3b", "curves whose peak is more than one grid step from x*", sum(off_peak), "<=", 0,
                "largest peak offset " + num(*std::max_element(peak_error.begin(), peak_error.end())) +
                    " steps")};
}

Results criterion_4() {
  const TightnessResult t = tightness_counterexample(0.25, 1.0, 0.0, 0.5, quadrature_options());
  Results out;
  out.push_back(check(4, "4a", "counterexample lhs E[l(X_a)1(X_a>=x*)]", t.lhs, ">=", t.scaled_rhs,
                      "a * tail loss = " + num(t.scaled_rhs) + ", exact check " +
                          (t.lhs_ratio_check ? "holds" : "fails")));
  out.back().pass = out.back().pass && t.lhs_ratio_check && std::abs(t.lhs - 0.5) <= 1e-9 &&
                    std::abs(t.scaled_rhs - 0.375) <= 1e-9;
  out.push_back(check(4, "4b", "counterexample benefit (quadrature upper CI end)", t.benefit.upper(), "<=",
                      -0.25 + 1e-3, "benefit " + num(t.benefit.mean)));
  return out;
}

// ---------------------------------------------------------------- competition

Results criterion_5(const RngStream& root, unsigned threads) {
  struct Variant {
    const char* id;
    const char* name;
    double gamma, rho, target;
  };
  const Variant variants[] = {{"5a", "rho=0", 1.0, 0.0, 3.5},
                              {"5b", "rho=1 (collusive)", 1.0, 1.0, 5.0},
                              {"5c", "gamma=0", 0.0, 0.0, 2.5}};
  constexpr std::size_t kReps = 100;
  constexpr std::size_t kN = 1000000;
  Results out;
  for (std::size_t v = 0; v < std::size(variants); ++v) {
    competition::DuopolyParams params{10.0, 2.0, variants[v].gamma, 1.0};
    competition::PriceHistoryModel hist;
    hist.mu = 4.0;
    hist.sigma2 = 1.0;
    hist.rho = variants[v].rho;
    std::vector<double> price(kReps);
    std::vector<int> degenerate(kReps, 0);
    mc::parallel_for(kReps, threads, [&](std::size_t k) {
      const auto o = competition::run_replication(params, hist, kN, 4.0, root.derive(v).derive(k), 1);
      price[k] = o.p_a;
      degenerate[k] = o.degenerate;
    });
    double mean = 0.0;
    for (double p : price) mean += p / static_cast<double>(kReps);
    out.push_back(check(5, variants[v].id,
                        std::string("|mean p_a - ") + num(variants[v].target) + "| at n=1e6, " + variants[v].name,
                        std::abs(mean - variants[v].target), "<=", 0.01,
                        "mean p_a " + num(mean) + ", degenerate " +
                            std::to_string(std::count(degenerate.begin(), degenerate.end(), 1))));
  }
  return out;
}

Results criterion_6() {
  const competition::DuopolyParams params{10.0, 2.0, 1.0, 1.0};
  competition::PriceHistoryModel hist;
  hist.mu = 4.0;
  hist.sigma2 = 1.0;
  hist.rho = 0.0;
  const competition::MatchingThreshold th = competition::matching_threshold(params, hist);
  const double pa = competition::plim_price(params, hist);
  // Revenue at the matched price equals revenue at p_a on the roots of
  // -(beta - gamma) q^2 + (alpha - gamma p_a) q - p_a (alpha - beta p_a).
  const double A = -(params.beta - params.gamma);
  const double B = params.alpha - params.gamma * pa;
  const double C = -pa * (params.alpha - params.beta * pa);
  const double disc = std::sqrt(B * B - 4.0 * A * C);
  const double r1 = (-B + disc) / (2.0 * A);
  const double r2 = (-B - disc) / (2.0 * A);
  const double oracle = std::abs(r1 - pa) > std::abs(r2 - pa) ? r1 : r2;
  Results out;
  out.push_back(check(6, "6a", "threshold p_L from the closed form", th.p_low, "==", 3.0));
  out.push_back(check(6, "6b", "|p_L - revenue-equality root|", std::abs(th.p_low - oracle), "<=", 1e-8,
                      "root " + num(oracle)));
  std::size_t wrong = 0;
  std::string detail;
  for (double pp : {3.05, 3.2, 3.45, 2.9}) {
    const double gain = competition::revenue_compare(params, pa, pp).gain();
    const bool expected_positive = pp > th.p_low;
    wrong += expected_positive ? !(gain > 0.0) : !(gain < 0.0);
    detail += "p'=" + num(pp) + ": " + num(gain) + "; ";
  }
  out.push_back(check(6, "6c", "revenue gain sign errors at p' in {3.05, 3.2, 3.45, 2.9}",
                      static_cast<double>(wrong), "<=", 0, detail));
  return out;
}

// -------------------------------------------------------------------- misspec

misspec::DemandOracle decaying_demand() { return misspec::DemandOracle::exponential(1.0 / 3.0, 10.0); }

Results criteria_7_8(const RngStream& root, unsigned threads, bool want7, bool want8) {
  using namespace misspec;
  Results out;
  const GridExperiment e{1.0, 10.0, 10, 10000, 0.5};
  const FiniteSampleReport rep =
      finite_sample_check(decaying_demand(), e, 0.05, 1000, root, ConcavityEstimator::kGridSteps, std::nullopt,
                          threads);
  if (want7) {
    const double curvature = estimate_concavity(decaying_demand(), e, ConcavityEstimator::kCurvature);
    out.push_back(check(7, "7a", "P(p* outside human interval), K=1e4, 1000 replications", rep.freq_human_miss,
                        "<=", rep.bound_human,
                        "lambda " + num(rep.lambda) + " (grid steps; curvature estimate " + num(curvature) +
                            "), sigma 0.5"));
    out.push_back(check(7, "7b", "replications where containment held and the guardrail lost profit",
                        static_cast<double>(rep.guardrail_losses), "<=", 0,
                        "degenerate " + std::to_string(rep.degenerate)));
  }
  if (!want8) return out;

  const RngStream sweep = root.derive(1000000);
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    RngStream r = sweep.derive(t);
    const double c = r.uniform(0.2, 3.0);
    const GridExperiment g{c, c + r.uniform(1.0, 15.0), 3 + r.below(28), 1, 0.0};
    DemandOracle f = DemandOracle::linear(1.0, 1.0);
    switch (r.below(3)) {
      case 0: f = DemandOracle::exponential(r.uniform(0.1, 1.0), r.uniform(1.0, 20.0)); break;
      case 1: f = DemandOracle::isoelastic(r.uniform(1.2, 4.0), r.uniform(1.0, 20.0)); break;
      default: {
        const double k = r.uniform(0.5, 3.0);
        f = DemandOracle::custom([k](double p) { return 20.0 / (1.0 + k * p * p); }, "rational");
      }
    }
    Eigen::MatrixXd X(g.n + 1, 2);
    Eigen::VectorXd y(g.n + 1);
    for (std::size_t j = 0; j <= g.n; ++j) {
      const double p = g.c + (g.p_bar - g.c) * static_cast<double>(j) / static_cast<double>(g.n);
      X(static_cast<Eigen::Index>(j), 0) = 1.0;
      X(static_cast<Eigen::Index>(j), 1) = -p;
      y(static_cast<Eigen::Index>(j)) = f(p);
    }
    const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
    const double oracle = 0.5 * (coef(0) / coef(1) + g.c);
    worst = std::max(worst, std::abs(limit_algorithmic_price(f, g) - oracle) / std::max(1.0, std::abs(oracle)));
  }
  out.push_back(check(8, "8a", "limit price vs noiseless-grid QR pipeline, 50 oracles (relative)", worst, "<=",
                      1e-10));
  out.push_back(check(8, "8b", "P(|p_a - limit| >= 0.05), K=1e4, 1000 replications", rep.freq_ai_deviation, "<=",
                      0.01, "limit price " + num(limit_algorithmic_price(decaying_demand(), e))));
  return out;
}

Results criterion_9(const RngStream& root) {
  using namespace misspec;
  Results out;
  double worst = 0.0;
  for (double c : {0.0, 0.5, 1.0, 2.0, 3.7}) {
    const GridExperiment e{c, c + 1.0, 10, 1, 0.0};
    const double th = improvement_condition(DemandOracle::exponential(2.0, 1.0), e).threshold_p_bar;
    worst = std::max(worst, std::abs(th - (3.75 + 2.25 * c)));
  }
  out.push_back(check(9, "9a", "exponential a=2, n=10 threshold minus (3.75 + 2.25c)", worst, "<=", 1e-12));

  std::size_t one_way = 0;
  std::size_t mismatches = 0;
  std::size_t flagged = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    RngStream r = root.derive(t);
    const bool iso = t < 100;
    const double a = iso ? r.uniform(1.1, 5.0) : r.uniform(0.1, 3.0);
    const DemandOracle f = iso ? DemandOracle::isoelastic(a, 1.0) : DemandOracle::exponential(a, 1.0);
    const double c = r.uniform(0.1, 3.0);
    const GridExperiment e{c, c + r.uniform(0.1, 40.0), 7 + r.below(40), 1, 0.0};
    const bool flag = improvement_condition(f, e).strict_improvement;
    const bool outside = !human_interval(grid_best_index(f, e), e).contains(limit_algorithmic_price(f, e));
    flagged += flag;
    one_way += flag && !outside;
    mismatches += flag != outside;
  }
  out.push_back(check(9, "9b", "flag set but limit price inside noiseless interval (200 points)",
                      static_cast<double>(one_way), "<=", 0, "flag set on " + std::to_string(flagged) + " points"));
  out.push_back(check(9, "9c", "flag differs from 'limit price outside noiseless interval' (200 points)",
                      static_cast<double>(mismatches), "<=", 0,
                      "thresholds are sufficient, not necessary; outside-without-flag points count as mismatches"));
  return out;
}

// -------------------------------------------------------------- contamination

contamination::Vector vec(std::initializer_list<double> v) {
  contamination::Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Results criterion_10(const RngStream& root) {
  using namespace contamination;
  const BoundedLinearModel m{vec({2.0, 1.0}), Domain::box(vec({0.0, 1.0}), vec({1.0, 1.0})), 1.0};
  const ResponseContamination c = ResponseContamination::two_point(1.0, 0.3);
  const double eb = c.mean();
  const Matrix grid = m.domain.grid(100);
  const OlsFit fit = ols_fit(simulate_response_contaminated(m, c, 1000000, root.derive(0)));
  const double band = mc::chi_critical_value(0.99, m.domain.dim());
  double worst_ratio = 0.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const Vector w = grid.row(i).transpose();
    const double err = std::abs(fit.predict(w) - w.dot(m.beta) - eb);
    worst = std::max(worst, err);
    worst_ratio = std::max(worst_ratio, err / (band * fit.prediction_se(w)));
  }
  Results out;
  out.push_back(check(10, "10a", "sup over grid of |bias - E[B]| / simultaneous 99% band, n=1e6", worst_ratio, "<=",
                      1.0, "sup |bias - E[B]| = " + num(worst) + ", E[B] = " + num(eb)));

  const double max_mean = m.domain.max_linear(m.beta);
  const double min_mean = m.domain.min_linear(m.beta);
  RngStream r = root.derive(1);
  std::size_t exceed = 0;
  double largest = 0.0;
  for (int t = 0; t < 50; ++t) {
    const double up = max_mean - eb + r.uniform(0.0, 1.0);
    const double lo = t % 2 ? min_mean + eb - r.uniform(0.0, 1.0) : -kInf;
    if (!response_guardrail_condition(m, c, up, lo).holds) ++exceed;
    for (const LossRow& row : mse_compare_response(m, c, {lo, up}, grid)) {
      largest = std::max(largest, row.loss_safeguarded);
      exceed += row.loss_safeguarded > eb * eb;
    }
  }
  out.push_back(check(10, "10b", "grid points with safeguarded asymptotic loss > E[B]^2 (50 bound pairs)",
                      static_cast<double>(exceed), "<=", 0,
                      "largest loss " + num(largest) + ", E[B]^2 = " + num(eb * eb)));

  const double tight = max_mean - eb - 0.1;
  double worst_loss = 0.0;
  for (const LossRow& row : mse_compare_response(m, c, {-kInf, tight}, grid)) {
    worst_loss = std::max(worst_loss, row.loss_safeguarded);
  }
  out.push_back(check(10, "10c", "max safeguarded loss with upper = max w'beta - pb - 0.1", worst_loss, ">=",
                      eb * eb, "(pb)^2 = " + num(eb * eb)));
  out.back().pass = worst_loss > eb * eb;
  return out;
}

mc::VectorSampler gaussian(double sd) {
  return [sd](RngStream& r, std::span<double> out) {
    for (double& x : out) x = sd * r.normal();
  };
}

Results criterion_11(const RngStream& root, unsigned threads) {
  using namespace contamination;
  Results out;
  {
    const double su = 0.8;
    const double beta = 2.0;
    CovariateContamination c;
    c.dim = 1;
    c.z_sampler = gaussian(1.0);
    c.u_sampler = gaussian(su);
    c.sigma1 = Matrix::Constant(1, 1, 1.0);
    c.sigma2 = Matrix::Constant(1, 1, su * su);
    c.z_domain = Domain::box(vec({-4.0}), vec({4.0}));
    const OlsFit f = ols_fit(simulate_covariate_contaminated(c, vec({beta}), 0.5, 1000000, root.derive(0)));
    const double target = beta / (1.0 + su * su);
    const double hw = mc::normal_critical_value(0.99) * std::sqrt(f.covariance(0, 0));
    out.push_back(check(11, "11a", "|beta_hat - beta/(1+sigma_U^2)| at n=1e6", std::abs(f.beta_hat(0) - target),
                        "<=", hw, "beta_hat " + num(f.beta_hat(0)) + ", target " + num(target)));
  }

  constexpr std::size_t kSetups = 50;
  std::vector<int> separated(kSetups, 0), above(kSetups, 0), valid(kSetups, 0);
  std::vector<std::string> errors(kSetups);
  mc::parallel_for(kSetups, threads, [&](std::size_t t) {
    RngStream r = root.derive(1).derive(t);
    const double angle = r.uniform(0.0, 6.283185307179586);
    const double norm = r.uniform(1.0, 4.0);
    const Vector beta = vec({norm * std::cos(angle), norm * std::sin(angle)});
    const Vector perp = vec({-std::sin(angle), std::cos(angle)});
    const Vector along = beta / beta.squaredNorm();
    const double magnitude = r.uniform(0.3, 1.5);
    const double b = 0.99 * magnitude;  // U0'beta = +-magnitude up to rounding
    const double q = r.uniform(0.1, 0.45);
    const double p = q * r.uniform(0.8, 1.0);
    const double half = r.uniform(0.5, 2.0);
    const double train_sd = r.uniform(0.2, 1.5);
    CovariateContamination c;
    c.dim = 2;
    c.z_sampler = [half](RngStream& s, std::span<double> z) {
      z[0] = s.uniform(-half, half);
      z[1] = s.uniform(-half, half);
    };
    c.u_sampler = [perp, train_sd](RngStream& s, std::span<double> u) {
      const double e = train_sd * s.normal();
      u[0] = e * perp(0);
      u[1] = e * perp(1);
    };
    c.u_deploy_sampler = [along, magnitude, q](RngStream& s, std::span<double> u) {
      const double x = s.uniform();
      const double k = x < q ? magnitude : (x < 2.0 * q ? -magnitude : 0.0);
      u[0] = k * along(0);
      u[1] = k * along(1);
    };
    c.sigma1 = Matrix::Identity(2, 2) * (half * half / 3.0);
    c.sigma2 = train_sd * train_sd * perp * perp.transpose();
    c.z_domain = Domain::box(vec({-half, -half}), vec({half, half}));
    const double slack = std::sqrt(p / (1.0 - p)) * b;
    const double hi = c.z_domain.max_linear(beta) - slack;
    const double lo = c.z_domain.min_linear(beta) + slack;
    const Bounds bounds{lo - r.uniform(0.0, 0.5), hi + r.uniform(0.0, 0.5)};
    try {
      const CovariateCondition cond = covariate_guardrail_condition(c, beta, bounds, b, p, root.derive(2).derive(t));
      if (!cond.holds) return;
      valid[t] = 1;
      const Vector beta_hat = covariate_plim(c, beta).beta;
      mc::McOptions mo;
      mo.threads = 1;
      const ExpectedLossComparison cmp =
          mse_compare_covariate(c, beta, beta_hat, bounds, 200000, root.derive(3).derive(t), mo);
      separated[t] = cmp.difference.lower() > 0.0;
      above[t] = cmp.difference.mean > cmp.difference.half_width;
    } catch (const Error& e) {
      errors[t] = e.what();
    }
  });
  auto sum = [](const std::vector<int>& v) { return static_cast<double>(std::count(v.begin(), v.end(), 1)); };
  std::string detail = "certified setups " + num(sum(valid)) + "/50, loss increase beyond slack " + num(sum(above));
  for (std::size_t t = 0; t < kSetups; ++t) {
    if (!errors[t].empty()) detail += "; setup " + std::to_string(t) + ": " + errors[t];
  }
  out.push_back(check(11, "11b", "CI-separated expected-loss increases under the certified bound condition",
                      sum(separated), "<=", 0, detail));
  out.back().pass = out.back().pass && sum(valid) == static_cast<double>(kSetups);
  return out;
}

// ------------------------------------------------------------- reproducibility

const char* const kReproConfigs[] = {
    "scenario = \"framework\"\nseed = 11\nreplications = 3\n[parameters]\nxa_mean = 0.2\nupper = 0.5\n"
    "samples = 20000\n[sweep]\nxa_sd = [0.5, 1.5]\n",
    "scenario = \"competition\"\nseed = 12\nreplications = 4\n[parameters]\nalpha = 10\nbeta = 2\ngamma = 1\n"
    "mu = 4\nsigma2 = 1\nrho = 0\n[sweep]\nn = [1000, 20000]\n",
    "scenario = \"misspec\"\nseed = 13\nreplications = 5\n[parameters]\ndemand = \"exponential\"\n"
    "a = 0.3333333333333333\nb = 10\nc = 1\np_bar = 10\nn = 10\nK = 3\nnoise_sd = 0.5\n",
    "scenario = \"contamination-response\"\nseed = 14\nreplications = 3\n[parameters]\nbeta = [2, 1]\n"
    "domain_lo = [0, 1]\ndomain_hi = [1, 1]\nb = 1\np = 0.3\nn = 5000\nupper = 2.8\n",
    "scenario = \"contamination-covariate\"\nseed = 15\nreplications = 3\n[parameters]\nz_half = [1]\n"
    "u_sd = [0.5]\nbeta = [2]\nn = 5000\nb = 0.5\np = 0.2\nlower = -1.5\nupper = 1.5\nloss_samples = 5000\n",
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Results criterion_12(std::uint64_t seed) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / ("guardrail-verify-" + std::to_string(seed) + "-" +
                                                     std::to_string(reinterpret_cast<std::uintptr_t>(&seed)));
  std::size_t identical = 0;
  std::string detail;
  for (const char* text : kReproConfigs) {
    const ScenarioConfig cfg = parse_config(text);
    std::vector<std::string> files;
    for (unsigned threads : {1u, 2u, 8u}) {
      RunOptions o;
      o.threads = threads;
      o.out_dir = (base / (std::string(to_string(cfg.scenario)) + "-" + std::to_string(threads))).string();
      o.print_summary = false;
      files.push_back(slurp(run(cfg, o).csv_path));
    }
    const bool same = !files[0].empty() && files[0] == files[1] && files[0] == files[2];
    identical += same;
    if (!same) detail += std::string(to_string(cfg.scenario)) + " differs; ";
  }
  std::error_code ec;
  fs::remove_all(base, ec);
  return {check(12, "12", "scenarios whose CSV is byte-identical at 1, 2 and 8 threads",
                static_cast<double>(identical), ">=", static_cast<double>(std::size(kReproConfigs)), detail)};
}

}  // namespace

std::vector<CriterionResult> verify_criterion(int criterion, std::uint64_t seed, unsigned threads) {
  if (threads == 0) threads = mc::default_threads();
  const RngStream root = RngStream(seed).derive(static_cast<std::uint64_t>(criterion));
  switch (criterion) {
    case 1: return criterion_1(root, threads);
    case 2: return criterion_2(root, threads);
    case 3: return criterion_3(root, threads);
    case 4: return criterion_4();
    case 5: return criterion_5(root, threads);
    case 6: return criterion_6();
    case 7: return criteria_7_8(RngStream(seed).derive(7), threads, true, false);
    case 8: return criteria_7_8(RngStream(seed).derive(7), threads, false, true);
    case 9: return criterion_9(root);
    case 10: return criterion_10(root);
    case 11: return criterion_11(root, threads);
    case 12: return criterion_12(seed);
    default: throw Error(ErrorCode::kArgument, "criterion must be in 1..12");
  }
}

std::vector<CriterionResult> verify(std::string_view suite, std::uint64_t seed, unsigned threads) {
  std::vector<int> ids;
  if (suite == "all") {
    ids = {1, 2, 3, 4, 5, 6, 0, 9, 10, 11, 12};
  } else if (suite == "framework") {
    ids = {1, 2, 3, 4};
  } else if (suite == "competition") {
    ids = {5, 6};
  } else if (suite == "misspec") {
    ids = {0, 9};
  } else if (suite == "contamination") {
    ids = {10, 11};
  } else {
    throw Error(ErrorCode::kArgument, "unknown suite '" + std::string(suite) +
                                          "' (expected all, framework, competition, misspec, contamination)");
  }
  if (threads == 0) threads = mc::default_threads();
  std::vector<CriterionResult> out;
  for (int id : ids) {
    // 7 and 8 share one Monte Carlo run.
    auto part = id == 0 ? criteria_7_8(RngStream(seed).derive(7), threads, true, true)
                        : verify_criterion(id, seed, threads);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.pass ? "PASS " : "FAIL ") << "criterion " << r.id << ": " << r.title << ": measured "
    << format_number(r.measured) << ", required " << r.relation << " " << format_number(r.bound);
  if (!r.detail.empty()) s << " [" << r.detail << "]";
  return s.str();
}

}  // namespace guardrail::runner
