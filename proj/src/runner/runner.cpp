#include "guardrail/runner/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "guardrail/competition/competition.hpp"
#include "guardrail/contamination/contamination.hpp"
#include "guardrail/core/conditions.hpp"
#include "guardrail/mc/estimate.hpp"
#include "guardrail/mc/parallel.hpp"
#include "guardrail/misspec/misspec.hpp"

namespace guardrail::runner {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Typed access to one parameter table. Problems are collected, not thrown.
class Params {
 public:
  Params(const Table& table, std::vector<std::string>& errors)
      : table_(table), errors_(errors) {}

  const Value* find(const std::string& name) {
    used_.insert(name);
    for (const auto& [k, v] : table_) {
      if (k == name) return &v;
    }
    return nullptr;
  }

  double number(const std::string& name, std::optional<double> fallback = std::nullopt) {
    const Value* v = find(name);
    if (!v) {
      if (!fallback) error(name, "required");
      return fallback.value_or(kNaN);
    }
    if (v->kind != Value::Kind::kNumber) {
      error(name, "expected a number, got " + std::string(v->kind_name()));
      return kNaN;
    }
    return v->number;
  }

  std::optional<double> maybe_number(const std::string& name) {
    if (!find(name)) return std::nullopt;
    return number(name);
  }

  std::size_t count(const std::string& name, std::optional<std::size_t> fallback,
                    std::size_t minimum) {
    const Value* v = find(name);
    if (!v) {
      if (!fallback) error(name, "required");
      return fallback.value_or(minimum);
    }
    if (v->kind != Value::Kind::kNumber || !(v->number >= 0) || v->number != std::floor(v->number) ||
        v->number > 1e15) {
      error(name, "expected a nonnegative integer");
      return minimum;
    }
    const auto c = static_cast<std::size_t>(v->number);
    if (c < minimum) error(name, "must be >= " + std::to_string(minimum));
    return c;
  }

  std::string text(const std::string& name, const std::string& fallback,
                   const std::vector<std::string>& allowed) {
    const Value* v = find(name);
    if (!v) return fallback;
    if (v->kind != Value::Kind::kString ||
        std::find(allowed.begin(), allowed.end(), v->text) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      error(name, "expected one of " + list);
      return fallback;
    }
    return v->text;
  }

  std::vector<double> array(const std::string& name, bool required = true) {
    const Value* v = find(name);
    if (!v) {
      if (required) error(name, "required");
      return {};
    }
    if (v->kind == Value::Kind::kNumber) return {v->number};
    if (v->kind != Value::Kind::kArray) {
      error(name, "expected a numeric array");
      return {};
    }
    return v->array;
  }

  void error(const std::string& name, const std::string& what) {
    errors_.push_back("parameters." + name + ": " + what);
  }

  void reject_unknown() {
    for (const auto& [k, v] : table_) {
      if (!used_.count(k)) errors_.push_back("parameters." + k + ": unknown parameter");
    }
  }

 private:
  const Table& table_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

struct Row {
  std::vector<std::string> cells;
  double metric = kNaN;
  bool degenerate = false;
  bool hypothesis_violated = false;
  std::vector<std::string> verdicts;
};

std::string yes_no(bool b) { return b ? "true" : "false"; }
std::string fmt(double x) { return format_number(x); }
std::string fmt(std::size_t x) { return std::to_string(x); }

// ---------------------------------------------------------------- framework

struct FrameworkSetup {
  std::string loss = "squared";
  double x_star = 0.0;
  double xa_mean = 0.0;
  double xa_sd = 1.0;
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> upper_sd;
  std::size_t samples = 100000;
  bool quadrature = false;
};

FrameworkSetup framework_setup(Params& p) {
  FrameworkSetup s;
  s.loss = p.text("loss", "squared", {"squared", "absolute"});
  s.x_star = p.number("x_star", 0.0);
  s.xa_mean = p.number("xa_mean", 0.0);
  s.xa_sd = p.number("xa_sd", 1.0);
  s.lower = p.maybe_number("lower");
  s.upper = p.maybe_number("upper");
  s.upper_sd = p.maybe_number("upper_sd");
  s.samples = p.count("samples", 100000, 2);
  s.quadrature = p.text("method", "monte-carlo", {"monte-carlo", "quadrature"}) == "quadrature";
  if (!(s.xa_sd > 0.0)) p.error("xa_sd", "must be > 0");
  if (!s.lower && !s.upper) p.error("upper", "at least one of lower and upper is required");
  if (s.lower && s.upper && !(*s.lower <= *s.upper)) p.error("lower", "must not exceed upper");
  if (s.upper_sd && !s.upper) p.error("upper_sd", "needs upper");
  if (s.upper_sd && !(*s.upper_sd > 0.0)) p.error("upper_sd", "must be > 0");
  return s;
}

Row framework_row(const FrameworkSetup& s, const mc::RngStream& stream) {
  GuardrailSpec g;
  if (s.lower) g.lower = BoundGenerator::constant(*s.lower);
  if (s.upper) {
    g.upper = s.upper_sd ? BoundGenerator::distributed(Density1D::normal(*s.upper, *s.upper_sd))
                         : BoundGenerator::constant(*s.upper);
  }
  const JointDecisionModel model = independent_model(Density1D::normal(s.xa_mean, s.xa_sd), g);
  const LossSpec loss = s.loss == "squared" ? LossSpec::squared(s.x_star) : LossSpec::absolute(s.x_star);
  EvalOptions opt;
  opt.samples = s.samples;
  opt.threads = 1;
  if (s.quadrature) opt.method = mc::Method::kQuadrature;

  ConditionKind suff = ConditionKind::kSufficientTwoSided;
  ConditionKind nec = ConditionKind::kNecessaryTwoSided;
  if (!s.lower) {
    suff = ConditionKind::kSufficientUpper;
    nec = ConditionKind::kNecessaryUpper;
  } else if (!s.upper) {
    suff = ConditionKind::kSufficientLower;
    nec = ConditionKind::kNecessaryLower;
  }
  const BenefitEstimate b = benefit(model, loss, stream.derive(0), opt);
  const ConditionReport rs = condition_report(model, loss, suff, stream.derive(1), opt);
  const ConditionReport rn = condition_report(model, loss, nec, stream.derive(2), opt);
  Row row;
  row.cells = {fmt(s.lower.value_or(-kInf)), fmt(s.upper.value_or(kInf)), fmt(b.direct.mean),
               fmt(b.direct.half_width), fmt(b.identity.mean), fmt(rs.lhs.mean), fmt(rs.rhs.mean),
               std::string(to_string(rs.verdict)), fmt(rn.lhs.mean), fmt(rn.rhs.mean),
               std::string(to_string(rn.verdict))};
  row.metric = b.direct.mean;
  row.verdicts = {"sufficient-" + std::string(to_string(rs.verdict)),
                  "necessary-" + std::string(to_string(rn.verdict))};
  return row;
}

// -------------------------------------------------------------- competition

struct CompetitionSetup {
  competition::DuopolyParams params;
  competition::PriceHistoryModel hist;
  std::size_t n = 1000;
  std::optional<double> p_prime;
};

CompetitionSetup competition_setup(Params& p) {
  CompetitionSetup s;
  s.params.alpha = p.number("alpha");
  s.params.beta = p.number("beta");
  s.params.gamma = p.number("gamma");
  s.params.noise_sd = p.number("noise_sd", 1.0);
  s.hist.mu = p.number("mu");
  s.hist.sigma2 = p.number("sigma2", 1.0);
  s.hist.rho = p.number("rho", 0.0);
  s.hist.family = p.text("family", "gaussian", {"gaussian", "lognormal"}) == "lognormal"
                      ? competition::PriceFamily::kLognormal
                      : competition::PriceFamily::kGaussian;
  s.n = p.count("n", std::nullopt, 3);
  s.p_prime = p.maybe_number("p_prime");
  if (s.p_prime && !(*s.p_prime > 0.0)) p.error("p_prime", "must be > 0");
  return s;
}

void competition_check(const CompetitionSetup& s) {
  s.params.validate();
  s.hist.validate();
}

Row competition_row(const CompetitionSetup& s, const mc::RngStream& stream) {
  const competition::CompetitionOutcome o =
      competition::run_replication(s.params, s.hist, s.n, s.p_prime, stream, 1);
  Row row;
  row.cells = {fmt(o.n), fmt(o.alpha_hat), fmt(o.beta_hat), fmt(o.p_a), fmt(o.p_prime),
               fmt(o.p_matched), fmt(o.revenue_a), fmt(o.revenue_matched),
               fmt(competition::plim_price(s.params, s.hist)), yes_no(o.degenerate)};
  row.metric = o.p_a;
  row.degenerate = o.degenerate;
  if (!o.degenerate) {
    row.verdicts = {o.revenue_matched > o.revenue_a    ? "matching-gains"
                    : o.revenue_matched < o.revenue_a ? "matching-loses"
                                                      : "matching-neutral"};
  }
  return row;
}

// ------------------------------------------------------------------ misspec

struct MisspecSetup {
  std::string demand = "exponential";
  double a = 1.0 / 3.0;
  double b = 10.0;
  misspec::GridExperiment exp;

  misspec::DemandOracle oracle() const {
    if (demand == "isoelastic") return misspec::DemandOracle::isoelastic(a, b);
    if (demand == "linear") return misspec::DemandOracle::linear(b, a);
    return misspec::DemandOracle::exponential(a, b);
  }
};

MisspecSetup misspec_setup(Params& p) {
  MisspecSetup s;
  s.demand = p.text("demand", "exponential", {"exponential", "isoelastic", "linear"});
  s.a = p.number("a");
  s.b = p.number("b");
  s.exp.c = p.number("c");
  s.exp.p_bar = p.number("p_bar");
  s.exp.n = p.count("n", std::nullopt, 2);
  s.exp.K = p.count("K", std::nullopt, 1);
  s.exp.noise_sd = p.number("noise_sd", 0.5);
  return s;
}

void misspec_check(const MisspecSetup& s) {
  s.exp.validate();
  (void)s.oracle();
}

Row misspec_row(const MisspecSetup& s, const mc::RngStream& stream) {
  const misspec::DemandOracle f = s.oracle();
  const misspec::MisspecOutcome o = misspec::run_replication(f, s.exp, stream);
  const double limit = misspec::limit_algorithmic_price(f, s.exp);
  std::string improvement = "n/a";
  if (s.demand != "linear") {
    try {
      improvement = yes_no(misspec::improvement_condition(f, s.exp).strict_improvement);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kConditionInapplicable) throw;
      improvement = "inapplicable";
    }
  }
  Row row;
  row.cells = {fmt(s.exp.n), fmt(s.exp.K), fmt(o.alpha_hat), fmt(o.beta_hat), fmt(o.p_a), fmt(limit),
               fmt(o.j_star), fmt(o.interval.lo), fmt(o.interval.hi), fmt(o.p_safeguarded),
               fmt(o.profit_a), fmt(o.profit_safeguarded), fmt(o.profit_opt),
               fmt(std::abs(o.p_a - limit)), yes_no(!o.contains_opt), improvement,
               yes_no(o.degenerate)};
  row.metric = o.p_a;
  row.degenerate = o.degenerate;
  row.verdicts = {o.contains_opt ? "optimum-contained" : "optimum-missed"};
  return row;
}

// ---------------------------------------------------- response contamination

struct ResponseSetup {
  std::vector<double> beta, lo, hi;
  double noise_sd = 1.0;
  double b = 1.0;
  double p = 0.0;
  std::size_t n = 1000;
  double upper = kInf;
  std::optional<double> lower;
  std::size_t grid_per_axis = 10;

  contamination::BoundedLinearModel model() const {
    using contamination::Vector;
    return {Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size())),
            contamination::Domain::box(Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                                       Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()))),
            noise_sd};
  }
};

ResponseSetup response_setup(Params& p) {
  ResponseSetup s;
  s.beta = p.array("beta");
  s.lo = p.array("domain_lo");
  s.hi = p.array("domain_hi");
  s.noise_sd = p.number("noise_sd", 1.0);
  s.b = p.number("b");
  s.p = p.number("p");
  s.n = p.count("n", std::nullopt, 2);
  s.upper = p.number("upper", kInf);
  s.lower = p.maybe_number("lower");
  s.grid_per_axis = p.count("grid_per_axis", 10, 2);
  if (s.beta.empty()) p.error("beta", "must not be empty");
  if (s.lo.size() != s.beta.size() || s.hi.size() != s.beta.size()) {
    p.error("domain_lo", "domain_lo, domain_hi and beta must have the same length");
  }
  if (!(s.noise_sd >= 0.0)) p.error("noise_sd", "must be >= 0");
  if (s.n < s.beta.size() + 1) p.error("n", "must be >= dim(beta) + 1");
  if (s.lower && !(*s.lower <= s.upper)) p.error("lower", "must not exceed upper");
  return s;
}

void response_check(const ResponseSetup& s) {
  (void)contamination::ResponseContamination::two_point(s.b, s.p);
  (void)s.model();
}

Row response_row(const ResponseSetup& s, const mc::RngStream& stream) {
  using namespace contamination;
  const BoundedLinearModel m = s.model();
  const ResponseContamination c = ResponseContamination::two_point(s.b, s.p);
  const OlsFit fit = ols_fit(simulate_response_contaminated(m, c, s.n, stream.derive(0)));
  const Matrix grid = m.domain.grid(s.grid_per_axis);
  const double band = mc::chi_critical_value(0.99, m.domain.dim());
  double bias_sum = 0.0;
  double worst = 0.0;
  bool in_band = true;
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const Vector w = grid.row(i).transpose();
    const double bias = fit.predict(w) - w.dot(m.beta);
    bias_sum += bias;
    worst = std::max(worst, std::abs(bias - c.mean()));
    in_band = in_band && std::abs(bias - c.mean()) <= band * fit.prediction_se(w);
  }
  const ResponseCondition cond = response_guardrail_condition(m, c, s.upper, s.lower);
  const Bounds bounds{s.lower.value_or(-kInf), s.upper};
  double la = 0.0;
  double ls = 0.0;
  std::size_t worse = 0;
  for (const LossRow& r : mse_compare_response(m, c, bounds, grid, &fit)) {
    la = std::max(la, r.loss_algorithmic);
    ls = std::max(ls, r.loss_safeguarded);
    worse += r.loss_safeguarded > r.loss_algorithmic;
  }
  Row row;
  const double mean_bias = bias_sum / static_cast<double>(grid.rows());
  row.cells = {fmt(s.n), fmt(c.mean()), fmt(mean_bias), fmt(worst), yes_no(in_band),
               cond.holds ? "holds" : "fails", fmt(cond.upper_threshold), fmt(cond.lower_threshold),
               fmt(la), fmt(ls), fmt(worse)};
  row.metric = mean_bias;
  row.verdicts = {cond.holds ? "condition-holds" : "condition-fails"};
  return row;
}

// --------------------------------------------------- covariate contamination

struct CovariateSetup {
  std::vector<double> z_half, u_sd, beta;
  std::vector<double> deploy_shift;
  double deploy_q = 0.0;
  double noise_sd = 1.0;
  std::size_t n = 1000;
  std::optional<double> b, p;
  double lower = -kInf;
  double upper = kInf;
  std::size_t loss_samples = 20000;

  contamination::CovariateContamination contamination() const {
    using namespace contamination;
    CovariateContamination c;
    c.dim = beta.size();
    const auto d = static_cast<Eigen::Index>(c.dim);
    c.z_sampler = [zh = z_half](mc::RngStream& r, std::span<double> out) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.uniform(-zh[i], zh[i]);
    };
    c.u_sampler = [us = u_sd](mc::RngStream& r, std::span<double> out) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = us[i] * r.normal();
    };
    if (!deploy_shift.empty()) {
      c.u_deploy_sampler = [sh = deploy_shift, q = deploy_q](mc::RngStream& r, std::span<double> out) {
        const double u = r.uniform();
        const double sign = u < q ? 1.0 : (u < 2.0 * q ? -1.0 : 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = sign * sh[i];
      };
    }
    c.sigma1 = Matrix::Zero(d, d);
    c.sigma2 = Matrix::Zero(d, d);
    Vector lo(d), hi(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(i);
      c.sigma1(i, i) = z_half[k] * z_half[k] / 3.0;
      c.sigma2(i, i) = u_sd[k] * u_sd[k];
      lo(i) = -z_half[k];
      hi(i) = z_half[k];
    }
    c.z_domain = Domain::box(lo, hi);
    return c;
  }

  contamination::Vector beta_vector() const {
    return Eigen::Map<const contamination::Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  }
};

CovariateSetup covariate_setup(Params& p) {
  CovariateSetup s;
  s.z_half = p.array("z_half");
  s.u_sd = p.array("u_sd");
  s.beta = p.array("beta");
  s.deploy_shift = p.array("deploy_shift", false);
  s.deploy_q = p.number("deploy_q", 0.0);
  s.noise_sd = p.number("noise_sd", 1.0);
  s.n = p.count("n", std::nullopt, 2);
  s.b = p.maybe_number("b");
  s.p = p.maybe_number("p");
  s.lower = p.number("lower", -kInf);
  s.upper = p.number("upper", kInf);
  s.loss_samples = p.count("loss_samples", 20000, 2);
  const std::size_t d = s.beta.size();
  if (d == 0) p.error("beta", "must not be empty");
  if (s.z_half.size() != d || s.u_sd.size() != d) {
    p.error("z_half", "z_half, u_sd and beta must have the same length");
  }
  for (double z : s.z_half) {
    if (!(z > 0.0)) p.error("z_half", "entries must be > 0");
  }
  for (double u : s.u_sd) {
    if (!(u >= 0.0)) p.error("u_sd", "entries must be >= 0");
  }
  if (!s.deploy_shift.empty() && s.deploy_shift.size() != d) {
    p.error("deploy_shift", "must have the same length as beta");
  }
  if (!(s.deploy_q >= 0.0 && s.deploy_q <= 0.5)) p.error("deploy_q", "must be in [0, 0.5]");
  if (s.b.has_value() != s.p.has_value()) p.error("b", "b and p must be given together");
  if (!(s.lower <= s.upper)) p.error("lower", "must not exceed upper");
  if (!(s.noise_sd >= 0.0)) p.error("noise_sd", "must be >= 0");
  if (s.n < d + 1) p.error("n", "must be >= dim(beta) + 1");
  return s;
}

Row covariate_row(const CovariateSetup& s, const mc::RngStream& stream) {
  using namespace contamination;
  const CovariateContamination c = s.contamination();
  const Vector beta = s.beta_vector();
  const OlsFit fit = ols_fit(simulate_covariate_contaminated(c, beta, s.noise_sd, s.n, stream.derive(0)));
  const CovariateLimit lim = covariate_plim(c, beta);
  const Bounds bounds{s.lower, s.upper};
  Row row;
  std::string verdict = "not-configured";
  if (s.b) {
    try {
      verdict = covariate_guardrail_condition(c, beta, bounds, *s.b, *s.p, stream.derive(1)).holds
                    ? "holds"
                    : "fails";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kHypothesisViolated) throw;
      verdict = "hypothesis-violated";
      row.hypothesis_violated = true;
    }
  }
  mc::McOptions mo;
  mo.threads = 1;
  const ExpectedLossComparison cmp =
      mse_compare_covariate(c, beta, fit.beta_hat, bounds, s.loss_samples, stream.derive(2), mo);
  row.cells = {fmt(s.n), fmt(fit.beta_hat(0)), fmt(lim.beta(0)), fmt((fit.beta_hat - lim.beta).norm()),
               yes_no(lim.consistent), verdict, fmt(cmp.algorithmic.mean), fmt(cmp.safeguarded.mean),
               fmt(cmp.difference.mean), fmt(cmp.difference.half_width)};
  row.metric = fit.beta_hat(0);
  row.verdicts = {"condition-" + verdict};
  return row;
}

// ------------------------------------------------------------------ dispatch

using Setup = std::variant<FrameworkSetup, CompetitionSetup, MisspecSetup, ResponseSetup, CovariateSetup>;

Setup make_setup(Scenario scenario, Params& p) {
  switch (scenario) {
    case Scenario::kFramework: return framework_setup(p);
    case Scenario::kCompetition: return competition_setup(p);
    case Scenario::kMisspec: return misspec_setup(p);
    case Scenario::kContaminationResponse: return response_setup(p);
    case Scenario::kContaminationCovariate: return covariate_setup(p);
  }
  return FrameworkSetup{};
}

void module_check(const Setup& setup) {
  if (const auto* s = std::get_if<CompetitionSetup>(&setup)) competition_check(*s);
  if (const auto* s = std::get_if<MisspecSetup>(&setup)) misspec_check(*s);
  if (const auto* s = std::get_if<ResponseSetup>(&setup)) response_check(*s);
  if (const auto* s = std::get_if<CovariateSetup>(&setup)) (void)s->contamination();
}

Row make_row(const Setup& setup, const mc::RngStream& stream) {
  return std::visit(
      [&](const auto& s) -> Row {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FrameworkSetup>) return framework_row(s, stream);
        if constexpr (std::is_same_v<T, CompetitionSetup>) return competition_row(s, stream);
        if constexpr (std::is_same_v<T, MisspecSetup>) return misspec_row(s, stream);
        if constexpr (std::is_same_v<T, ResponseSetup>) return response_row(s, stream);
        if constexpr (std::is_same_v<T, CovariateSetup>) return covariate_row(s, stream);
      },
      setup);
}

std::string_view metric_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::kFramework: return "benefit";
    case Scenario::kCompetition: return "p_a";
    case Scenario::kMisspec: return "p_a";
    case Scenario::kContaminationResponse: return "mean_bias";
    case Scenario::kContaminationCovariate: return "beta_hat_0";
  }
  return "";
}

std::vector<Setup> build_setups(const ScenarioConfig& config) {
  std::vector<std::string> errors;
  for (const auto& [name, values] : config.sweep) {
    const Value* v = nullptr;
    for (const auto& kv : config.parameters) {
      if (kv.first == name) v = &kv.second;
    }
    if (v && v->kind != Value::Kind::kNumber) {
      errors.push_back("sweep." + name + ": only numeric parameters can be swept");
    }
  }
  std::vector<Setup> setups;
  const std::size_t points = config.sweep_points();
  for (std::size_t i = 0; i < points; ++i) {
    const Table t = config.point(i);
    std::vector<std::string> local;
    Params p(t, local);
    Setup s = make_setup(config.scenario, p);
    p.reject_unknown();
    if (local.empty()) {
      try {
        module_check(s);
      } catch (const Error& e) {
        local.push_back(std::string("parameters: ") + e.what());
      }
    }
    const std::string tag = points > 1 ? " (sweep point " + std::to_string(i) + ")" : "";
    for (const auto& m : local) {
      const std::string line = m + tag;
      if (std::find(errors.begin(), errors.end(), line) == errors.end()) errors.push_back(line);
    }
    setups.push_back(std::move(s));
    if (errors.size() > 50) break;
  }
  if (!errors.empty()) throw ConfigError(errors);
  return setups;
}

std::string sweep_label(const std::vector<std::pair<std::string, double>>& values) {
  std::string out;
  for (const auto& [k, v] : values) out += (out.empty() ? "" : ";") + k + "=" + format_number(v);
  return out.empty() ? "-" : out;
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string toml_key(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  }
  return s;
}

std::string toml_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

ScenarioConfig effective(const ScenarioConfig& config, const RunOptions& options) {
  ScenarioConfig c = config;
  if (options.seed) c.seed = *options.seed;
  if (options.replications) {
    if (*options.replications < 1) throw ConfigError({"replications must be ≥ 1"});
    c.replications = *options.replications;
  }
  if (options.out_dir) c.output_path = *options.out_dir;
  return c;
}

RunResult execute(const ScenarioConfig& config, const RunOptions& options) {
  const std::vector<Setup> setups = build_setups(config);
  const std::size_t points = setups.size();
  const std::size_t reps = config.replications;
  std::vector<Row> rows(points * reps);
  const mc::RngStream root(config.seed);
  mc::parallel_for(rows.size(), options.threads == 0 ? mc::default_threads() : options.threads,
                   [&](std::size_t k) {
                     const std::size_t s = k / reps;
                     const std::size_t r = k % reps;
                     rows[k] = make_row(setups[s], root.derive(s).derive(r));
                   });

  RunResult result;
  std::string csv = "sweep,rep,sweep_values";
  for (const auto& c : csv_columns(config.scenario)) csv += "," + c;
  csv += "\n";
  const double z = mc::normal_critical_value(0.99);
  for (std::size_t s = 0; s < points; ++s) {
    SweepSummary sum;
    sum.sweep = config.sweep_values(s);
    sum.metric = std::string(metric_name(config.scenario));
    const std::string label = sweep_label(sum.sweep);
    std::map<std::string, std::size_t> verdicts;
    double acc = 0.0;
    double acc2 = 0.0;
    std::size_t valid = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const Row& row = rows[s * reps + r];
      csv += std::to_string(s) + "," + std::to_string(r) + "," + label;
      for (const auto& cell : row.cells) csv += "," + cell;
      csv += "\n";
      ++sum.rows;
      sum.degenerate += row.degenerate;
      sum.hypothesis_violations += row.hypothesis_violated;
      for (const auto& v : row.verdicts) ++verdicts[v];
      if (std::isfinite(row.metric)) {
        ++valid;
        acc += row.metric;
        acc2 += row.metric * row.metric;
      }
    }
    sum.mean_valid = valid ? acc / static_cast<double>(valid) : kNaN;
    sum.mean_all = valid == sum.rows ? sum.mean_valid : kNaN;
    if (valid > 1) {
      const double var = std::max(0.0, (acc2 - acc * acc / static_cast<double>(valid)) /
                                           static_cast<double>(valid - 1));
      sum.half_width = z * std::sqrt(var / static_cast<double>(valid));
    }
    sum.verdicts.assign(verdicts.begin(), verdicts.end());
    result.summary.push_back(std::move(sum));
  }
  result.rows = rows.size();
  result.csv = std::move(csv);
  return result;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

const std::vector<std::string>& csv_columns(Scenario scenario) {
  static const std::vector<std::string> framework{
      "lower", "upper", "benefit", "benefit_hw", "benefit_identity", "sufficient_lhs",
      "sufficient_rhs", "sufficient", "necessary_lhs", "necessary_rhs", "necessary"};
  static const std::vector<std::string> competition{
      "n", "alpha_hat", "beta_hat", "p_a", "p_prime", "p_matched", "revenue_a",
      "revenue_matched", "plim_price", "degenerate"};
  static const std::vector<std::string> misspec{
      "n", "K", "alpha_hat", "beta_hat", "p_a", "limit_price", "j_star", "interval_lo",
      "interval_hi", "p_safeguarded", "profit_a", "profit_safeguarded", "profit_opt",
      "ai_deviation", "human_miss", "improvement_condition", "degenerate"};
  static const std::vector<std::string> response{
      "n", "expected_bias", "mean_bias", "max_bias_error", "bias_within_band", "condition",
      "upper_threshold", "lower_threshold", "max_loss_algorithmic", "max_loss_safeguarded",
      "points_worse"};
  static const std::vector<std::string> covariate{
      "n", "beta_hat_0", "plim_0", "plim_error_norm", "consistent", "condition",
      "loss_algorithmic", "loss_safeguarded", "loss_difference", "loss_difference_hw"};
  switch (scenario) {
    case Scenario::kFramework: return framework;
    case Scenario::kCompetition: return competition;
    case Scenario::kMisspec: return misspec;
    case Scenario::kContaminationResponse: return response;
    case Scenario::kContaminationCovariate: return covariate;
  }
  return framework;
}

void validate_config(const ScenarioConfig& config) { (void)build_setups(config); }

RunResult run_in_memory(const ScenarioConfig& config, const RunOptions& options) {
  return execute(effective(config, options), options);
}

RunResult run(const ScenarioConfig& config, const RunOptions& options) {
  const ScenarioConfig cfg = effective(config, options);
  build_setups(cfg);  // every field is checked before any output exists
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kArgument, "cannot create output directory '" + dir.string() + "'");

  const std::string started = timestamp();
  RunResult result = execute(cfg, options);
  const std::string finished = timestamp();

  const std::string stem(to_string(cfg.scenario));
  const fs::path csv_path = dir / (stem + ".csv");
  const fs::path manifest_path = dir / (stem + ".manifest.toml");
  {
    std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
    out << result.csv;
    if (!out) throw Error(ErrorCode::kArgument, "cannot write '" + csv_path.string() + "'");
  }

  std::size_t degenerate = 0;
  std::size_t violations = 0;
  std::map<std::string, std::size_t> verdicts;
  for (const auto& s : result.summary) {
    degenerate += s.degenerate;
    violations += s.hypothesis_violations;
    for (const auto& [k, v] : s.verdicts) verdicts[k] += v;
  }
  std::ostringstream m;
  m << "schema_version = " << kSchemaVersion << "\n"
    << "tool = \"guardrail\"\n"
    << "version = \"" << GUARDRAIL_VERSION << "\"\n"
    << "scenario = \"" << stem << "\"\n"
    << "seed = " << cfg.seed << "\n"
    << "replications = " << cfg.replications << "\n"
    << "sweep_points = " << result.summary.size() << "\n"
    << "started = \"" << started << "\"\n"
    << "finished = \"" << finished << "\"\n"
    << "csv = \"" << csv_path.filename().string() << "\"\n"
    << "rows = " << result.rows << "\n"
    << "degenerate_rows = " << degenerate << "\n"
    << "hypothesis_violations = " << violations << "\n\n[verdicts]\n";
  for (const auto& [k, v] : verdicts) m << toml_key(k) << " = " << v << "\n";
  m << "\n[config]\ntext = " << toml_string(cfg.source_text) << "\n";
  {
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    out << m.str();
    if (!out) throw Error(ErrorCode::kArgument, "cannot write '" + manifest_path.string() + "'");
  }
  result.csv_path = csv_path.string();
  result.manifest_path = manifest_path.string();
  if (options.print_summary) std::fputs(format_summary(cfg, result).c_str(), stdout);
  return result;
}

std::string format_summary(const ScenarioConfig& config, const RunResult& result) {
  std::ostringstream out;
  out << "scenario " << to_string(config.scenario) << ", seed " << config.seed << ", "
      << result.rows << " rows\n";
  for (std::size_t i = 0; i < result.summary.size(); ++i) {
    const SweepSummary& s = result.summary[i];
    out << "  [" << i << "] " << sweep_label(s.sweep) << ": " << s.metric << " = "
        << format_number(s.mean_valid) << " +- " << format_number(s.half_width) << " (valid "
        << (s.rows - s.degenerate) << "/" << s.rows << ", all-rows mean "
        << format_number(s.mean_all) << ")";
    if (s.hypothesis_violations) out << ", hypothesis violations " << s.hypothesis_violations;
    for (const auto& [k, v] : s.verdicts) out << ", " << k << " " << v;
    out << "\n";
  }
  if (!result.csv_path.empty()) {
    out << "wrote " << result.csv_path << " and " << result.manifest_path << "\n";
  }
  return out.str();
}

}  // namespace guardrail::runner
