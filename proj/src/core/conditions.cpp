#include "guardrail/core/conditions.hpp"

#include <algorithm>
#include <cmath>

#include "expectation.hpp"
#include "guardrail/core/errors.hpp"

namespace guardrail {

std::string_view to_string(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::kSufficientUpper: return "sufficient-one-sided-upper";
    case ConditionKind::kNecessaryUpper: return "necessary-one-sided-upper";
    case ConditionKind::kSufficientLower: return "sufficient-one-sided-lower";
    case ConditionKind::kNecessaryLower: return "necessary-one-sided-lower";
    case ConditionKind::kSufficientTwoSided: return "sufficient-two-sided";
    case ConditionKind::kNecessaryTwoSided: return "necessary-two-sided";
    case ConditionKind::kSufficientCovariate: return "sufficient-covariate";
    case ConditionKind::kNecessaryCovariate: return "necessary-covariate";
    case ConditionKind::kIndependentReducedSufficient: return "independent-reduced-sufficient";
    case ConditionKind::kIndependentReducedNecessary: return "independent-reduced-necessary";
  }
  return "unknown";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kHolds: return "holds";
    case Verdict::kFails: return "fails";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

bool is_sufficient(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::kSufficientUpper:
    case ConditionKind::kSufficientLower:
    case ConditionKind::kSufficientTwoSided:
    case ConditionKind::kSufficientCovariate:
    case ConditionKind::kIndependentReducedSufficient:
      return true;
    default:
      return false;
  }
}

Verdict decide(const mc::EstimateWithCI& lhs, const mc::EstimateWithCI& rhs) {
  if (lhs.lower() >= rhs.upper()) return Verdict::kHolds;
  if (lhs.upper() < rhs.lower()) return Verdict::kFails;
  return Verdict::kInconclusive;
}

namespace {

enum class Combine { kPlain, kRatio, kProduct };

struct Plan {
  std::vector<detail::Functional> functionals;  // [lhs, rhs, (second rhs factor)]
  Combine combine = Combine::kPlain;
};

Plan plan_for(ConditionKind kind, const LossSpec& loss) {
  using detail::checked_loss;
  auto L = [&loss](double x, const Draw& d) { return checked_loss(loss, x, d); };
  using F = detail::Functional;
  switch (kind) {
    case ConditionKind::kSufficientUpper:
      return {{F([L](const Draw& d, double s) {
                 return d.xa > s && d.upper <= s ? L(d.xa, d) : 0.0;
               }),
               F([L](const Draw& d, double s) { return d.upper <= s ? L(d.upper, d) : 0.0; })}};
    case ConditionKind::kNecessaryUpper:
      return {{F([L](const Draw& d, double s) { return d.xa >= s ? L(d.xa, d) : 0.0; }),
               F([L](const Draw& d, double s) {
                 return d.upper <= s && d.xa > s ? L(d.upper, d) : 0.0;
               })}};
    case ConditionKind::kSufficientLower:
      return {{F([L](const Draw& d, double s) {
                 return d.xa < s && d.lower >= s ? L(d.xa, d) : 0.0;
               }),
               F([L](const Draw& d, double s) { return d.lower >= s ? L(d.lower, d) : 0.0; })}};
    case ConditionKind::kNecessaryLower:
      return {{F([L](const Draw& d, double s) { return d.xa <= s ? L(d.xa, d) : 0.0; }),
               F([L](const Draw& d, double s) {
                 return d.lower >= s && d.xa < s ? L(d.lower, d) : 0.0;
               })}};
    case ConditionKind::kSufficientTwoSided:
    case ConditionKind::kSufficientCovariate:
      return {{F([L](const Draw& d, double s) {
                 double v = 0.0;
                 if (d.xa >= s && d.upper <= s) v += L(d.xa, d);
                 if (d.xa <= s && d.lower >= s) v += L(d.xa, d);
                 return v;
               }),
               F([L](const Draw& d, double s) {
                 double v = 0.0;
                 if (d.upper <= s) v += L(d.upper, d);
                 if (d.lower >= s) v += L(d.lower, d);
                 return v;
               })}};
    case ConditionKind::kNecessaryTwoSided:
    case ConditionKind::kNecessaryCovariate:
      return {{F([L](const Draw& d, double) { return L(d.xa, d); }),
               F([L](const Draw& d, double s) {
                 double v = 0.0;
                 if (d.upper <= s && s <= d.xa) v += L(d.upper, d);
                 if (d.xa <= s && s <= d.lower) v += L(d.lower, d);
                 return v;
               })}};
    case ConditionKind::kIndependentReducedSufficient:
      return {{F([L](const Draw& d, double s) { return d.xa > s ? L(d.xa, d) : 0.0; }),
               F([L](const Draw& d, double s) { return d.upper <= s ? L(d.upper, d) : 0.0; }),
               F([](const Draw& d, double s) { return d.upper <= s ? 1.0 : 0.0; })},
              Combine::kRatio};
    case ConditionKind::kIndependentReducedNecessary:
      return {{F([L](const Draw& d, double s) { return d.xa >= s ? L(d.xa, d) : 0.0; }),
               F([L](const Draw& d, double s) { return d.upper <= s ? L(d.upper, d) : 0.0; }),
               F([](const Draw& d, double s) { return d.xa > s ? 1.0 : 0.0; })},
              Combine::kProduct};
  }
  throw Error(ErrorCode::kArgument, "unknown condition kind");
}

void check_compatible(const JointDecisionModel& model, ConditionKind kind) {
  const auto name = std::string(to_string(kind));
  switch (kind) {
    case ConditionKind::kSufficientUpper:
    case ConditionKind::kNecessaryUpper:
    case ConditionKind::kIndependentReducedSufficient:
    case ConditionKind::kIndependentReducedNecessary:
      if (model.has_lower || !model.has_upper) {
        throw Error(ErrorCode::kArgument, name + " needs a guardrail with only an upper bound");
      }
      break;
    case ConditionKind::kSufficientLower:
    case ConditionKind::kNecessaryLower:
      if (model.has_upper || !model.has_lower) {
        throw Error(ErrorCode::kArgument, name + " needs a guardrail with only a lower bound");
      }
      break;
    default:
      break;
  }
  if ((kind == ConditionKind::kIndependentReducedSufficient ||
       kind == ConditionKind::kIndependentReducedNecessary) &&
      !model.independent) {
    throw Error(ErrorCode::kConfiguration, name + " requires the model's independent flag");
  }
}

}  // namespace

ConditionReport condition_report(const JointDecisionModel& model, const LossSpec& loss,
                                 ConditionKind kind, const mc::RngStream& stream,
                                 const EvalOptions& options) {
  check_compatible(model, kind);
  if (!loss.has_minimizer()) loss.minimizer();  // configuration error
  const Plan plan = plan_for(kind, loss);

  ConditionReport report{kind, {}, {}, Verdict::kInconclusive};
  if (options.method == mc::Method::kQuadrature) {
    const auto r = detail::quadrature(model, loss, plan.functionals, true, options);
    report.lhs = r[0];
    report.rhs = r[1];
    if (plan.combine == Combine::kRatio) {
      const double a = r[1].mean, b = r[2].mean;
      if (b == 0.0) {
        report.rhs = {0.0, r[1].half_width, r[1].n_samples, mc::Method::kQuadrature};
      } else {
        report.rhs = {a / b, r[1].half_width / std::abs(b) + std::abs(a) * r[2].half_width / (b * b),
                      r[1].n_samples + r[2].n_samples, mc::Method::kQuadrature};
      }
    } else if (plan.combine == Combine::kProduct) {
      const double a = r[1].mean, b = r[2].mean;
      report.rhs = {a * b,
                    r[1].half_width * std::abs(b) + std::abs(a) * r[2].half_width +
                        r[1].half_width * r[2].half_width,
                    r[1].n_samples + r[2].n_samples, mc::Method::kQuadrature};
    }
  } else {
    const mc::MomentSummary m =
        detail::monte_carlo(model, loss, plan.functionals, true, stream, options);
    report.lhs = m.estimate(0, options.confidence);
    switch (plan.combine) {
      case Combine::kPlain: report.rhs = m.estimate(1, options.confidence); break;
      case Combine::kRatio: report.rhs = mc::ratio_estimate(m, 1, 2, options.confidence); break;
      case Combine::kProduct:
        report.rhs = mc::product_estimate(m, 1, 2, options.confidence);
        break;
    }
  }
  report.verdict = decide(report.lhs, report.rhs);
  return report;
}

CorrelationDiagnostic correlation_diagnostic(const JointDecisionModel& model,
                                             const mc::RngStream& stream, std::size_t samples,
                                             double confidence) {
  if (samples < 4) throw Error(ErrorCode::kArgument, "correlation diagnostic needs >= 4 draws");
  // Pairs with an infinite bound are dropped per side.
  struct Acc {
    std::size_t n = 0;
    double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
    void add(double x, double y) {
      ++n;
      const double dx = x - mx;
      mx += dx / n;
      const double dy = y - my;
      my += dy / n;
      sxx += dx * (x - mx);
      syy += dy * (y - my);
      sxy += dx * (y - my);
    }
    mc::EstimateWithCI result(double z) const {
      const double nan = std::nan("");
      if (n < 4 || sxx <= 0.0 || syy <= 0.0) return {nan, nan, n, mc::Method::kMonteCarlo};
      const double r = sxy / std::sqrt(sxx * syy);
      const double zr = std::atanh(std::clamp(r, -0.999999999999, 0.999999999999));
      const double hw = z / std::sqrt(static_cast<double>(n) - 3.0);
      const double lo = std::tanh(zr - hw);
      const double hi = std::tanh(zr + hw);
      // Report the midpoint-symmetric width that covers the Fisher interval.
      return {r, std::max(r - lo, hi - r), n, mc::Method::kMonteCarlo};
    }
  };
  Acc lower, upper;
  mc::RngStream rng = stream;
  for (std::size_t i = 0; i < samples; ++i) {
    Draw d;
    model.sampler(rng, d);
    if (std::isfinite(d.lower)) lower.add(d.xa, d.lower);
    if (std::isfinite(d.upper)) upper.add(d.xa, d.upper);
  }
  const double z = mc::normal_critical_value(confidence);
  return {lower.result(z), upper.result(z), samples};
}

}  // namespace guardrail
