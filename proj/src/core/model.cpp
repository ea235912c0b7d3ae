#include "guardrail/core/model.hpp"

#include <cmath>
#include <numbers>

#include "guardrail/core/errors.hpp"

namespace guardrail {

BoundGenerator BoundGenerator::constant(double value) {
  if (std::isnan(value)) throw Error(ErrorCode::kArgument, "constant bound is NaN");
  BoundGenerator g;
  g.constant_ = value;
  return g;
}

BoundGenerator BoundGenerator::distributed(Density1D law) {
  if (!law.sample) throw Error(ErrorCode::kArgument, "bound law has no sampler");
  BoundGenerator g;
  g.fn_ = [s = law.sample](mc::RngStream& r, const Covariate&) { return s(r); };
  g.law_ = std::move(law);
  return g;
}

BoundGenerator BoundGenerator::of_covariate(std::function<double(const Covariate&)> fn) {
  BoundGenerator g;
  g.fn_ = [f = std::move(fn)](mc::RngStream&, const Covariate& w) { return f(w); };
  return g;
}

BoundGenerator BoundGenerator::random(Random fn) {
  BoundGenerator g;
  g.fn_ = std::move(fn);
  return g;
}

double BoundGenerator::draw(mc::RngStream& rng, const Covariate& w) const {
  if (constant_) return *constant_;
  return fn_(rng, w);
}

JointDecisionModel compose_model(
    std::function<double(mc::RngStream&, const Covariate&)> algorithm,
    const GuardrailSpec& guardrail, std::function<Covariate(mc::RngStream&)> covariates) {
  JointDecisionModel m;
  m.has_lower = guardrail.lower.has_value();
  m.has_upper = guardrail.upper.has_value();
  m.sampler = [alg = std::move(algorithm), cov = std::move(covariates), g = guardrail](
                  mc::RngStream& rng, Draw& d) {
    d.w = cov ? cov(rng) : Covariate{};
    d.xa = alg(rng, d.w);
    d.lower = g.lower ? g.lower->draw(rng, d.w) : -kInf;
    d.upper = g.upper ? g.upper->draw(rng, d.w) : kInf;
  };
  return m;
}

JointDecisionModel independent_model(const Density1D& xa_law, const GuardrailSpec& guardrail) {
  if (!xa_law.sample) throw Error(ErrorCode::kArgument, "X_a law has no sampler");
  JointDecisionModel m = compose_model(
      [s = xa_law.sample](mc::RngStream& r, const Covariate&) { return s(r); }, guardrail);
  m.independent = true;

  DensityModel dm;
  dm.xa = xa_law;
  int random_bounds = 0;
  auto absorb = [&](const std::optional<BoundGenerator>& g, double& fixed,
                    DensityModel::RandomBound side) -> bool {
    if (!g) return true;
    if (auto c = g->constant_value()) {
      fixed = *c;
      return true;
    }
    if (const Density1D* law = g->law()) {
      ++random_bounds;
      dm.random = side;
      dm.bound = *law;
      return true;
    }
    return false;
  };
  const bool lower_ok = absorb(guardrail.lower, dm.fixed_lower, DensityModel::RandomBound::kLower);
  const bool upper_ok = absorb(guardrail.upper, dm.fixed_upper, DensityModel::RandomBound::kUpper);
  if (lower_ok && upper_ok && random_bounds <= 1 && xa_law.pdf) m.density = std::move(dm);
  return m;
}

JointDecisionModel bivariate_normal_upper(double mean_a, double sd_a, double mean_h, double sd_h,
                                          double rho, double fixed_lower) {
  if (!(sd_a > 0.0 && sd_h > 0.0 && rho > -1.0 && rho < 1.0)) {
    throw Error(ErrorCode::kArgument, "bivariate normal needs sd > 0 and |rho| < 1");
  }
  JointDecisionModel m;
  m.has_upper = true;
  m.has_lower = std::isfinite(fixed_lower);
  m.independent = rho == 0.0;
  const double c = std::sqrt(1.0 - rho * rho);
  m.sampler = [=](mc::RngStream& r, Draw& d) {
    const double z1 = r.normal();
    const double z2 = r.normal();
    d.w = {};
    d.xa = mean_a + sd_a * z1;
    d.lower = fixed_lower;
    d.upper = mean_h + sd_h * (rho * z1 + c * z2);
  };
  DensityModel dm;
  dm.xa = Density1D::normal(mean_a, sd_a);
  dm.bound = Density1D::normal(mean_h, sd_h);
  dm.fixed_lower = fixed_lower;
  dm.random = DensityModel::RandomBound::kUpper;
  const double norm = 1.0 / (2.0 * std::numbers::pi * sd_a * sd_h * c);
  dm.joint = [=](double xa, double xh) {
    const double u = (xa - mean_a) / sd_a;
    const double v = (xh - mean_h) / sd_h;
    return norm * std::exp(-(u * u - 2.0 * rho * u * v + v * v) / (2.0 * c * c));
  };
  m.density = std::move(dm);
  return m;
}

}  // namespace guardrail
