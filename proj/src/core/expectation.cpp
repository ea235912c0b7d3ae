#include "expectation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "guardrail/core/errors.hpp"

namespace guardrail::detail {
namespace {

using mc::EstimateWithCI;
using ValueError = std::pair<double, double>;

std::string describe(const Draw& d) {
  std::ostringstream os;
  os.precision(17);
  os << "x_a=" << d.xa << ", lower=" << d.lower << ", upper=" << d.upper;
  if (!d.w.empty()) {
    os << ", w=(";
    for (std::size_t i = 0; i < d.w.dim; ++i) os << (i ? "," : "") << d.w[i];
    os << ")";
  }
  return os.str();
}

std::vector<double> finite_only(std::initializer_list<double> xs) {
  std::vector<double> out;
  for (double x : xs) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

// E[h(X)] for X with law `law`; h returns (value, error of value).
ValueError expect_law(const Density1D& law, const std::function<ValueError(double)>& h,
                      std::vector<double> breakpoints, const mc::QuadratureOptions& base,
                      std::size_t& evaluations) {
  double value = 0.0;
  double error = 0.0;
  if (law.pdf) {
    mc::QuadratureOptions o = base;
    o.breakpoints = std::move(breakpoints);
    o.breakpoints.insert(o.breakpoints.end(), law.breakpoints.begin(), law.breakpoints.end());
    const EstimateWithCI r = mc::quadrature_1d_nested(
        [&](double x) -> ValueError {
          const double p = law.pdf(x);
          if (p == 0.0) return {0.0, 0.0};
          const auto [v, e] = h(x);
          return {v * p, e * p};
        },
        law.support_lo, law.support_hi, o);
    value += r.mean;
    error += r.half_width;
    evaluations += r.n_samples;
  }
  for (const auto& [x, mass] : law.atoms) {
    const auto [v, e] = h(x);
    value += mass * v;
    error += mass * e;
    ++evaluations;
  }
  return {value, error};
}

}  // namespace

double checked_loss(const LossSpec& loss, double x, const Draw& d) {
  const double v = loss(x, d.w);
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os.precision(17);
    os << "loss is not finite at x=" << x << " (draw: " << describe(d) << ")";
    throw Error(ErrorCode::kDomain, os.str());
  }
  return v;
}

mc::MomentSummary monte_carlo(const JointDecisionModel& model, const LossSpec& loss,
                              const std::vector<Functional>& functionals, bool needs_minimizer,
                              const mc::RngStream& stream, const EvalOptions& options) {
  if (!model.sampler) throw Error(ErrorCode::kConfiguration, "model has no sampler");
  if (needs_minimizer && !loss.has_minimizer()) loss.minimizer();  // throws
  mc::McOptions mo;
  mo.confidence = options.confidence;
  mo.threads = options.threads;
  return mc::estimate_moments(
      functionals.size(),
      [&](mc::RngStream& rng, std::span<double> out) {
        Draw d;
        model.sampler(rng, d);
        if (!(d.lower <= d.upper)) {
          throw Error(ErrorCode::kInvalidGuardrail,
                      "invalid guardrail draw (lower > upper): " + describe(d));
        }
        const double s = needs_minimizer ? loss.minimizer(d.w)
                                         : std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < functionals.size(); ++i) out[i] = functionals[i](d, s);
      },
      options.samples, stream, mo);
}

std::vector<EstimateWithCI> quadrature(const JointDecisionModel& model, const LossSpec& loss,
                                       const std::vector<Functional>& functionals,
                                       bool needs_minimizer, const EvalOptions& options) {
  if (!model.density) {
    throw Error(ErrorCode::kConfiguration, "quadrature needs a model that exposes densities");
  }
  const DensityModel& dm = *model.density;
  const double s = needs_minimizer ? loss.minimizer() : std::numeric_limits<double>::quiet_NaN();

  mc::QuadratureOptions outer = options.quadrature;
  mc::QuadratureOptions inner = options.quadrature;
  inner.abs_tol = 0.1 * outer.abs_tol;
  inner.rel_tol = std::max(outer.rel_tol, 1e-12);

  std::vector<EstimateWithCI> out;
  for (const Functional& g : functionals) {
    std::size_t evaluations = 0;
    auto at = [&](double xa, double lo, double hi) {
      Draw d;
      d.xa = xa;
      d.lower = lo;
      d.upper = hi;
      if (!(lo <= hi)) {
        throw Error(ErrorCode::kInvalidGuardrail,
                    "invalid guardrail in density model (lower > upper): " + describe(d));
      }
      return g(d, s);
    };
    auto bounds_for = [&](double b) -> std::pair<double, double> {
      if (dm.random == DensityModel::RandomBound::kLower) return {b, dm.fixed_upper};
      return {dm.fixed_lower, b};
    };
    ValueError result{0.0, 0.0};

    if (dm.random == DensityModel::RandomBound::kNone) {
      result = expect_law(
          dm.xa,
          [&](double xa) -> ValueError { return {at(xa, dm.fixed_lower, dm.fixed_upper), 0.0}; },
          finite_only({dm.fixed_lower, dm.fixed_upper, s}), outer, evaluations);
    } else if (!dm.joint) {
      const double fixed =
          dm.random == DensityModel::RandomBound::kLower ? dm.fixed_upper : dm.fixed_lower;
      auto inner_value = [&](double b) -> ValueError {
        const auto [lo, hi] = bounds_for(b);
        return expect_law(
            dm.xa, [&](double xa) -> ValueError { return {at(xa, lo, hi), 0.0}; },
            finite_only({b, fixed, s}), inner, evaluations);
      };
      result = expect_law(dm.bound, inner_value, finite_only({fixed, s}), outer, evaluations);
    } else {
      if (!dm.bound.pdf || !dm.xa.pdf) {
        throw Error(ErrorCode::kConfiguration, "joint density needs continuous marginals");
      }
      const double fixed =
          dm.random == DensityModel::RandomBound::kLower ? dm.fixed_upper : dm.fixed_lower;
      mc::QuadratureOptions o = outer;
      o.breakpoints = finite_only({fixed, s});
      o.breakpoints.insert(o.breakpoints.end(), dm.bound.breakpoints.begin(),
                           dm.bound.breakpoints.end());
      const EstimateWithCI r = mc::quadrature_2d(
          [&](double b, double xa) {
            const double p = dm.joint(xa, b);
            if (p == 0.0) return 0.0;
            const auto [lo, hi] = bounds_for(b);
            return at(xa, lo, hi) * p;
          },
          {dm.bound.support_lo, dm.bound.support_hi, dm.xa.support_lo, dm.xa.support_hi}, o,
          [&](double b) {
            std::vector<double> bp = finite_only({b, fixed, s});
            bp.insert(bp.end(), dm.xa.breakpoints.begin(), dm.xa.breakpoints.end());
            return bp;
          });
      result = {r.mean, r.half_width};
      evaluations = r.n_samples;
    }
    out.push_back({result.first, result.second, evaluations, mc::Method::kQuadrature});
  }
  return out;
}

}  // namespace guardrail::detail
