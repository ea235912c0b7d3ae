#include "guardrail/core/tightness.hpp"

#include <cmath>

#include "guardrail/core/errors.hpp"

namespace guardrail {

TightnessResult tightness_counterexample(double a, double sigma2, double xstar, double epsilon,
                                         const EvalOptions& options) {
  if (!(a >= 0.25)) throw Error(ErrorCode::kArgument, "tightness: need a >= 1/4");
  if (!(sigma2 > 0.0 && sigma2 < 1.5)) {
    throw Error(ErrorCode::kArgument, "tightness: need 0 < sigma2 < 3/2");
  }
  if (!(xstar < 1.0)) throw Error(ErrorCode::kArgument, "tightness: need x* < 1");
  if (!(epsilon > 0.0 && epsilon < sigma2 / (6.0 * a))) {
    throw Error(ErrorCode::kArgument, "tightness: need 0 < eps < sigma2 / (6a)");
  }

  const double sd = std::sqrt(sigma2);
  const Density1D xa_law = Density1D::normal(xstar, sd);
  const Density1D xh_law = Density1D::heavy_left_tail(xstar, epsilon);
  GuardrailSpec g;
  g.upper = BoundGenerator::distributed(xh_law);

  TightnessResult r;
  r.loss = LossSpec::squared(xstar);
  r.model = independent_model(xa_law, g);

  const mc::QuadratureOptions& q = options.quadrature;
  auto sq = [xstar](double x) { return (x - xstar) * (x - xstar); };
  r.lhs = mc::quadrature_1d([&](double x) { return x >= xstar ? sq(x) * xa_law.pdf(x) : 0.0; },
                            -kInf, kInf,
                            [&] {
                              auto o = q;
                              o.breakpoints = xa_law.breakpoints;
                              return o;
                            }())
              .mean;
  r.tail_loss =
      mc::quadrature_1d([&](double x) { return sq(x) * xh_law.pdf(x); }, -kInf, xstar - 1.0, q)
          .mean;
  r.scaled_rhs = a * r.tail_loss;
  r.lhs_ratio_check = r.lhs >= r.scaled_rhs;

  EvalOptions quad = options;
  quad.method = mc::Method::kQuadrature;
  r.benefit = benefit(r.model, r.loss, mc::RngStream(0), quad).direct;
  r.benefit_bound = -(1.5 * epsilon - epsilon * sigma2);
  return r;
}

}  // namespace guardrail
