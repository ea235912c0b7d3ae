#include "guardrail/core/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace guardrail {

LossSpec::LossSpec(Plain loss, std::optional<double> minimizer, std::string name)
    : loss_([f = std::move(loss)](double x, const Covariate&) { return f(x); }),
      indexed_(false),
      name_(std::move(name)) {
  if (minimizer) minimizer_ = [m = *minimizer](const Covariate&) { return m; };
}

LossSpec::LossSpec(Indexed loss, Minimizer minimizer, std::string name)
    : loss_(std::move(loss)), minimizer_(std::move(minimizer)), indexed_(true),
      name_(std::move(name)) {}

LossSpec LossSpec::squared(double xstar) {
  return LossSpec([xstar](double x) { return (x - xstar) * (x - xstar); }, xstar, "squared");
}

LossSpec LossSpec::absolute(double xstar) {
  return LossSpec([xstar](double x) { return std::abs(x - xstar); }, xstar, "absolute");
}

LossSpec LossSpec::power(double exponent, double xstar) {
  if (!(exponent > 0.0)) throw Error(ErrorCode::kArgument, "power loss needs exponent > 0");
  return LossSpec([=](double x) { return std::pow(std::abs(x - xstar), exponent); }, xstar,
                  "power");
}

LossSpec LossSpec::asymmetric_linear(double under, double over, double xstar) {
  if (!(under >= 0.0 && over >= 0.0)) {
    throw Error(ErrorCode::kArgument, "asymmetric linear loss needs nonnegative slopes");
  }
  return LossSpec(
      [=](double x) { return x < xstar ? under * (xstar - x) : over * (x - xstar); }, xstar,
      "asymmetric-linear");
}

LossSpec LossSpec::squared_linear(std::vector<double> beta) {
  if (beta.empty() || beta.size() > kMaxCovariateDim) {
    throw Error(ErrorCode::kArgument, "squared_linear needs 1..8 coefficients");
  }
  auto fit = [beta](const Covariate& w) {
    if (w.dim != beta.size()) {
      throw Error(ErrorCode::kArgument, "covariate dimension does not match beta");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) s += w[i] * beta[i];
    return s;
  };
  return LossSpec(
      [fit](double x, const Covariate& w) {
        const double d = x - fit(w);
        return d * d;
      },
      fit, "squared-linear");
}

double LossSpec::minimizer(const Covariate& w) const {
  if (!minimizer_) {
    throw Error(ErrorCode::kConfiguration, "loss '" + name_ + "' has no minimizer");
  }
  return minimizer_(w);
}

LossValidation validate_loss(const LossSpec& loss, const Covariate& w, double spread,
                             mc::RngStream stream, std::size_t triples) {
  LossValidation v;
  v.triples = triples;
  const double xs = loss.minimizer(w);
  const double at_min = loss(xs, w);
  auto check_sign = [&](double value) {
    if (value < 0.0 || std::isnan(value)) ++v.negative;
  };
  check_sign(at_min);
  for (std::size_t t = 0; t < triples; ++t) {
    double p[3];
    for (double& x : p) x = xs + spread * stream.normal();
    std::sort(p, p + 3);
    double l[3];
    for (int i = 0; i < 3; ++i) {
      l[i] = loss(p[i], w);
      check_sign(l[i]);
    }
    // Left of x*: nonincreasing. Right of x*: nondecreasing.
    for (int i = 0; i < 2; ++i) {
      if (p[i + 1] <= xs && l[i] < l[i + 1]) ++v.nonmonotone;
      if (p[i] >= xs && l[i] > l[i + 1]) ++v.nonmonotone;
    }
  }
  double grid_min = std::numeric_limits<double>::infinity();
  const int half = 2000;
  for (int i = -half; i <= half; ++i) {
    grid_min = std::min(grid_min, loss(xs + spread * 4.0 * i / half, w));
  }
  v.minimizer_gap = at_min - grid_min;
  return v;
}

}  // namespace guardrail
