#include "guardrail/core/distribution.hpp"

#include <cmath>
#include <numbers>

#include "guardrail/core/errors.hpp"

namespace guardrail {

Density1D Density1D::point(double x) {
  Density1D d;
  d.atoms = {{x, 1.0}};
  d.sample = [x](mc::RngStream&) { return x; };
  return d;
}

Density1D Density1D::normal(double mean, double sd) {
  if (!(sd > 0.0)) throw Error(ErrorCode::kArgument, "normal law needs sd > 0");
  Density1D d;
  const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
  d.pdf = [=](double x) {
    const double z = (x - mean) / sd;
    return norm * std::exp(-0.5 * z * z);
  };
  // Keeps the adaptive rule from stepping over the bulk on wide panels.
  d.breakpoints = {mean - 8.0 * sd, mean - 2.0 * sd, mean, mean + 2.0 * sd, mean + 8.0 * sd};
  d.sample = [=](mc::RngStream& r) { return r.normal(mean, sd); };
  return d;
}

Density1D Density1D::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kArgument, "uniform law needs finite lo < hi");
  }
  Density1D d;
  const double h = 1.0 / (hi - lo);
  d.pdf = [=](double) { return h; };
  d.support_lo = lo;
  d.support_hi = hi;
  d.sample = [=](mc::RngStream& r) { return r.uniform(lo, hi); };
  return d;
}

Density1D Density1D::mixture(const Density1D& a, const Density1D& b, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw Error(ErrorCode::kArgument, "mixture weight must lie in [0, 1]");
  }
  Density1D d;
  if (a.pdf || b.pdf) {
    d.pdf = [=, pa = a.pdf, pb = b.pdf](double x) {
      double v = 0.0;
      if (pa && x >= a.support_lo && x <= a.support_hi) v += weight * pa(x);
      if (pb && x >= b.support_lo && x <= b.support_hi) v += (1.0 - weight) * pb(x);
      return v;
    };
  }
  d.support_lo = std::min(a.pdf ? a.support_lo : kInf, b.pdf ? b.support_lo : kInf);
  d.support_hi = std::max(a.pdf ? a.support_hi : -kInf, b.pdf ? b.support_hi : -kInf);
  d.breakpoints = a.breakpoints;
  d.breakpoints.insert(d.breakpoints.end(), b.breakpoints.begin(), b.breakpoints.end());
  for (const Density1D* part : {&a, &b}) {
    if (part->pdf && std::isfinite(part->support_lo)) d.breakpoints.push_back(part->support_lo);
    if (part->pdf && std::isfinite(part->support_hi)) d.breakpoints.push_back(part->support_hi);
  }
  for (auto [x, m] : a.atoms) d.atoms.emplace_back(x, weight * m);
  for (auto [x, m] : b.atoms) d.atoms.emplace_back(x, (1.0 - weight) * m);
  d.sample = [=, sa = a.sample, sb = b.sample](mc::RngStream& r) {
    return r.uniform() < weight ? sa(r) : sb(r);
  };
  return d;
}

Density1D Density1D::heavy_left_tail(double xstar, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::kArgument, "eps must lie in (0, 1)");
  Density1D d;
  d.pdf = [=](double x) {
    const double t = x - xstar;
    return 3.0 * eps / (t * t * t * t);
  };
  d.support_hi = xstar - 1.0;
  d.atoms = {{kInf, 1.0 - eps}};
  // Conditional tail P(X <= x* - t) = t^-3 for t >= 1.
  d.sample = [=](mc::RngStream& r) {
    if (r.uniform() >= eps) return kInf;
    return xstar - std::pow(r.uniform_open(), -1.0 / 3.0);
  };
  return d;
}

}  // namespace guardrail
