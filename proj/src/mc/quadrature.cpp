#include "guardrail/mc/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <utility>

namespace guardrail::mc {
namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the nodes kXgk[1], kXgk[3], kXgk[5], kXgk[7].
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Integrand returning a value and a nodal error that is integrated with the
// Kronrod weights and added to the panel bound.
using Mapped = std::function<std::pair<double, double>(double)>;

enum class Map { kFinite, kRightInfinite, kLeftInfinite };

struct Segment {
  Map map;
  double anchor_lo;  // finite end(s) in x
  double anchor_hi;
};

struct Panel {
  double lo, hi;
  std::size_t segment;
  double value, error;
};

struct WorseFirst {
  bool operator()(const Panel& a, const Panel& b) const {
    if (a.error != b.error) return a.error < b.error;
    if (a.segment != b.segment) return a.segment > b.segment;
    return a.lo > b.lo;
  }
};

// x(t) and dx/dt for a segment. Finite segments use t = x.
std::pair<double, double> to_x(const Segment& s, double t) {
  switch (s.map) {
    case Map::kFinite:
      return {t, 1.0};
    case Map::kRightInfinite: {
      const double r = 1.0 / (1.0 - t);
      return {s.anchor_lo + t * r, r * r};
    }
    case Map::kLeftInfinite: {
      const double r = 1.0 / (1.0 - t);
      return {s.anchor_hi - t * r, r * r};
    }
  }
  return {t, 1.0};
}

Panel evaluate(const Segment& s, std::size_t index, double lo, double hi,
               const Mapped& f, std::size_t& evaluations) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double kronrod = 0.0;
  double gauss = 0.0;
  double nodal = 0.0;
  auto at = [&](double t) {
    const auto [x, jac] = to_x(s, t);
    const auto [v, e] = f(x);
    ++evaluations;
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kDomain, "integrand is not finite at x = " + std::to_string(x));
    }
    return std::pair<double, double>{v * jac, e * jac};
  };
  for (std::size_t k = 0; k < 8; ++k) {
    if (k == 7) {
      const auto [v, e] = at(center);
      kronrod += kWgk[k] * v;
      gauss += kWg[3] * v;
      nodal += kWgk[k] * e;
      break;
    }
    const double dx = half * kXgk[k];
    const auto [v1, e1] = at(center - dx);
    const auto [v2, e2] = at(center + dx);
    kronrod += kWgk[k] * (v1 + v2);
    nodal += kWgk[k] * (e1 + e2);
    if (k % 2 == 1) gauss += kWg[k / 2] * (v1 + v2);
  }
  kronrod *= half;
  gauss *= half;
  nodal *= half;
  return {lo, hi, index, kronrod, std::abs(kronrod - gauss) + std::abs(nodal)};
}

std::vector<Segment> build_segments(double a, double b, std::vector<double> breakpoints,
                                    std::vector<std::pair<double, double>>& t_ranges) {
  std::vector<double> cuts{a};
  std::sort(breakpoints.begin(), breakpoints.end());
  for (double p : breakpoints) {
    if (std::isfinite(p) && p > a && p < b && p != cuts.back()) cuts.push_back(p);
  }
  if (std::isinf(a) && std::isinf(b) && cuts.size() == 1) cuts.push_back(0.0);
  cuts.push_back(b);

  std::vector<Segment> segs;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    if (std::isinf(lo) && std::isinf(hi)) continue;  // unreachable after the split above
    if (std::isinf(hi)) {
      segs.push_back({Map::kRightInfinite, lo, kInf});
      t_ranges.emplace_back(0.0, 1.0);
    } else if (std::isinf(lo)) {
      segs.push_back({Map::kLeftInfinite, -kInf, hi});
      t_ranges.emplace_back(0.0, 1.0);
    } else {
      segs.push_back({Map::kFinite, lo, hi});
      t_ranges.emplace_back(lo, hi);
    }
  }
  return segs;
}

EstimateWithCI integrate(const Mapped& f, double a, double b, const QuadratureOptions& options) {
  if (std::isnan(a) || std::isnan(b)) throw Error(ErrorCode::kArgument, "NaN integration limit");
  if (a == b) return {0.0, 0.0, 0, Method::kQuadrature};
  if (a > b) {
    EstimateWithCI r = integrate(f, b, a, options);
    r.mean = -r.mean;
    return r;
  }
  if ((std::isinf(a) && a > 0) || (std::isinf(b) && b < 0)) {
    throw Error(ErrorCode::kArgument, "degenerate infinite integration range");
  }

  std::vector<std::pair<double, double>> t_ranges;
  const std::vector<Segment> segs = build_segments(a, b, options.breakpoints, t_ranges);
  std::size_t evaluations = 0;
  std::priority_queue<Panel, std::vector<Panel>, WorseFirst> heap;
  double total = 0.0;
  double error = 0.0;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    Panel p = evaluate(segs[s], s, t_ranges[s].first, t_ranges[s].second, f, evaluations);
    total += p.value;
    error += p.error;
    heap.push(p);
  }

  auto resum = [&] {
    // Sum in (segment, position) order so the result does not depend on heap layout.
    std::vector<Panel> all;
    all.reserve(heap.size());
    auto copy = heap;
    while (!copy.empty()) {
      all.push_back(copy.top());
      copy.pop();
    }
    std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) {
      return x.segment != y.segment ? x.segment < y.segment : x.lo < y.lo;
    });
    total = 0.0;
    error = 0.0;
    for (const Panel& p : all) {
      total += p.value;
      error += p.error;
    }
  };
  auto tolerance = [&] { return std::max(options.abs_tol, options.rel_tol * std::abs(total)); };

  std::size_t subdivisions = 0;
  while (error > tolerance()) {
    if (subdivisions >= options.max_subdivisions) break;
    const Panel worst = heap.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) break;  // panel at floating-point resolution
    heap.pop();
    const Panel left = evaluate(segs[worst.segment], worst.segment, worst.lo, mid, f, evaluations);
    const Panel right =
        evaluate(segs[worst.segment], worst.segment, mid, worst.hi, f, evaluations);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
    if (error <= tolerance()) resum();
  }
  resum();

  EstimateWithCI result{total, error, evaluations, Method::kQuadrature};
  if (error > tolerance()) {
    throw ConvergenceError("quadrature did not converge: error bound " + std::to_string(error) +
                               " after " + std::to_string(subdivisions) + " subdivisions",
                           result);
  }
  return result;
}

}  // namespace

EstimateWithCI quadrature_1d(const std::function<double(double)>& f, double a, double b,
                             const QuadratureOptions& options) {
  return integrate([&](double x) { return std::pair<double, double>{f(x), 0.0}; }, a, b,
                   options);
}

EstimateWithCI quadrature_1d_nested(const std::function<std::pair<double, double>(double)>& f,
                                    double a, double b, const QuadratureOptions& options) {
  return integrate(f, a, b, options);
}

EstimateWithCI quadrature_2d(const std::function<double(double, double)>& f,
                             const Rectangle& domain, const QuadratureOptions& options,
                             const std::function<std::vector<double>(double)>& inner_breakpoints) {
  QuadratureOptions inner = options;
  inner.abs_tol = 0.1 * options.abs_tol;
  inner.breakpoints.clear();
  QuadratureOptions outer = options;
  std::size_t inner_evaluations = 0;

  auto slice = [&](double x) -> std::pair<double, double> {
    QuadratureOptions o = inner;
    if (inner_breakpoints) o.breakpoints = inner_breakpoints(x);
    EstimateWithCI r;
    try {
      r = integrate([&](double y) { return std::pair<double, double>{f(x, y), 0.0}; },
                    domain.y_lo, domain.y_hi, o);
    } catch (const ConvergenceError& e) {
      r = e.partial();
    }
    inner_evaluations += r.n_samples;
    return {r.mean, r.half_width};
  };
  EstimateWithCI result = integrate(slice, domain.x_lo, domain.x_hi, outer);
  result.n_samples = inner_evaluations;
  return result;
}

}  // namespace guardrail::mc
