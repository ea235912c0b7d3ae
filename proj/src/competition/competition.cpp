#include "guardrail/competition/competition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "guardrail/core/errors.hpp"
#include "guardrail/mc/parallel.hpp"
#include "guardrail/simd/kernels.hpp"

namespace guardrail::competition {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Log-space parameters of the moment-matched bivariate lognormal.
struct LogParams {
  double m;
  double s;
  double rho;
};

LogParams log_params(const PriceHistoryModel& h) {
  const double s2 = std::log1p(h.sigma2 / (h.mu * h.mu));
  const double rho = std::log1p(h.rho * std::expm1(s2)) / s2;
  return {std::log(h.mu) - 0.5 * s2, std::sqrt(s2), rho};
}

void fill_block(const DuopolyParams& params, const PriceHistoryModel& hist, mc::RngStream rng,
                double* p, double* q, double* d, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) {
    const auto [a, b] = hist.draw(rng);
    p[i] = a;
    q[i] = b;
    d[i] = params.alpha - params.beta * a + params.gamma * b + params.noise_sd * rng.normal();
  }
}

// Centered moments of (price, demand) for one block or a merged range.
struct FitMoments {
  std::size_t n = 0;
  double mp = 0.0;
  double md = 0.0;
  double spp = 0.0;
  double spd = 0.0;
};

FitMoments block_moments(std::span<const double> p, std::span<const double> d) {
  FitMoments m;
  m.n = p.size();
  const double inv = 1.0 / static_cast<double>(m.n);
  m.mp = simd::sum(p) * inv;
  m.md = simd::sum(d) * inv;
  const simd::CrossMoments c = simd::cross_moments(p, d, m.mp, m.md);
  m.spp = c.sxx;
  m.spd = c.sxy;
  return m;
}

FitMoments merge(const FitMoments& a, const FitMoments& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  FitMoments out;
  out.n = a.n + b.n;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double n = static_cast<double>(out.n);
  const double dp = b.mp - a.mp;
  const double dd = b.md - a.md;
  out.mp = a.mp + dp * (nb / n);
  out.md = a.md + dd * (nb / n);
  const double w = na * nb / n;
  out.spp = a.spp + b.spp + dp * dp * w;
  out.spd = a.spd + b.spd + dp * dd * w;
  return out;
}

FitMoments merge_range(const std::vector<FitMoments>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return v[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(merge_range(v, lo, mid), merge_range(v, mid, hi));
}

MonopolyFit fit_from(const FitMoments& m) {
  if (!(m.spp > 0.0)) {
    throw Error(ErrorCode::kDegenerateDesign, "monopoly fit: all prices are equal");
  }
  MonopolyFit f;
  f.n = m.n;
  f.beta_hat = -m.spd / m.spp;
  f.alpha_hat = m.md + f.beta_hat * m.mp;
  return f;
}

void check_rows(std::size_t n) {
  if (n < 3) throw Error(ErrorCode::kArgument, "price history needs n >= 3");
}

}  // namespace

void DuopolyParams::validate() const {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kArgument, "alpha must be > 0");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::kArgument, "gamma must be >= 0");
  if (!(beta > gamma)) throw Error(ErrorCode::kArgument, "beta must exceed gamma");
  if (!(noise_sd >= 0.0)) throw Error(ErrorCode::kArgument, "noise_sd must be >= 0");
}

void PriceHistoryModel::validate() const {
  if (!std::isfinite(mu)) throw Error(ErrorCode::kArgument, "mu must be finite");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw Error(ErrorCode::kArgument, "sigma2 must be > 0");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorCode::kArgument, "rho must be in [0, 1]");
  if (family == PriceFamily::kLognormal && !(mu > 0.0)) {
    throw Error(ErrorCode::kArgument, "lognormal prices need mu > 0");
  }
}

std::pair<double, double> PriceHistoryModel::draw(mc::RngStream& rng) const {
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  if (family == PriceFamily::kGaussian) {
    const double sd = std::sqrt(sigma2);
    const double y = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
    return {mu + sd * z1, mu + sd * y};
  }
  const LogParams lp = log_params(*this);
  const double rn = std::min(1.0, lp.rho);
  const double y = rn * z1 + std::sqrt(1.0 - rn * rn) * z2;
  return {std::exp(lp.m + lp.s * z1), std::exp(lp.m + lp.s * y)};
}

History simulate_history(const DuopolyParams& params, const PriceHistoryModel& hist,
                         std::size_t n, const mc::RngStream& stream) {
  params.validate();
  hist.validate();
  check_rows(n);
  History h;
  h.price.resize(n);
  h.competitor.resize(n);
  h.demand.resize(n);
  for (std::size_t first = 0, b = 0; first < n; first += kHistoryBlock, ++b) {
    const std::size_t len = std::min(kHistoryBlock, n - first);
    fill_block(params, hist, stream.derive(b), h.price.data() + first,
               h.competitor.data() + first, h.demand.data() + first, len);
  }
  return h;
}

History simulate_demand(const DuopolyParams& params, std::span<const double> price,
                        std::span<const double> competitor, mc::RngStream& stream) {
  params.validate();
  if (price.size() != competitor.size()) {
    throw Error(ErrorCode::kArgument, "price and competitor lengths differ");
  }
  History h;
  h.price.assign(price.begin(), price.end());
  h.competitor.assign(competitor.begin(), competitor.end());
  h.demand.resize(price.size());
  for (std::size_t i = 0; i < price.size(); ++i) {
    h.demand[i] = params.alpha - params.beta * price[i] + params.gamma * competitor[i] +
                  params.noise_sd * stream.normal();
  }
  return h;
}

MonopolyFit ols_monopoly_fit(const History& data) {
  if (data.demand.size() != data.size()) {
    throw Error(ErrorCode::kArgument, "history columns differ in length");
  }
  if (data.size() < 2) throw Error(ErrorCode::kDegenerateDesign, "monopoly fit needs 2 rows");
  const auto [lo, hi] = std::minmax_element(data.price.begin(), data.price.end());
  if (*lo == *hi) throw Error(ErrorCode::kDegenerateDesign, "monopoly fit: all prices are equal");
  return fit_from(block_moments(data.price, data.demand));
}

MonopolyFit streaming_monopoly_fit(const DuopolyParams& params, const PriceHistoryModel& hist,
                                   std::size_t n, const mc::RngStream& stream,
                                   unsigned threads) {
  params.validate();
  hist.validate();
  check_rows(n);
  const std::size_t blocks = (n + kHistoryBlock - 1) / kHistoryBlock;
  std::vector<FitMoments> partial(blocks);
  mc::parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t first = b * kHistoryBlock;
    const std::size_t len = std::min(kHistoryBlock, n - first);
    std::vector<double> p(len), q(len), d(len);
    fill_block(params, hist, stream.derive(b), p.data(), q.data(), d.data(), len);
    partial[b] = block_moments(p, d);
  });
  return fit_from(merge_range(partial, 0, blocks));
}

double algorithmic_price(double alpha_hat, double beta_hat) {
  if (!(beta_hat > 0.0)) {
    throw Error(ErrorCode::kNonpositiveSlope, "estimated demand slope is not negative");
  }
  return alpha_hat / (2.0 * beta_hat);
}

double plim_price(const DuopolyParams& params, const PriceHistoryModel& hist) {
  const double slope = params.beta - params.gamma * hist.rho;
  if (!(slope > 0.0)) throw Error(ErrorCode::kArgument, "plim price needs beta - gamma rho > 0");
  return (params.alpha + params.gamma * hist.mu * (1.0 - hist.rho)) / (2.0 * slope);
}

Equilibrium equilibrium_prices(const DuopolyParams& params) {
  params.validate();
  return {params.alpha / (2.0 * params.beta - params.gamma),
          params.alpha / (2.0 * (params.beta - params.gamma))};
}

MatchingThreshold matching_threshold(const DuopolyParams& params, const PriceHistoryModel& hist) {
  params.validate();
  hist.validate();
  const double a = params.alpha;
  const double b = params.beta;
  const double g = params.gamma;
  const double r = hist.rho;
  MatchingThreshold t;
  t.nash = equilibrium_prices(params).nash;
  if (hist.mu < t.nash) {
    throw Error(ErrorCode::kHypothesisViolated, "matching threshold needs mu >= Nash price");
  }
  t.p_low = (a * b - 2.0 * a * g * r - b * g * (1.0 - r) * hist.mu) /
            (2.0 * (b - r * g) * (b - g));
  t.p_high = plim_price(params, hist);
  t.boundary = std::abs(t.p_low - t.nash) <= 1e-12 * std::max(1.0, std::abs(t.nash));
  return t;
}

double revenue(const DuopolyParams& params, double price, double competitor) {
  return price * (params.alpha - params.beta * price + params.gamma * competitor);
}

RevenueComparison revenue_compare(const DuopolyParams& params, double p_a, double p_prime) {
  if (!(p_a > 0.0) || !(p_prime > 0.0)) {
    throw Error(ErrorCode::kArgument, "revenue comparison needs positive prices");
  }
  return {revenue(params, std::min(p_a, p_prime), p_prime), revenue(params, p_a, p_prime)};
}

CompetitionOutcome run_replication(const DuopolyParams& params, const PriceHistoryModel& hist,
                                   std::size_t n, std::optional<double> p_prime,
                                   const mc::RngStream& stream, unsigned threads) {
  CompetitionOutcome out;
  out.n = n;
  if (p_prime) {
    out.p_prime = *p_prime;
  } else {
    mc::RngStream rng = stream.derive(1);
    out.p_prime = hist.draw(rng).second;
  }
  try {
    const MonopolyFit fit = streaming_monopoly_fit(params, hist, n, stream.derive(0), threads);
    out.alpha_hat = fit.alpha_hat;
    out.beta_hat = fit.beta_hat;
    out.p_a = algorithmic_price(fit.alpha_hat, fit.beta_hat);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonpositiveSlope && e.code() != ErrorCode::kDegenerateDesign) {
      throw;
    }
    out.degenerate = true;
    out.p_a = out.p_matched = out.revenue_a = out.revenue_matched = kNaN;
    return out;
  }
  out.p_matched = std::min(out.p_a, out.p_prime);
  out.revenue_a = revenue(params, out.p_a, out.p_prime);
  out.revenue_matched = revenue(params, out.p_matched, out.p_prime);
  return out;
}

}  // namespace guardrail::competition
