#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "guardrail/mc/rng.hpp"

// Duopoly pricing: a focal firm fits a monopoly demand d = a - b p while the
// true demand also responds to the competitor price p'. The matching
// guardrail caps the algorithmic price at p'.

namespace guardrail::competition {

/// d = alpha - beta p + gamma p' + eps, eps ~ N(0, noise_sd^2).
struct DuopolyParams {
  double alpha = 10.0;
  double beta = 2.0;
  double gamma = 1.0;
  double noise_sd = 1.0;

  /// Throws kArgument unless alpha > 0, beta > gamma >= 0, noise_sd >= 0.
  /// gamma = 0 is the no-competition limit.
  void validate() const;
};

enum class PriceFamily { kGaussian, kLognormal };

/// Joint law of (p, p'): equal means and variances, correlation rho.
/// The lognormal family matches the first two moments exactly.
struct PriceHistoryModel {
  double mu = 4.0;
  double sigma2 = 1.0;
  double rho = 0.0;
  PriceFamily family = PriceFamily::kGaussian;

  void validate() const;
  std::pair<double, double> draw(mc::RngStream& rng) const;
};

struct History {
  std::vector<double> price;
  std::vector<double> competitor;
  std::vector<double> demand;

  std::size_t size() const { return price.size(); }
};

/// Rows are produced in blocks of `kHistoryBlock`; block b draws from
/// stream.derive(b), so `streaming_monopoly_fit` sees the same data.
inline constexpr std::size_t kHistoryBlock = 4096;

History simulate_history(const DuopolyParams& params, const PriceHistoryModel& hist,
                         std::size_t n, const mc::RngStream& stream);

/// Demand draws at given prices (one noise draw per row).
History simulate_demand(const DuopolyParams& params, std::span<const double> price,
                        std::span<const double> competitor, mc::RngStream& stream);

struct MonopolyFit {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  std::size_t n = 0;
};

/// OLS of demand on (1, -price). All prices equal -> kDegenerateDesign.
MonopolyFit ols_monopoly_fit(const History& data);

/// Same fit without materializing the history: per-block centered moments
/// merged in a fixed tree, so the result does not depend on `threads`.
MonopolyFit streaming_monopoly_fit(const DuopolyParams& params, const PriceHistoryModel& hist,
                                   std::size_t n, const mc::RngStream& stream,
                                   unsigned threads = 0);

/// alpha_hat / (2 beta_hat). beta_hat <= 0 -> kNonpositiveSlope.
double algorithmic_price(double alpha_hat, double beta_hat);

/// Probability limit of the algorithmic price.
double plim_price(const DuopolyParams& params, const PriceHistoryModel& hist);

struct Equilibrium {
  double nash = 0.0;
  double collusive = 0.0;
};

Equilibrium equilibrium_prices(const DuopolyParams& params);

struct MatchingThreshold {
  double p_low = 0.0;   // below this competitor price matching loses revenue
  double nash = 0.0;
  double p_high = 0.0;  // the plim price
  bool boundary = false;  // p_low coincides with the Nash price
};

/// Requires mu >= Nash price, else kHypothesisViolated.
MatchingThreshold matching_threshold(const DuopolyParams& params, const PriceHistoryModel& hist);

/// Expected revenue p (alpha - beta p + gamma p').
double revenue(const DuopolyParams& params, double price, double competitor);

struct RevenueComparison {
  double matched = 0.0;
  double algorithmic = 0.0;

  double gain() const { return matched - algorithmic; }
};

RevenueComparison revenue_compare(const DuopolyParams& params, double p_a, double p_prime);

struct CompetitionOutcome {
  std::size_t n = 0;
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double p_a = 0.0;
  double p_prime = 0.0;
  double p_matched = 0.0;
  double revenue_a = 0.0;
  double revenue_matched = 0.0;
  bool degenerate = false;
};

/// One replication: fit on n history rows from stream.derive(0), then
/// evaluate at `p_prime` or, when absent, at a competitor price drawn from
/// the history marginal with stream.derive(1). Degenerate fits are recorded
/// with NaN prices instead of throwing.
CompetitionOutcome run_replication(const DuopolyParams& params, const PriceHistoryModel& hist,
                                   std::size_t n, std::optional<double> p_prime,
                                   const mc::RngStream& stream, unsigned threads = 1);

}  // namespace guardrail::competition
