#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "guardrail/mc/estimate.hpp"
#include "guardrail/mc/rng.hpp"

namespace guardrail::mc {

struct McOptions {
  double confidence = 0.99;
  /// Draws per block. Block b always uses stream.derive(b), so results depend
  /// on (seed, path, n, block_size) and never on the thread count.
  std::size_t block_size = 4096;
  unsigned threads = 0;
};

/// Sample means and the covariance matrix of the outputs of a vector sampler.
struct MomentSummary {
  std::size_t n = 0;
  std::vector<double> mean;
  /// Row-major k x k matrix of centered co-moments sum (x_i - m)(y_i - m).
  std::vector<double> comoment;

  std::size_t dim() const { return mean.size(); }
  double covariance(std::size_t i, std::size_t j) const;
  /// CLT interval for output i.
  EstimateWithCI estimate(std::size_t i, double confidence) const;
  /// CLT interval for sum_i c_i * mean_i.
  EstimateWithCI linear(std::span<const double> coeffs, double confidence) const;
};

using ScalarSampler = std::function<double(RngStream&)>;
/// Writes one draw of every output into the span (size k).
using VectorSampler = std::function<void(RngStream&, std::span<double>)>;

EstimateWithCI estimate_mean(const ScalarSampler& sampler, std::size_t n,
                             const RngStream& stream, const McOptions& options = {});

MomentSummary estimate_moments(std::size_t k, const VectorSampler& sampler, std::size_t n,
                               const RngStream& stream, const McOptions& options = {});

/// Delta-method interval for mean_i / mean_j. Returns 0 +- 0 when both means
/// are exactly zero (an indicator that never fired).
EstimateWithCI ratio_estimate(const MomentSummary& m, std::size_t i, std::size_t j,
                              double confidence);

/// Delta-method interval for mean_i * mean_j.
EstimateWithCI product_estimate(const MomentSummary& m, std::size_t i, std::size_t j,
                                double confidence);

}  // namespace guardrail::mc
