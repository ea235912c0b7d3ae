#include "guardrail/mc/monte_carlo.hpp"

#include <cmath>
#include <string>

#include "guardrail/core/errors.hpp"
#include "guardrail/mc/parallel.hpp"
#include "guardrail/simd/kernels.hpp"

namespace guardrail::mc {
namespace {

// Chan et al. pairwise update of means and co-moments.
MomentSummary merge(const MomentSummary& a, const MomentSummary& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  const std::size_t k = a.dim();
  MomentSummary out;
  out.n = a.n + b.n;
  out.mean.resize(k);
  out.comoment.resize(k * k);
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double n = static_cast<double>(out.n);
  std::vector<double> delta(k);
  for (std::size_t i = 0; i < k; ++i) {
    delta[i] = b.mean[i] - a.mean[i];
    out.mean[i] = a.mean[i] + delta[i] * (nb / n);
  }
  const double w = na * nb / n;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      out.comoment[i * k + j] =
          a.comoment[i * k + j] + b.comoment[i * k + j] + delta[i] * delta[j] * w;
    }
  }
  return out;
}

MomentSummary merge_range(const std::vector<MomentSummary>& blocks, std::size_t lo,
                          std::size_t hi) {
  if (hi - lo == 1) return blocks[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(merge_range(blocks, lo, mid), merge_range(blocks, mid, hi));
}

MomentSummary summarize_block(std::size_t k, const VectorSampler& sampler, RngStream stream,
                              std::size_t first, std::size_t len) {
  std::vector<double> columns(k * len);
  std::vector<double> row(k);
  for (std::size_t d = 0; d < len; ++d) {
    sampler(stream, row);
    for (std::size_t i = 0; i < k; ++i) {
      if (!std::isfinite(row[i])) {
        throw Error(ErrorCode::kDomain, "non-finite sample (output " + std::to_string(i) +
                                            ", draw " + std::to_string(first + d) + ")");
      }
      columns[i * len + d] = row[i];
    }
  }

  MomentSummary s;
  s.n = len;
  s.mean.resize(k);
  s.comoment.assign(k * k, 0.0);
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t i = 0; i < k; ++i) {
    s.mean[i] = simd::sum({columns.data() + i * len, len}) * inv;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::span<const double> xi(columns.data() + i * len, len);
    s.comoment[i * k + i] = simd::sum_sq_dev(xi, s.mean[i]);
    for (std::size_t j = i + 1; j < k; ++j) {
      const std::span<const double> xj(columns.data() + j * len, len);
      const double sxy = simd::cross_moments(xi, xj, s.mean[i], s.mean[j]).sxy;
      s.comoment[i * k + j] = sxy;
      s.comoment[j * k + i] = sxy;
    }
  }
  return s;
}

EstimateWithCI from_variance(double mean, double variance_of_mean, std::size_t n,
                             double confidence) {
  const double z = normal_critical_value(confidence);
  return {mean, z * std::sqrt(std::max(0.0, variance_of_mean)), n, Method::kMonteCarlo};
}

}  // namespace

double MomentSummary::covariance(std::size_t i, std::size_t j) const {
  if (n < 2) return 0.0;
  return comoment[i * dim() + j] / static_cast<double>(n - 1);
}

EstimateWithCI MomentSummary::estimate(std::size_t i, double confidence) const {
  return from_variance(mean[i], covariance(i, i) / static_cast<double>(n), n, confidence);
}

EstimateWithCI MomentSummary::linear(std::span<const double> coeffs, double confidence) const {
  if (coeffs.size() != dim()) throw Error(ErrorCode::kArgument, "coefficient count mismatch");
  double value = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    value += coeffs[i] * mean[i];
    for (std::size_t j = 0; j < dim(); ++j) var += coeffs[i] * coeffs[j] * covariance(i, j);
  }
  return from_variance(value, var / static_cast<double>(n), n, confidence);
}

EstimateWithCI estimate_mean(const ScalarSampler& sampler, std::size_t n,
                             const RngStream& stream, const McOptions& options) {
  const MomentSummary m = estimate_moments(
      1, [&](RngStream& rng, std::span<double> out) { out[0] = sampler(rng); }, n, stream,
      options);
  return m.estimate(0, options.confidence);
}

MomentSummary estimate_moments(std::size_t k, const VectorSampler& sampler, std::size_t n,
                               const RngStream& stream, const McOptions& options) {
  if (n < 2) throw Error(ErrorCode::kArgument, "Monte Carlo needs n >= 2");
  if (k == 0) throw Error(ErrorCode::kArgument, "Monte Carlo needs at least one output");
  if (options.block_size == 0) throw Error(ErrorCode::kArgument, "block_size must be >= 1");
  const std::size_t bs = options.block_size;
  const std::size_t blocks = (n + bs - 1) / bs;
  std::vector<MomentSummary> partial(blocks);
  parallel_for(blocks, options.threads, [&](std::size_t b) {
    const std::size_t first = b * bs;
    const std::size_t len = std::min(bs, n - first);
    partial[b] = summarize_block(k, sampler, stream.derive(b), first, len);
  });
  return merge_range(partial, 0, blocks);
}

EstimateWithCI ratio_estimate(const MomentSummary& m, std::size_t i, std::size_t j,
                              double confidence) {
  const double a = m.mean[i];
  const double b = m.mean[j];
  if (b == 0.0) {
    if (a == 0.0) return {0.0, 0.0, m.n, Method::kMonteCarlo};
    throw Error(ErrorCode::kDomain, "ratio estimate with a zero denominator");
  }
  const double gi = 1.0 / b;
  const double gj = -a / (b * b);
  const double var = gi * gi * m.covariance(i, i) + 2.0 * gi * gj * m.covariance(i, j) +
                     gj * gj * m.covariance(j, j);
  return from_variance(a / b, var / static_cast<double>(m.n), m.n, confidence);
}

EstimateWithCI product_estimate(const MomentSummary& m, std::size_t i, std::size_t j,
                                double confidence) {
  const double a = m.mean[i];
  const double b = m.mean[j];
  const double var = b * b * m.covariance(i, i) + 2.0 * a * b * m.covariance(i, j) +
                     a * a * m.covariance(j, j);
  return from_variance(a * b, var / static_cast<double>(m.n), m.n, confidence);
}

}  // namespace guardrail::mc
