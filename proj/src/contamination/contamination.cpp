#include "guardrail/contamination/contamination.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "guardrail/core/errors.hpp"
#include "guardrail/mc/parallel.hpp"

namespace guardrail::contamination {
namespace {

constexpr std::size_t kBlock = 4096;

void check_beta(const Vector& beta, std::size_t dim) {
  if (static_cast<std::size_t>(beta.size()) != dim) {
    throw Error(ErrorCode::kArgument, "coefficient length does not match the domain dimension");
  }
}

double clip(double x, const Bounds& b) { return std::min(std::max(x, b.lower), b.upper); }

void check_bounds(const Bounds& b) {
  if (!(b.lower <= b.upper)) throw Error(ErrorCode::kInvalidGuardrail, "lower bound exceeds upper bound");
}

Vector draw_vector(const mc::VectorSampler& s, std::size_t dim, mc::RngStream& rng) {
  Vector v(static_cast<Eigen::Index>(dim));
  s(rng, std::span<double>(v.data(), dim));
  return v;
}

// Fills rows [first, first + len) of a dataset from one block stream.
template <class Row>
void fill_blocks(std::size_t n, const mc::RngStream& stream, const Row& row) {
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  for (std::size_t b = 0; b < blocks; ++b) {
    mc::RngStream rng = stream.derive(b);
    const std::size_t first = b * kBlock;
    const std::size_t len = std::min(kBlock, n - first);
    for (std::size_t i = first; i < first + len; ++i) row(rng, static_cast<Eigen::Index>(i));
  }
}

}  // namespace

Domain Domain::box(Vector lo, Vector hi) {
  if (lo.size() == 0 || lo.size() != hi.size()) {
    throw Error(ErrorCode::kArgument, "box corners must have the same nonzero length");
  }
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(lo(i) <= hi(i)) || !std::isfinite(lo(i)) || !std::isfinite(hi(i))) {
      throw Error(ErrorCode::kArgument, "box needs finite lo <= hi on every axis");
    }
  }
  Domain d;
  d.lo_ = std::move(lo);
  d.hi_ = std::move(hi);
  return d;
}

Domain Domain::points(Matrix pts) {
  if (pts.rows() == 0 || pts.cols() == 0) throw Error(ErrorCode::kArgument, "empty point set");
  if (!pts.allFinite()) throw Error(ErrorCode::kArgument, "point set must be finite");
  Domain d;
  d.is_box_ = false;
  d.pts_ = std::move(pts);
  return d;
}

std::size_t Domain::dim() const {
  return static_cast<std::size_t>(is_box_ ? lo_.size() : pts_.cols());
}

double Domain::max_linear(const Vector& beta) const {
  check_beta(beta, dim());
  if (!is_box_) return (pts_ * beta).maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) s += beta(i) * (beta(i) > 0 ? hi_(i) : lo_(i));
  return s;
}

double Domain::min_linear(const Vector& beta) const {
  check_beta(beta, dim());
  if (!is_box_) return (pts_ * beta).minCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) s += beta(i) * (beta(i) > 0 ? lo_(i) : hi_(i));
  return s;
}

void Domain::sample(mc::RngStream& rng, Eigen::Ref<Vector> out) const {
  if (is_box_) {
    for (Eigen::Index i = 0; i < lo_.size(); ++i) out(i) = rng.uniform(lo_(i), hi_(i));
  } else {
    out = pts_.row(static_cast<Eigen::Index>(rng.below(pts_.rows()))).transpose();
  }
}

Matrix Domain::grid(std::size_t per_axis) const {
  if (!is_box_) return pts_;
  if (per_axis < 2) throw Error(ErrorCode::kArgument, "grid needs at least 2 points per axis");
  const std::size_t d = dim();
  std::vector<std::size_t> counts(d);
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    counts[i] = lo_(i) == hi_(i) ? 1 : per_axis;
    total *= counts[i];
  }
  Matrix g(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < total; ++r) {
    std::size_t rest = r;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = rest % counts[i];
      rest /= counts[i];
      const auto ii = static_cast<Eigen::Index>(i);
      g(static_cast<Eigen::Index>(r), ii) =
          counts[i] == 1 ? lo_(ii)
                         : lo_(ii) + (hi_(ii) - lo_(ii)) * static_cast<double>(k) /
                                         static_cast<double>(counts[i] - 1);
    }
  }
  return g;
}

ResponseContamination ResponseContamination::two_point(double b, double p) {
  if (!std::isfinite(b)) throw Error(ErrorCode::kArgument, "contamination magnitude must be finite");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kArgument, "propensity must be in [0, 1]");
  ResponseContamination c;
  c.b_ = b;
  c.p_ = p;
  c.mean_ = p * b;
  return c;
}

ResponseContamination ResponseContamination::general(std::function<double(mc::RngStream&)> sampler,
                                                     double mean) {
  if (!sampler) throw Error(ErrorCode::kArgument, "contamination sampler is empty");
  if (!std::isfinite(mean)) throw Error(ErrorCode::kArgument, "contamination mean must be finite");
  ResponseContamination c;
  c.two_point_ = false;
  c.mean_ = mean;
  c.sampler_ = std::move(sampler);
  return c;
}

double ResponseContamination::draw(mc::RngStream& rng) const {
  if (!two_point_) return sampler_(rng);
  return rng.bernoulli(p_) ? b_ : 0.0;
}

Dataset simulate_response_contaminated(const BoundedLinearModel& model,
                                       const ResponseContamination& cont, std::size_t n,
                                       const mc::RngStream& stream) {
  const std::size_t d = model.domain.dim();
  check_beta(model.beta, d);
  if (n < d + 1) throw Error(ErrorCode::kArgument, "need n >= dim + 1 rows");
  if (!(model.noise_sd >= 0.0)) throw Error(ErrorCode::kArgument, "noise_sd must be >= 0");
  Dataset data{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)),
               Vector(static_cast<Eigen::Index>(n))};
  Vector w(static_cast<Eigen::Index>(d));
  fill_blocks(n, stream, [&](mc::RngStream& rng, Eigen::Index i) {
    model.domain.sample(rng, w);
    data.W.row(i) = w.transpose();
    const double bias = cont.draw(rng);
    data.x(i) = w.dot(model.beta) + bias + model.noise_sd * rng.normal();
  });
  return data;
}

double OlsFit::prediction_se(const Vector& w) const {
  return std::sqrt(std::max(0.0, w.dot(covariance * w)));
}

OlsFit ols_fit(const Dataset& data) {
  const Eigen::Index n = data.W.rows();
  const Eigen::Index d = data.W.cols();
  if (data.x.size() != n) throw Error(ErrorCode::kArgument, "response length differs from rows");
  if (n <= d) throw Error(ErrorCode::kDegenerateDesign, "need more rows than covariates");
  const Matrix gram = data.W.transpose() * data.W;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * top)) {
    throw Error(ErrorCode::kDegenerateDesign, "singular design matrix");
  }
  const Eigen::LDLT<Matrix> ldlt(gram);
  OlsFit fit;
  fit.n = static_cast<std::size_t>(n);
  fit.beta_hat = ldlt.solve(data.W.transpose() * data.x);
  const Vector resid = data.x - data.W * fit.beta_hat;
  fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - d);
  fit.covariance = fit.residual_variance * ldlt.solve(Matrix::Identity(d, d));
  return fit;
}

double ols_predict(const Dataset& data, const Vector& w) { return ols_fit(data).predict(w); }

ResponseLimit response_plim(const ResponseContamination& cont) {
  return {cont.mean(), cont.mean() * cont.mean()};
}

ResponseCondition response_guardrail_condition(const BoundedLinearModel& model,
                                               const ResponseContamination& cont, double upper,
                                               std::optional<double> lower) {
  const double lo = lower.value_or(-std::numeric_limits<double>::infinity());
  check_bounds({lo, upper});
  const double shift = std::abs(cont.mean());
  ResponseCondition r;
  r.upper_threshold = model.domain.max_linear(model.beta) - shift;
  r.lower_threshold = model.domain.min_linear(model.beta) + shift;
  r.holds = upper >= r.upper_threshold && lo <= r.lower_threshold;
  return r;
}

std::vector<LossRow> mse_compare_response(const BoundedLinearModel& model,
                                          const ResponseContamination& cont, const Bounds& bounds,
                                          const Matrix& grid, const OlsFit* fit) {
  check_bounds(bounds);
  check_beta(model.beta, static_cast<std::size_t>(grid.cols()));
  std::vector<LossRow> rows;
  rows.reserve(static_cast<std::size_t>(grid.rows()));
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const Vector w = grid.row(i).transpose();
    const double truth = w.dot(model.beta);
    const double xa = fit ? fit->predict(w) : truth + cont.mean();
    const double xs = clip(xa, bounds);
    // Errors taken directly so the unclipped case carries no rounding.
    const double ea = fit ? xa - truth : cont.mean();
    const double es = xs == xa ? ea : xs - truth;
    rows.push_back({w, ea * ea, es * es});
  }
  return rows;
}

std::pair<Matrix, Matrix> sample_second_moments(const CovariateContamination& cont,
                                                std::size_t n, const mc::RngStream& stream) {
  if (n < 1) throw Error(ErrorCode::kArgument, "need at least one draw");
  const auto d = static_cast<Eigen::Index>(cont.dim);
  Matrix s1 = Matrix::Zero(d, d);
  Matrix s2 = Matrix::Zero(d, d);
  fill_blocks(n, stream, [&](mc::RngStream& rng, Eigen::Index) {
    const Vector z = draw_vector(cont.z_sampler, cont.dim, rng);
    const Vector u = draw_vector(cont.u_sampler, cont.dim, rng);
    s1.noalias() += z * z.transpose();
    s2.noalias() += u * u.transpose();
  });
  return {s1 / static_cast<double>(n), s2 / static_cast<double>(n)};
}

void check_moment_assumptions(const CovariateContamination& cont, std::size_t n,
                              const mc::RngStream& stream, double tol) {
  const auto [s1, s2] = sample_second_moments(cont, n, stream);
  const Eigen::SelfAdjointEigenSolver<Matrix> e1(s1);
  const Eigen::SelfAdjointEigenSolver<Matrix> e2(s2);
  const double scale = std::max(1.0, std::max(e1.eigenvalues().maxCoeff(), e2.eigenvalues().maxCoeff()));
  if (!(e1.eigenvalues().minCoeff() > tol * scale)) {
    throw Error(ErrorCode::kHypothesisViolated, "E[Z Z^T] is not positive definite");
  }
  if (e2.eigenvalues().minCoeff() < -tol * scale) {
    throw Error(ErrorCode::kHypothesisViolated, "E[U U^T] is not positive semi-definite");
  }
}

CovariateLimit covariate_plim(const Matrix& sigma1, const Matrix& sigma2, const Vector& beta,
                              double tol) {
  const Eigen::Index d = beta.size();
  if (sigma1.rows() != d || sigma1.cols() != d || sigma2.rows() != d || sigma2.cols() != d) {
    throw Error(ErrorCode::kArgument, "second-moment matrices do not match beta");
  }
  const Matrix sum = sigma1 + sigma2;
  const Eigen::FullPivLU<Matrix> lu(sum);
  if (!lu.isInvertible()) throw Error(ErrorCode::kDegenerateDesign, "Sigma1 + Sigma2 is singular");
  const Vector s2b = sigma2 * beta;
  CovariateLimit out;
  out.beta = beta - lu.solve(s2b);
  out.consistent = s2b.norm() <= tol * std::max(1.0, sigma2.norm() * beta.norm());
  return out;
}

CovariateLimit covariate_plim(const CovariateContamination& cont, const Vector& beta, double tol) {
  return covariate_plim(cont.sigma1, cont.sigma2, beta, tol);
}

Dataset simulate_covariate_contaminated(const CovariateContamination& cont, const Vector& beta,
                                        double noise_sd, std::size_t n,
                                        const mc::RngStream& stream) {
  check_beta(beta, cont.dim);
  if (n < cont.dim + 1) throw Error(ErrorCode::kArgument, "need n >= dim + 1 rows");
  const auto d = static_cast<Eigen::Index>(cont.dim);
  Dataset data{Matrix(static_cast<Eigen::Index>(n), d), Vector(static_cast<Eigen::Index>(n))};
  fill_blocks(n, stream, [&](mc::RngStream& rng, Eigen::Index i) {
    const Vector z = draw_vector(cont.z_sampler, cont.dim, rng);
    const Vector u = draw_vector(cont.u_sampler, cont.dim, rng);
    data.W.row(i) = (z + u).transpose();
    data.x(i) = z.dot(beta) + noise_sd * rng.normal();
  });
  return data;
}

CovariateCondition covariate_guardrail_condition(const CovariateContamination& cont,
                                                 const Vector& beta, const Bounds& bounds,
                                                 double b, double p, const mc::RngStream& stream,
                                                 std::size_t certify_n) {
  check_bounds(bounds);
  check_beta(beta, cont.dim);
  if (!(p > 0.0 && p < 0.5)) {
    throw Error(ErrorCode::kHypothesisViolated, "tail probability p must lie in (0, 0.5)");
  }
  if (!(b > 0.0) || !std::isfinite(b)) throw Error(ErrorCode::kArgument, "b must be > 0");
  if (!covariate_plim(cont, beta).consistent) {
    throw Error(ErrorCode::kHypothesisViolated, "Sigma2 beta is not zero");
  }
  if (certify_n < 1) throw Error(ErrorCode::kArgument, "certify_n must be >= 1");

  std::size_t up = 0;
  std::size_t down = 0;
  const mc::VectorSampler& u0 = cont.deploy_sampler();
  fill_blocks(certify_n, stream, [&](mc::RngStream& rng, Eigen::Index) {
    const double v = draw_vector(u0, cont.dim, rng).dot(beta);
    up += v >= b;
    down += v <= -b;
  });
  CovariateCondition c;
  const double total = static_cast<double>(certify_n);
  c.tail_upper = static_cast<double>(up) / total;
  c.tail_lower = static_cast<double>(down) / total;
  const double slack = mc::normal_critical_value(0.98) * std::sqrt(p * (1.0 - p) / total);
  if (c.tail_upper < p - slack || c.tail_lower < p - slack) {
    throw Error(ErrorCode::kHypothesisViolated,
                "(b, p) not supported by the deployment error law: tails " +
                    std::to_string(c.tail_upper) + ", " + std::to_string(c.tail_lower));
  }
  c.slack = std::sqrt(p / (1.0 - p)) * b;
  c.lower_threshold = cont.z_domain.min_linear(beta) + c.slack;
  c.upper_threshold = cont.z_domain.max_linear(beta) - c.slack;
  c.holds = bounds.lower <= c.lower_threshold && bounds.upper >= c.upper_threshold;
  return c;
}

ExpectedLossComparison mse_compare_covariate(const CovariateContamination& cont,
                                             const Vector& beta, const Vector& beta_hat,
                                             const Bounds& bounds, std::size_t n,
                                             const mc::RngStream& stream,
                                             const mc::McOptions& options) {
  check_bounds(bounds);
  check_beta(beta, cont.dim);
  check_beta(beta_hat, cont.dim);
  const mc::VectorSampler& u0 = cont.deploy_sampler();
  const mc::MomentSummary m = mc::estimate_moments(
      2,
      [&](mc::RngStream& rng, std::span<double> out) {
        const Vector z = draw_vector(cont.z_sampler, cont.dim, rng);
        const Vector u = draw_vector(u0, cont.dim, rng);
        const double truth = z.dot(beta);
        const double xa = (z + u).dot(beta_hat);
        const double xs = clip(xa, bounds);
        out[0] = (xa - truth) * (xa - truth);
        out[1] = (xs - truth) * (xs - truth);
      },
      n, stream, options);
  const double diff[2] = {-1.0, 1.0};
  return {m.estimate(0, options.confidence), m.estimate(1, options.confidence),
          m.linear(diff, options.confidence)};
}

}  // namespace guardrail::contamination
