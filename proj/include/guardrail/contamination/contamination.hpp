#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "guardrail/mc/estimate.hpp"
#include "guardrail/mc/monte_carlo.hpp"
#include "guardrail/mc/rng.hpp"

// Least-squares prediction from contaminated data: additive response
// contamination and errors-in-variables covariates, with the bound
// conditions under which clipping the prediction cannot hurt.

namespace guardrail::contamination {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Bounded covariate domain: an axis-aligned box or a finite point set.
/// Extremes of linear functionals are exact (vertex or point enumeration).
class Domain {
 public:
  static Domain box(Vector lo, Vector hi);
  /// One point per row.
  static Domain points(Matrix pts);

  std::size_t dim() const;
  bool is_box() const { return is_box_; }
  double max_linear(const Vector& beta) const;
  double min_linear(const Vector& beta) const;
  /// Uniform draw: uniform on the box, or a uniformly chosen point.
  void sample(mc::RngStream& rng, Eigen::Ref<Vector> out) const;
  /// Box: tensor lattice with `per_axis` points per nondegenerate axis
  /// (vertices included). Point set: the points themselves.
  Matrix grid(std::size_t per_axis) const;

 private:
  bool is_box_ = true;
  Vector lo_, hi_;
  Matrix pts_;
};

/// X = W^T beta + eps with W uniform on the domain. A box axis with lo == hi
/// acts as a fixed regressor, e.g. an intercept column at 1.
struct BoundedLinearModel {
  Vector beta;
  Domain domain = Domain::box(Vector::Zero(1), Vector::Ones(1));
  double noise_sd = 1.0;
};

/// Additive response contamination B. Two-point: B = b with probability p,
/// else 0. General: any sampler with a known finite mean.
class ResponseContamination {
 public:
  static ResponseContamination two_point(double b, double p);
  static ResponseContamination general(std::function<double(mc::RngStream&)> sampler,
                                       double mean);

  double draw(mc::RngStream& rng) const;
  double mean() const { return mean_; }
  bool is_two_point() const { return two_point_; }
  double magnitude() const { return b_; }
  double propensity() const { return p_; }

 private:
  bool two_point_ = true;
  double b_ = 0.0;
  double p_ = 0.0;
  double mean_ = 0.0;
  std::function<double(mc::RngStream&)> sampler_;
};

struct Dataset {
  Matrix W;  // n x d
  Vector x;  // n
};

/// X_i = W_i^T beta + B_i + eps_i. Rows come in blocks of 4096, block b from
/// stream.derive(b).
Dataset simulate_response_contaminated(const BoundedLinearModel& model,
                                       const ResponseContamination& cont, std::size_t n,
                                       const mc::RngStream& stream);

struct OlsFit {
  Vector beta_hat;
  /// Estimated covariance of beta_hat, s^2 (W^T W)^{-1}.
  Matrix covariance;
  double residual_variance = 0.0;
  std::size_t n = 0;

  double predict(const Vector& w) const { return w.dot(beta_hat); }
  double prediction_se(const Vector& w) const;
};

/// Singular W^T W -> kDegenerateDesign.
OlsFit ols_fit(const Dataset& data);
double ols_predict(const Dataset& data, const Vector& w);

struct ResponseLimit {
  double bias = 0.0;  // E[B], the same for every w
  double loss = 0.0;  // E[B]^2
};

ResponseLimit response_plim(const ResponseContamination& cont);

struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct ResponseCondition {
  double upper_threshold = 0.0;  // upper bound must be >= this
  double lower_threshold = 0.0;  // lower bound must be <= this
  bool holds = false;
};

/// upper >= max w^T beta - |E[B]| and lower <= min w^T beta + |E[B]|. An
/// absent lower bound is -inf. For two-point B, |E[B]| = p b.
ResponseCondition response_guardrail_condition(const BoundedLinearModel& model,
                                               const ResponseContamination& cont, double upper,
                                               std::optional<double> lower = std::nullopt);

struct LossRow {
  Vector point;
  double loss_algorithmic = 0.0;
  double loss_safeguarded = 0.0;
};

/// Pointwise squared loss against w^T beta. With `fit` the prediction is the
/// fitted one; without it the large-sample limit w^T beta + E[B].
std::vector<LossRow> mse_compare_response(const BoundedLinearModel& model,
                                          const ResponseContamination& cont, const Bounds& bounds,
                                          const Matrix& grid, const OlsFit* fit = nullptr);

/// W = Z + U. Z and U are independent. The training law of U generates the
/// data the model is fitted on; the deployment law U_0 (defaults to the
/// training law) contaminates the covariate at prediction time.
struct CovariateContamination {
  std::size_t dim = 1;
  mc::VectorSampler z_sampler;
  mc::VectorSampler u_sampler;
  mc::VectorSampler u_deploy_sampler;  // empty -> u_sampler
  Matrix sigma1;  // E[Z Z^T]
  Matrix sigma2;  // E[U U^T] of the training law
  Domain z_domain = Domain::box(Vector::Zero(1), Vector::Ones(1));

  const mc::VectorSampler& deploy_sampler() const {
    return u_deploy_sampler ? u_deploy_sampler : u_sampler;
  }
};

/// Sample second-moment matrices of Z and U.
std::pair<Matrix, Matrix> sample_second_moments(const CovariateContamination& cont,
                                                std::size_t n, const mc::RngStream& stream);

/// Sigma1 positive definite and Sigma2 positive semi-definite, judged on the
/// sample matrices with relative tolerance `tol`. Violations -> kHypothesisViolated.
void check_moment_assumptions(const CovariateContamination& cont, std::size_t n,
                              const mc::RngStream& stream, double tol = 1e-8);

struct CovariateLimit {
  Vector beta;
  bool consistent = false;  // ||Sigma2 beta|| <= tol
};

/// (I - (Sigma1 + Sigma2)^{-1} Sigma2) beta. Singular sum -> kDegenerateDesign.
CovariateLimit covariate_plim(const Matrix& sigma1, const Matrix& sigma2, const Vector& beta,
                              double tol = 1e-10);
CovariateLimit covariate_plim(const CovariateContamination& cont, const Vector& beta,
                              double tol = 1e-10);

/// X_i = Z_i^T beta + eps_i observed with W_i = Z_i + U_i (training law).
Dataset simulate_covariate_contaminated(const CovariateContamination& cont, const Vector& beta,
                                        double noise_sd, std::size_t n,
                                        const mc::RngStream& stream);

struct CovariateCondition {
  double slack = 0.0;            // sqrt(p / (1 - p)) b
  double lower_threshold = 0.0;  // min z^T beta + slack
  double upper_threshold = 0.0;  // max z^T beta - slack
  double tail_upper = 0.0;       // empirical P(U0^T beta >= b)
  double tail_lower = 0.0;       // empirical P(U0^T beta <= -b)
  bool holds = false;
};

/// Two-sided bound condition under the errors-in-variables model. Requires
/// p in (0, 0.5), b > 0, Sigma2 beta = 0 and (b, p) certified on the
/// deployment law: both empirical tail frequencies over `certify_n` draws are
/// >= p minus a one-sided 99% binomial slack. Otherwise kHypothesisViolated.
CovariateCondition covariate_guardrail_condition(const CovariateContamination& cont,
                                                 const Vector& beta, const Bounds& bounds,
                                                 double b, double p, const mc::RngStream& stream,
                                                 std::size_t certify_n = 100000);

struct ExpectedLossComparison {
  mc::EstimateWithCI algorithmic;
  mc::EstimateWithCI safeguarded;
  /// safeguarded - algorithmic (negative = improvement).
  mc::EstimateWithCI difference;
};

/// E[(x - Z^T beta)^2] for x = W^T beta_hat and its clipped version, with
/// W = Z + U0 at deployment. Monte Carlo over (Z, U0).
ExpectedLossComparison mse_compare_covariate(const CovariateContamination& cont,
                                             const Vector& beta, const Vector& beta_hat,
                                             const Bounds& bounds, std::size_t n,
                                             const mc::RngStream& stream,
                                             const mc::McOptions& options = {});

}  // namespace guardrail::contamination
