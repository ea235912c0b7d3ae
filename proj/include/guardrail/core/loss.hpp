#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "guardrail/core/covariate.hpp"
#include "guardrail/mc/rng.hpp"

namespace guardrail {

/// Nonnegative quasiconvex loss l(x) or l(x, w) with its minimizer x* or x*(w).
///
/// Plain losses ignore the covariate. A loss built without a minimizer can
/// still be used for benefit estimates but not for condition reports.
class LossSpec {
 public:
  using Plain = std::function<double(double)>;
  using Indexed = std::function<double(double, const Covariate&)>;
  using Minimizer = std::function<double(const Covariate&)>;

  LossSpec(Plain loss, std::optional<double> minimizer, std::string name = "custom");
  LossSpec(Indexed loss, Minimizer minimizer, std::string name = "custom-covariate");

  static LossSpec squared(double xstar = 0.0);
  static LossSpec absolute(double xstar = 0.0);
  static LossSpec power(double exponent, double xstar = 0.0);
  /// under * (x* - x)_+ + over * (x - x*)_+
  static LossSpec asymmetric_linear(double under, double over, double xstar = 0.0);
  /// (x - w^T beta)^2 with x*(w) = w^T beta.
  static LossSpec squared_linear(std::vector<double> beta);

  double operator()(double x, const Covariate& w = {}) const { return loss_(x, w); }
  bool has_minimizer() const { return static_cast<bool>(minimizer_); }
  /// Throws a configuration error when the loss was built without x*.
  double minimizer(const Covariate& w = {}) const;
  bool covariate_indexed() const { return indexed_; }
  const std::string& name() const { return name_; }

 private:
  Indexed loss_;
  Minimizer minimizer_;
  bool indexed_ = false;
  std::string name_;
};

struct LossValidation {
  std::size_t negative = 0;      // sampled points with l(x) < 0
  std::size_t nonmonotone = 0;   // ordered pairs on one side of x* that break monotonicity
  double minimizer_gap = 0.0;    // l(x*) - min over the dense grid (<= 0 is fine)
  std::size_t triples = 0;

  bool ok(double tolerance = 1e-12) const {
    return negative == 0 && nonmonotone == 0 && minimizer_gap <= tolerance;
  }
};

/// Randomized check of nonnegativity and quasiconvexity on one covariate slice.
/// Points are drawn from x*(w) + spread * N(0, 1); each triple contributes one
/// ordered pair on each side of the minimizer.
LossValidation validate_loss(const LossSpec& loss, const Covariate& w, double spread,
                             mc::RngStream stream, std::size_t triples = 10000);

}  // namespace guardrail
