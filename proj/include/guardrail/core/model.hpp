#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "guardrail/core/covariate.hpp"
#include "guardrail/core/distribution.hpp"
#include "guardrail/mc/rng.hpp"

namespace guardrail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One joint realization of (X_a, lower bound, upper bound, W).
struct Draw {
  double xa = 0.0;
  double lower = -kInf;
  double upper = kInf;
  Covariate w;
};

/// A lower or upper bound: constant, random (independent of X_a given W), or
/// a function of the covariate.
class BoundGenerator {
 public:
  using Random = std::function<double(mc::RngStream&, const Covariate&)>;

  static BoundGenerator constant(double value);
  /// Random bound with a known law. The law enables the quadrature path.
  static BoundGenerator distributed(Density1D law);
  static BoundGenerator of_covariate(std::function<double(const Covariate&)> fn);
  static BoundGenerator random(Random fn);

  double draw(mc::RngStream& rng, const Covariate& w) const;
  std::optional<double> constant_value() const { return constant_; }
  const Density1D* law() const { return law_ ? &*law_ : nullptr; }

 private:
  std::optional<double> constant_;
  std::optional<Density1D> law_;
  Random fn_;
};

struct GuardrailSpec {
  std::optional<BoundGenerator> lower;
  std::optional<BoundGenerator> upper;
};

/// Densities for exact evaluation. Either both bounds are fixed, or one of
/// them is random with a law independent of X_a, or one of them is random
/// with a joint density f(x_a, x_h).
struct DensityModel {
  enum class RandomBound { kNone, kLower, kUpper };

  Density1D xa;
  double fixed_lower = -kInf;
  double fixed_upper = kInf;
  RandomBound random = RandomBound::kNone;
  Density1D bound;  // law of the random bound when `joint` is empty
  /// f(x_a, x_h); the marginal supports come from `xa` and `bound`.
  std::function<double(double, double)> joint;
};

struct JointDecisionModel {
  std::function<void(mc::RngStream&, Draw&)> sampler;
  std::optional<DensityModel> density;
  /// Asserts X_a is independent of the bounds (needed by the reduced conditions).
  bool independent = false;
  bool has_lower = false;
  bool has_upper = false;
};

/// X_a from `algorithm(rng, w)`, W from `covariates` (may be empty), bounds from
/// `guardrail`. Draw order per sample: W, X_a, lower, upper. Constant bounds
/// consume no randomness, so models that differ only in a constant bound share
/// every random number on a common stream.
JointDecisionModel compose_model(
    std::function<double(mc::RngStream&, const Covariate&)> algorithm,
    const GuardrailSpec& guardrail,
    std::function<Covariate(mc::RngStream&)> covariates = {});

/// X_a with law `xa_law` independent of the bounds. Bounds that are constant or
/// `distributed` give a model with densities (at most one random bound).
JointDecisionModel independent_model(const Density1D& xa_law, const GuardrailSpec& guardrail);

/// (X_a, X_h) bivariate normal, X_h the upper bound, optional fixed lower bound.
JointDecisionModel bivariate_normal_upper(double mean_a, double sd_a, double mean_h,
                                          double sd_h, double rho,
                                          double fixed_lower = -kInf);

}  // namespace guardrail
