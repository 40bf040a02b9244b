#pragma once

// Cumulative prospect theory values of finite lotteries, exact or estimated
// from sorted samples.

#include <span>
#include <string>
#include <vector>

namespace cptmarl {

enum class WeightingFamily { TverskyKahneman, Prelec };

enum class Branch { Gain, Loss };

std::string to_string(WeightingFamily family);
WeightingFamily weighting_family_from_string(const std::string& name);

/// Subjective risk profile of one agent.
///
/// `alpha`/`beta` are the gain/loss utility exponents, `lambda` the loss
/// aversion multiplier, `gamma_w`/`delta_w` the gain/loss weighting
/// curvatures and `x0` the reference point separating gains from losses.
struct CptParams {
  double alpha = 1.0;
  double beta = 1.0;
  double lambda = 1.0;
  double gamma_w = 1.0;
  double delta_w = 1.0;
  double x0 = 0.0;
  WeightingFamily family = WeightingFamily::TverskyKahneman;

  static CptParams risk_neutral();
  /// alpha = beta = 0.65, gamma_w = delta_w = 0.69 with the given loss aversion.
  static CptParams conventional(double lambda = 2.6);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool is_identity_weighting() const { return gamma_w == 1.0 && delta_w == 1.0; }

  friend bool operator==(const CptParams&, const CptParams&) = default;
};

struct Outcome {
  double value = 0.0;
  double probability = 0.0;
};

/// Finite lottery; probabilities are non-negative and sum to one within 1e-12.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<Outcome> outcomes);

  std::span<const Outcome> outcomes() const { return outcomes_; }
  std::size_t size() const { return outcomes_.size(); }

 private:
  std::vector<Outcome> outcomes_;
};

/// Probability weighting function w(p) of the given family and curvature.
/// Probabilities within 1e-12 outside [0, 1] are clamped; anything further
/// out raises std::domain_error.
double weight(double p, double curvature, WeightingFamily family);
double weight(double p, const CptParams& params, Branch branch);

/// dw/dp. Returns +inf where the derivative is unbounded (p = 0 or 1 with
/// curvature below one).
double weight_derivative(double p, double curvature, WeightingFamily family);

/// Signed utility relative to x0: (x - x0)^alpha for gains,
/// -lambda * (x0 - x)^beta for losses.
double utility(double x, const CptParams& params);

/// du/dx, capped at `cap` where the power law diverges near the reference point.
double utility_derivative(double x, const CptParams& params, double cap = 1e3);

struct WeightedOutcome {
  double value = 0.0;
  double probability = 0.0;
  double weight = 0.0;
};

/// Rank-dependent decision weights, sorted ascending by value.
std::vector<WeightedOutcome> decision_weights(const DiscreteDistribution& dist,
                                              const CptParams& params);

/// Decision weight of every outcome, aligned with the input order.
/// Outcomes need not be validated; zero-probability entries get weight 0.
std::vector<double> rank_weights(std::span<const Outcome> outcomes, const CptParams& params);

double cpt_exact(const DiscreteDistribution& dist, const CptParams& params);

/// Same as cpt_exact without re-validating the distribution.
double cpt_value(std::span<const Outcome> outcomes, const CptParams& params);

/// Sorted-sample CPT estimator over i.i.d. draws of a random variable.
/// Throws std::invalid_argument on an empty sample.
double cpt_estimate(std::span<const double> samples, const CptParams& params);

/// How the derivative of the rank-dependent weights with respect to an
/// outcome probability is formed.
enum class WeightDerivative {
  /// Exact partial derivative of the CPT value with respect to each outcome
  /// probability, propagated through every cumulative sum it enters.
  ChainRule,
  /// w' used as a weighting function of its own and differenced over the
  /// same cumulative sums as the decision weights. Evaluated with
  /// probabilities clamped into [1e-9, 1 - 1e-9] where w' diverges.
  RankDifferenced,
};

std::string to_string(WeightDerivative mode);
WeightDerivative weight_derivative_from_string(const std::string& name);

/// Sensitivity of the CPT value to each outcome probability, aligned with the
/// input order. Under ChainRule the entries are exact partial derivatives up
/// to a common additive constant, which cancels for any probability
/// perturbation that preserves total mass. Utilities are already folded in.
std::vector<double> probability_sensitivity(std::span<const Outcome> outcomes,
                                            const CptParams& params,
                                            WeightDerivative mode = WeightDerivative::ChainRule);

}  // namespace cptmarl
