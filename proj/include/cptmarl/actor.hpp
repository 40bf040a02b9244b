#pragma once

// Nested CPT policy gradient of the start-state value with respect to one
// agent's softmax parameters.

#include <Eigen/Dense>

#include "cptmarl/critic.hpp"

namespace cptmarl {

struct GradientOptions {
  WeightDerivative weight_derivative = WeightDerivative::ChainRule;
  /// Cap on u'(x) near the reference point, where the power-law utility
  /// derivative diverges.
  double utility_derivative_cap = 1e3;
  /// Treat states with no aggregate observations as contributing nothing
  /// (zero kernel row, zero local gradient) instead of failing.
  bool skip_unobserved_states = false;

  friend bool operator==(const GradientOptions&, const GradientOptions&) = default;
};

/// DPr(s, s') = sum over outcomes of s landing in s' of
/// decision_weight * discount * u'(R + discount V(s')). Non-negative.
Eigen::MatrixXd subjective_transition(const GameSpec& spec, const PolicyTable& policy,
                                      const SigmaDistribution& sigma,
                                      const Eigen::VectorXd& values, const CptParams& params,
                                      const GradientOptions& options = {},
                                      const RewardFn& reward = {});

struct SubjectiveVisitation {
  Eigen::VectorXd eta;  // subjective time spent in each state
  Eigen::VectorXd mu;   // eta normalized to a distribution
  double spectral_radius = 0.0;
};

/// Solves (I - DPr^T) eta = p0 densely. Throws DiagnosticError when the
/// spectral radius of DPr is not below one or the solution is not a
/// non-negative measure.
SubjectiveVisitation solve_eta(const Eigen::VectorXd& p0, const Eigen::MatrixXd& dpr);
SubjectiveVisitation solve_eta(const GameSpec& spec, const Eigen::MatrixXd& dpr);

struct PolicyGradient {
  /// eta-weighted gradient of p0 . V, states x actions. The normalized
  /// (mu-weighted) form is grad / eta_mass.
  Eigen::MatrixXd grad;
  double eta_mass = 0.0;
  SubjectiveVisitation visitation;
};

/// Gradient of the agent's start-state CPT value with respect to theta,
/// holding the critic values and the aggregate distribution fixed.
PolicyGradient grad_value(const PolicyTable& policy, const Eigen::VectorXd& values,
                          const GameSpec& spec, const SigmaDistribution& sigma,
                          const CptParams& params, const GradientOptions& options = {},
                          const RewardFn& reward = {});

/// theta + lr * grad.
Eigen::MatrixXd actor_step(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, double lr);

}  // namespace cptmarl
