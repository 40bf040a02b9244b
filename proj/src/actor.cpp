#include "cptmarl/actor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cptmarl/errors.hpp"

namespace cptmarl {

namespace {

// One pass over every state's outcome set producing the distorted kernel and,
// when requested, the local (per-state) policy gradient.
struct LocalTerms {
  Eigen::MatrixXd dpr;
  Eigen::MatrixXd local_grad;
};

LocalTerms local_terms(const GameSpec& spec, const PolicyTable& policy,
                       const SigmaDistribution& sigma, const Eigen::VectorXd& values,
                       const CptParams& params, const GradientOptions& options,
                       const RewardFn& reward, bool with_gradient) {
  LocalTerms out;
  out.dpr = Eigen::MatrixXd::Zero(spec.n_states, spec.n_states);
  if (with_gradient) out.local_grad = Eigen::MatrixXd::Zero(spec.n_states, spec.n_actions);
  for (int s = 0; s < spec.n_states; ++s) {
    if (sigma.empty(s)) {
      if (options.skip_unobserved_states) continue;
      throw InsufficientExploration(s);
    }
    const auto set = enumerate_outcomes(s, policy, sigma, values, spec, reward);
    const auto outcomes = set.outcomes();
    const auto weights = rank_weights(outcomes, params);
    for (std::size_t k = 0; k < set.entries.size(); ++k) {
      const auto& e = set.entries[k];
      out.dpr(s, e.next_state) += weights[k] * spec.discount *
                                  utility_derivative(e.value, params, options.utility_derivative_cap);
    }
    if (!with_gradient) continue;
    // d p_k / d theta[s, b] = p_k (1{a_k = b} - pi(b | s)).
    const auto sens = probability_sensitivity(outcomes, params, options.weight_derivative);
    const Eigen::VectorXd pi = policy.policy(s);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.n_actions);
    double mass = 0.0;
    for (std::size_t k = 0; k < set.entries.size(); ++k) {
      const double w = sens[k] * set.entries[k].probability;
      g(set.entries[k].own_action) += w;
      mass += w;
    }
    g -= mass * pi;
    out.local_grad.row(s) = g.transpose();
  }
  return out;
}

}  // namespace

Eigen::MatrixXd subjective_transition(const GameSpec& spec, const PolicyTable& policy,
                                      const SigmaDistribution& sigma,
                                      const Eigen::VectorXd& values, const CptParams& params,
                                      const GradientOptions& options, const RewardFn& reward) {
  return local_terms(spec, policy, sigma, values, params, options, reward, false).dpr;
}

SubjectiveVisitation solve_eta(const Eigen::VectorXd& p0, const Eigen::MatrixXd& dpr) {
  const auto n = dpr.rows();
  if (dpr.cols() != n || p0.size() != n) throw std::invalid_argument("solve_eta: size mismatch");
  SubjectiveVisitation out;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(dpr, false);
  out.spectral_radius = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(out.spectral_radius < 1.0)) {
    std::ostringstream msg;
    msg << "subjective visitation kernel has spectral radius " << out.spectral_radius
        << " >= 1; the CPT backup is not contracting at these values";
    throw DiagnosticError(msg.str());
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - dpr.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw DiagnosticError("subjective visitation system is singular");
  out.eta = lu.solve(p0);
  const double scale = std::max(1.0, out.eta.cwiseAbs().maxCoeff());
  if (out.eta.minCoeff() < -1e-10 * scale || !out.eta.allFinite()) {
    throw DiagnosticError("subjective visitation solve produced a negative measure");
  }
  out.eta = out.eta.cwiseMax(0.0);
  const double mass = out.eta.sum();
  if (!(mass > 0.0)) throw DiagnosticError("subjective visitation has zero mass");
  out.mu = out.eta / mass;
  return out;
}

SubjectiveVisitation solve_eta(const GameSpec& spec, const Eigen::MatrixXd& dpr) {
  return solve_eta(spec.initial_dist, dpr);
}

PolicyGradient grad_value(const PolicyTable& policy, const Eigen::VectorXd& values,
                          const GameSpec& spec, const SigmaDistribution& sigma,
                          const CptParams& params, const GradientOptions& options,
                          const RewardFn& reward) {
  auto terms = local_terms(spec, policy, sigma, values, params, options, reward, true);
  PolicyGradient out;
  out.visitation = solve_eta(spec, terms.dpr);
  out.eta_mass = out.visitation.eta.sum();
  out.grad = out.visitation.eta.asDiagonal() * terms.local_grad;
  return out;
}

Eigen::MatrixXd actor_step(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("actor learning rate must be non-negative");
  if (theta.rows() != grad.rows() || theta.cols() != grad.cols()) {
    throw std::invalid_argument("actor_step: gradient shape does not match theta");
  }
  return theta + lr * grad;
}

}  // namespace cptmarl
