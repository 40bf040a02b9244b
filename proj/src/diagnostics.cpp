#include "cptmarl/diagnostics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cptmarl {

Eigen::MatrixXd fd_gradient(const PolicyTable& policy, const SigmaDistribution& sigma,
                            const GameSpec& spec, const CptParams& params, double step,
                            double tolerance) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  auto start_value = [&](const PolicyTable& p) {
    const auto fp = solve_fixed_point(p, sigma, spec, params, tolerance, 1000000);
    if (!fp.converged) throw std::runtime_error("fixed point did not converge");
    return spec.initial_dist.dot(fp.values);
  };
  Eigen::MatrixXd out(policy.n_states(), policy.n_actions());
  for (int s = 0; s < policy.n_states(); ++s) {
    for (int a = 0; a < policy.n_actions(); ++a) {
      PolicyTable plus = policy;
      PolicyTable minus = policy;
      plus.theta(s, a) += step;
      minus.theta(s, a) -= step;
      out(s, a) = (start_value(plus) - start_value(minus)) / (2.0 * step);
    }
  }
  return out;
}

GradientCheck gradient_check(const GameSpec& spec, std::span<const PolicyTable> policies, int agent,
                             const CptParams& params, double step) {
  const auto& policy = policies[static_cast<std::size_t>(agent)];
  const auto sigma = SigmaDistribution::exact(agent, policies, spec);
  const auto fp = solve_fixed_point(policy, sigma, spec, params, 1e-13, 1000000);
  GradientCheck out;
  out.analytic = grad_value(policy, fp.values, spec, sigma, params).grad;
  out.numeric = fd_gradient(policy, sigma, spec, params, step);
  const double na = out.analytic.norm();
  const double nn = out.numeric.norm();
  out.cosine = na > 0.0 && nn > 0.0 ? (out.analytic.array() * out.numeric.array()).sum() / (na * nn)
                                    : (na == nn ? 1.0 : 0.0);
  out.relative_error = nn > 0.0 ? (out.analytic - out.numeric).norm() / nn : na;
  return out;
}

EstimatorCheck estimator_consistency(const DiscreteDistribution& dist, const CptParams& params,
                                     int n_samples, int n_seeds, std::uint64_t base_seed) {
  if (n_samples < 1 || n_seeds < 1) throw std::invalid_argument("need at least one sample and seed");
  const auto outcomes = dist.outcomes();
  std::vector<double> probs;
  for (const auto& o : outcomes) probs.push_back(o.probability);
  EstimatorCheck out;
  out.exact = cpt_exact(dist, params);
  out.n_samples = n_samples;
  out.n_seeds = n_seeds;
  std::vector<double> samples(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_seeds; ++k) {
    Rng rng = derive_stream(base_seed, static_cast<std::uint64_t>(k));
    for (auto& x : samples) x = outcomes[sample_index(probs, rng)].value;
    const double est = cpt_estimate(samples, params);
    out.mean_estimate += est / n_seeds;
    out.mean_abs_error += std::abs(est - out.exact) / n_seeds;
  }
  return out;
}

}  // namespace cptmarl
