#include "cptmarl/critic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cptmarl/errors.hpp"

namespace cptmarl {

RewardFn true_reward(const GameSpec& spec, int agent) {
  return [&spec, agent](int state, int own_action, double sigma) {
    return reward(agent, state, own_action, sigma, spec);
  };
}

std::vector<Outcome> OutcomeSet::outcomes() const {
  std::vector<Outcome> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({e.value, e.probability});
  return out;
}

double OutcomeSet::total_probability() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.probability;
  return total;
}

OutcomeSet enumerate_outcomes(int state, const PolicyTable& policy, const SigmaDistribution& sigma,
                              const Eigen::VectorXd& values, const GameSpec& spec,
                              const RewardFn& reward_fn) {
  const auto atoms = sigma.support(state);
  if (atoms.empty()) throw InsufficientExploration(state);
  const RewardFn& r = reward_fn ? reward_fn : true_reward(spec, sigma.agent());
  const Eigen::VectorXd pi = policy.policy(state);

  OutcomeSet set;
  set.state = state;
  set.entries.reserve(static_cast<std::size_t>(spec.n_actions) * atoms.size() *
                      static_cast<std::size_t>(spec.n_states));
  for (int a = 0; a < spec.n_actions; ++a) {
    if (pi(a) <= 0.0) continue;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      const double rew = r(state, a, atoms[k].aggregate);
      const auto next = sigma.conditional_next(state, a, k, spec);
      for (int s1 = 0; s1 < spec.n_states; ++s1) {
        const double p = pi(a) * atoms[k].probability * next[static_cast<std::size_t>(s1)];
        if (p <= 0.0) continue;
        set.entries.push_back({a, k, atoms[k].aggregate, s1, p, rew,
                               rew + spec.discount * values(s1)});
      }
    }
  }
  return set;
}

double td_apply(int state, const PolicyTable& policy, const SigmaDistribution& sigma,
                const Eigen::VectorXd& values, const GameSpec& spec, const CptParams& params,
                const RewardFn& reward_fn) {
  const auto set = enumerate_outcomes(state, policy, sigma, values, spec, reward_fn);
  const auto outcomes = set.outcomes();
  return cpt_value(outcomes, params);
}

Eigen::VectorXd td_sweep(const PolicyTable& policy, const SigmaDistribution& sigma,
                         const Eigen::VectorXd& values, const GameSpec& spec,
                         const CptParams& params, const RewardFn& reward_fn) {
  Eigen::VectorXd out(spec.n_states);
  for (int s = 0; s < spec.n_states; ++s) {
    out(s) = td_apply(s, policy, sigma, values, spec, params, reward_fn);
  }
  return out;
}

FixedPointResult solve_fixed_point(const PolicyTable& policy, const SigmaDistribution& sigma,
                                   const GameSpec& spec, const CptParams& params,
                                   double tolerance, int max_sweeps, const RewardFn& reward_fn) {
  FixedPointResult result;
  result.values = Eigen::VectorXd::Zero(spec.n_states);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Eigen::VectorXd next = td_sweep(policy, sigma, result.values, spec, params, reward_fn);
    result.residual = (next - result.values).cwiseAbs().maxCoeff();
    result.sweeps = sweep + 1;
    if (result.residual <= tolerance) {
      result.converged = true;
      break;
    }
    result.values = std::move(next);
  }
  return result;
}

ModelSimulator::ModelSimulator(const GameSpec& spec, int agent, std::vector<PolicyTable> policies)
    : spec_(spec), agent_(agent), policies_(std::move(policies)) {
  if (static_cast<int>(policies_.size()) != spec.n_agents) {
    throw std::invalid_argument("need one policy per agent");
  }
}

NeighborDraw ModelSimulator::draw_neighbors(int state, int /*draw*/, Rng& rng) {
  std::vector<int> joint(static_cast<std::size_t>(spec_.n_agents), 0);
  for (int j = 0; j < spec_.n_agents; ++j) {
    if (j != agent_) joint[static_cast<std::size_t>(j)] = policies_[static_cast<std::size_t>(j)].sample(state, rng);
  }
  return {spec_.codec().encode(joint), aggregate(agent_, joint, spec_)};
}

Transition ModelSimulator::simulate(int state, int own_action, const NeighborDraw& neighbors,
                                    Rng& rng) {
  const auto codec = spec_.codec();
  const std::size_t joint = neighbors.profile + static_cast<std::size_t>(own_action) * codec.stride(agent_);
  const int next = static_cast<int>(sample_index(spec_.transition_row(state, joint), rng));
  return {reward(agent_, state, own_action, neighbors.aggregate, spec_), next};
}

double sampled_value_estimate(int state, const PolicyTable& policy, ExperienceStore& store,
                              Simulator& simulator, const Eigen::VectorXd& values,
                              const CptParams& params, int n_max, Rng& rng,
                              std::size_t store_threshold, EstimateStats* stats) {
  if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
  const double discount = simulator.discount();
  std::vector<double> samples(static_cast<std::size_t>(n_max));
  for (int i = 0; i < n_max; ++i) {
    const int action = policy.sample(state, rng);
    const NeighborDraw nb = simulator.draw_neighbors(state, i, rng);
    const auto key = ExperienceStore::key(state, action, nb.aggregate);
    Transition t;
    if (store.count(key) >= store_threshold) {
      t = store.sample(key, rng);
      if (stats) ++stats->from_store;
    } else {
      t = simulator.simulate(state, action, nb, rng);
      store.push(key, t);
      if (stats) ++stats->from_simulator;
    }
    samples[static_cast<std::size_t>(i)] = t.reward + discount * values(t.next_state);
  }
  return cpt_estimate(samples, params);
}

CriticStep critic_step(Eigen::VectorXd& values, int state, double estimate, double lr) {
  if (!(lr > 0.0 && lr <= 1.0)) throw std::invalid_argument("critic learning rate must lie in (0, 1]");
  const double delta = estimate - values(state);
  values(state) += lr * delta;
  return {delta};
}

double contraction_ratio(const PolicyTable& policy, const SigmaDistribution& sigma,
                         const GameSpec& spec, const CptParams& params,
                         const Eigen::VectorXd& v, const Eigen::VectorXd& v_bar) {
  const double denom = (v - v_bar).cwiseAbs().maxCoeff();
  if (denom == 0.0) return 0.0;
  const Eigen::VectorXd tv = td_sweep(policy, sigma, v, spec, params);
  const Eigen::VectorXd tv_bar = td_sweep(policy, sigma, v_bar, spec, params);
  return (tv - tv_bar).cwiseAbs().maxCoeff() / denom;
}

ContractionReport check_contraction(const GameSpec& spec, std::span<const PolicyTable> policies,
                                    std::span<const CptParams> params, int n_pairs, Rng& rng) {
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be at least 1");
  if (static_cast<int>(params.size()) != spec.n_agents) {
    throw std::invalid_argument("need one CPT parameter set per agent");
  }
  std::vector<SigmaDistribution> sigmas;
  for (int i = 0; i < spec.n_agents; ++i) sigmas.push_back(SigmaDistribution::exact(i, policies, spec));

  const double bound = spec.r_max / (1.0 - spec.discount);
  std::uniform_real_distribution<double> draw(-bound, bound);
  ContractionReport report;
  for (int k = 0; k < n_pairs; ++k) {
    Eigen::VectorXd v(spec.n_states);
    Eigen::VectorXd v_bar(spec.n_states);
    for (int s = 0; s < spec.n_states; ++s) v(s) = draw(rng);
    for (int s = 0; s < spec.n_states; ++s) v_bar(s) = draw(rng);
    ++report.pairs;
    if (v == v_bar) {
      ++report.skipped;
      report.ratios.push_back(0.0);
      continue;
    }
    double worst = 0.0;
    for (int i = 0; i < spec.n_agents; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      worst = std::max(worst, contraction_ratio(policies[ui], sigmas[ui], spec, params[ui], v, v_bar));
    }
    report.ratios.push_back(worst);
    report.max_ratio = std::max(report.max_ratio, worst);
  }
  return report;
}

}  // namespace cptmarl
