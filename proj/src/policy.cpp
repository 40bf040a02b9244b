#include "cptmarl/policy.hpp"

#include <cmath>
#include <iterator>
#include <stdexcept>

namespace cptmarl {

PolicyTable PolicyTable::uniform(int agent, int n_states, int n_actions) {
  return {agent, Eigen::MatrixXd::Zero(n_states, n_actions)};
}

Eigen::VectorXd PolicyTable::policy(int state) const {
  const Eigen::VectorXd row = theta.row(state).transpose();
  const Eigen::VectorXd e = (row.array() - row.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::MatrixXd PolicyTable::probabilities() const {
  Eigen::MatrixXd p(theta.rows(), theta.cols());
  for (int s = 0; s < n_states(); ++s) p.row(s) = policy(s).transpose();
  return p;
}

int PolicyTable::sample(int state, Rng& rng) const {
  const Eigen::VectorXd p = policy(state);
  return static_cast<int>(sample_index(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), rng));
}

Eigen::VectorXd grad_pi(const PolicyTable& table, int state, int action) {
  const Eigen::VectorXd p = table.policy(state);
  Eigen::VectorXd g = -p(action) * p;
  g(action) += p(action);
  return g;
}

SigmaDistribution::SigmaDistribution(int agent, const GameSpec& spec)
    : agent_(agent),
      codec_(spec.codec()),
      neighbor_weights_(static_cast<std::size_t>(spec.n_agents)),
      per_state_(static_cast<std::size_t>(spec.n_states)),
      totals_(static_cast<std::size_t>(spec.n_states), 0.0) {
  if (agent < 0 || agent >= spec.n_agents) throw std::out_of_range("agent id out of range");
  for (int j = 0; j < spec.n_agents; ++j) {
    neighbor_weights_[static_cast<std::size_t>(j)] = spec.graph_weights(agent, j);
  }
}

SigmaDistribution SigmaDistribution::exact(int agent, std::span<const PolicyTable> policies,
                                           const GameSpec& spec) {
  if (static_cast<int>(policies.size()) != spec.n_agents) {
    throw std::invalid_argument("need one policy per agent");
  }
  SigmaDistribution dist(agent, spec);
  const auto codec = spec.codec();
  std::vector<int> joint(static_cast<std::size_t>(spec.n_agents));
  for (int s = 0; s < spec.n_states; ++s) {
    std::vector<Eigen::VectorXd> pis;
    for (const auto& p : policies) pis.push_back(p.policy(s));
    // Only profiles with the agent's own action at zero, so each is visited once.
    for (std::size_t code = 0; code < codec.size(); ++code) {
      if (codec.action_of(code, agent) != 0) continue;
      codec.decode(code, joint);
      double w = 1.0;
      for (int j = 0; j < spec.n_agents; ++j) {
        if (j != agent) w *= pis[static_cast<std::size_t>(j)](joint[static_cast<std::size_t>(j)]);
      }
      if (w > 0.0) dist.observe(s, joint, w);
    }
  }
  return dist;
}

std::int64_t SigmaDistribution::key_of(double aggregate) {
  return std::llround(aggregate * 1e9);
}

void SigmaDistribution::observe(int state, std::span<const int> joint_action, double weight) {
  if (state < 0 || state >= n_states()) throw std::out_of_range("state id out of range");
  double sigma = 0.0;
  for (std::size_t j = 0; j < neighbor_weights_.size(); ++j) {
    if (static_cast<int>(j) == agent_) continue;
    sigma += neighbor_weights_[j] * joint_action[j];
  }
  const std::size_t profile = codec_.without(codec_.encode(joint_action), agent_);
  auto& bins = per_state_[static_cast<std::size_t>(state)];
  auto [it, inserted] = bins.try_emplace(key_of(sigma));
  if (inserted) it->second.aggregate = sigma;
  it->second.weight += weight;
  it->second.profiles[profile] += weight;
  totals_[static_cast<std::size_t>(state)] += weight;
}

double SigmaDistribution::count(int state) const {
  return totals_.at(static_cast<std::size_t>(state));
}

std::vector<SigmaDistribution::Atom> SigmaDistribution::support(int state) const {
  std::vector<Atom> atoms;
  const double total = count(state);
  if (total <= 0.0) return atoms;
  const auto& bins = per_state_[static_cast<std::size_t>(state)];
  atoms.reserve(bins.size());
  for (const auto& [key, bin] : bins) atoms.push_back({bin.aggregate, bin.weight / total});
  return atoms;
}

std::vector<double> SigmaDistribution::conditional_next(int state, int own_action,
                                                        std::size_t atom,
                                                        const GameSpec& spec) const {
  const auto& bins = per_state_.at(static_cast<std::size_t>(state));
  if (atom >= bins.size()) throw std::out_of_range("aggregate atom out of range");
  const Bin& bin = std::next(bins.begin(), static_cast<long>(atom))->second;
  std::vector<double> next(static_cast<std::size_t>(spec.n_states), 0.0);
  const std::size_t own = static_cast<std::size_t>(own_action) * codec_.stride(agent_);
  for (const auto& [profile, w] : bin.profiles) {
    const auto row = spec.transition_row(state, profile + own);
    const double share = w / bin.weight;
    for (std::size_t k = 0; k < next.size(); ++k) next[k] += share * row[k];
  }
  return next;
}

std::size_t SigmaDistribution::sample_profile(int state, std::size_t atom, Rng& rng) const {
  const auto& bins = per_state_.at(static_cast<std::size_t>(state));
  if (atom >= bins.size()) throw std::out_of_range("aggregate atom out of range");
  const Bin& bin = std::next(bins.begin(), static_cast<long>(atom))->second;
  std::vector<double> probs;
  std::vector<std::size_t> codes;
  for (const auto& [profile, w] : bin.profiles) {
    codes.push_back(profile);
    probs.push_back(w / bin.weight);
  }
  return codes[sample_index(probs, rng)];
}

void update_sigma_dist(SigmaDistribution& dist, int state, std::span<const int> joint_action) {
  dist.observe(state, joint_action, 1.0);
}

}  // namespace cptmarl
