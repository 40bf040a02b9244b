#pragma once

// Tabular softmax policies and the empirical distribution of neighbor
// aggregates each agent builds from what it observes.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cptmarl/namg.hpp"

namespace cptmarl {

/// Softmax policy over per-(state, action) preferences theta.
struct PolicyTable {
  int agent = 0;
  Eigen::MatrixXd theta;  // states x actions

  static PolicyTable uniform(int agent, int n_states, int n_actions);

  int n_states() const { return static_cast<int>(theta.rows()); }
  int n_actions() const { return static_cast<int>(theta.cols()); }

  Eigen::VectorXd policy(int state) const;
  /// Probabilities for every state, states x actions.
  Eigen::MatrixXd probabilities() const;

  int sample(int state, Rng& rng) const;
};

/// d pi(a | s) / d theta[s, .] = pi(a | s) (e_a - pi(. | s)). Gradients with
/// respect to other states' rows are zero and not returned.
Eigen::VectorXd grad_pi(const PolicyTable& table, int state, int action);

/// Empirical P(sigma | s) for one agent, with the neighbor action profiles
/// behind each aggregate so that the joint-action transition kernel can be
/// conditioned on (own action, sigma).
class SigmaDistribution {
 public:
  struct Atom {
    double aggregate = 0.0;
    double probability = 0.0;
  };

  SigmaDistribution() = default;
  SigmaDistribution(int agent, const GameSpec& spec);

  /// Exact product distribution induced by the other agents' policies.
  static SigmaDistribution exact(int agent, std::span<const PolicyTable> policies,
                                 const GameSpec& spec);

  int agent() const { return agent_; }
  int n_states() const { return static_cast<int>(per_state_.size()); }

  /// Records one observation of the joint action at `state` with the given
  /// weight (1 for a counted observation). The agent's own entry is ignored.
  void observe(int state, std::span<const int> joint_action, double weight = 1.0);

  double count(int state) const;
  bool empty(int state) const { return count(state) <= 0.0; }

  /// Atoms ascending by aggregate; probabilities sum to one. Empty if the
  /// state was never observed.
  std::vector<Atom> support(int state) const;

  /// P(s' | s, own action, sigma) for the `atom`-th entry of support(state),
  /// mixing the kernel over the neighbor profiles recorded with that aggregate.
  std::vector<double> conditional_next(int state, int own_action, std::size_t atom,
                                       const GameSpec& spec) const;

  /// A neighbor profile (joint code without the agent's own action) drawn in
  /// proportion to its recorded weight within the atom.
  std::size_t sample_profile(int state, std::size_t atom, Rng& rng) const;

 private:
  struct Bin {
    double aggregate = 0.0;
    double weight = 0.0;
    std::map<std::size_t, double> profiles;
  };

  static std::int64_t key_of(double aggregate);

  int agent_ = 0;
  JointActionCodec codec_;
  std::vector<double> neighbor_weights_;
  std::vector<std::map<std::int64_t, Bin>> per_state_;
  std::vector<double> totals_;
};

/// One-step update of the empirical aggregate distribution from an observed
/// joint action.
void update_sigma_dist(SigmaDistribution& dist, int state, std::span<const int> joint_action);

}  // namespace cptmarl
