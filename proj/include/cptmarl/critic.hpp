#pragma once

// Nested CPT TD(0) critic. The exact backup enumerates one-step outcomes;
// training uses the sampled estimate instead.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cptmarl/cpt_measure.hpp"
#include "cptmarl/experience_store.hpp"
#include "cptmarl/namg.hpp"
#include "cptmarl/policy.hpp"

namespace cptmarl {

struct ValueTable {
  int agent = 0;
  Eigen::VectorXd values;

  static ValueTable zeros(int agent, int n_states) {
    return {agent, Eigen::VectorXd::Zero(n_states)};
  }
};

/// R(s, own action, aggregate) as known to the agent.
using RewardFn = std::function<double(int state, int own_action, double aggregate)>;

/// The environment's reward for `agent`.
RewardFn true_reward(const GameSpec& spec, int agent);

struct OutcomeEntry {
  int own_action = 0;
  std::size_t atom = 0;  // index into SigmaDistribution::support(state)
  double aggregate = 0.0;
  int next_state = 0;
  double probability = 0.0;
  double reward = 0.0;
  double value = 0.0;  // reward + discount * V(next_state)
};

/// Joint one-step outcome distribution pi(a | s) x P(sigma | s) x P(s' | s, a, sigma).
struct OutcomeSet {
  int state = 0;
  std::vector<OutcomeEntry> entries;

  std::vector<Outcome> outcomes() const;
  double total_probability() const;
};

/// One entry per (own action, aggregate, next state) with positive probability.
/// Throws InsufficientExploration if the aggregate distribution is empty at `state`.
OutcomeSet enumerate_outcomes(int state, const PolicyTable& policy, const SigmaDistribution& sigma,
                              const Eigen::VectorXd& values, const GameSpec& spec,
                              const RewardFn& reward = {});

/// (T V)(s): the CPT value of the one-step outcome distribution.
double td_apply(int state, const PolicyTable& policy, const SigmaDistribution& sigma,
                const Eigen::VectorXd& values, const GameSpec& spec, const CptParams& params,
                const RewardFn& reward = {});

/// T V at every state.
Eigen::VectorXd td_sweep(const PolicyTable& policy, const SigmaDistribution& sigma,
                         const Eigen::VectorXd& values, const GameSpec& spec,
                         const CptParams& params, const RewardFn& reward = {});

struct FixedPointResult {
  Eigen::VectorXd values;
  double residual = 0.0;  // sup-norm of T V - V at the returned V
  int sweeps = 0;
  bool converged = false;
};

/// Repeated full sweeps V <- T V from V = 0 until the sup-norm residual drops
/// below `tolerance`.
FixedPointResult solve_fixed_point(const PolicyTable& policy, const SigmaDistribution& sigma,
                                   const GameSpec& spec, const CptParams& params,
                                   double tolerance = 1e-10, int max_sweeps = 100000,
                                   const RewardFn& reward = {});

struct NeighborDraw {
  std::size_t profile = 0;  // joint action code with the agent's own action zeroed
  double aggregate = 0.0;
};

/// Source of fresh environment samples for one agent.
class Simulator {
 public:
  virtual ~Simulator() = default;
  /// Neighbor actions for the `draw`-th sample at `state`.
  virtual NeighborDraw draw_neighbors(int state, int draw, Rng& rng) = 0;
  virtual Transition simulate(int state, int own_action, const NeighborDraw& neighbors,
                              Rng& rng) = 0;
  virtual double discount() const = 0;
};

/// Simulator backed by the game model, with neighbors acting on fixed policies.
class ModelSimulator final : public Simulator {
 public:
  ModelSimulator(const GameSpec& spec, int agent, std::vector<PolicyTable> policies);

  NeighborDraw draw_neighbors(int state, int draw, Rng& rng) override;
  Transition simulate(int state, int own_action, const NeighborDraw& neighbors,
                      Rng& rng) override;
  double discount() const override { return spec_.discount; }

 private:
  const GameSpec& spec_;
  int agent_;
  std::vector<PolicyTable> policies_;
};

struct EstimateStats {
  int from_store = 0;
  int from_simulator = 0;
};

/// Sample-based estimate of (T V)(s): n_max draws of r + discount * V(s'),
/// read from the store when the key holds at least `store_threshold` samples
/// and from the simulator otherwise (simulator draws are pushed into the
/// store), then valued with the sorted-sample CPT estimator.
double sampled_value_estimate(int state, const PolicyTable& policy, ExperienceStore& store,
                              Simulator& simulator, const Eigen::VectorXd& values,
                              const CptParams& params, int n_max, Rng& rng,
                              std::size_t store_threshold = 32, EstimateStats* stats = nullptr);

struct CriticStep {
  double td_error = 0.0;
};

/// V(s) += lr * (estimate - V(s)); only entry s changes.
CriticStep critic_step(Eigen::VectorXd& values, int state, double estimate, double lr);

struct ContractionReport {
  double max_ratio = 0.0;
  int pairs = 0;
  int skipped = 0;  // identical pairs, ratio taken as 0
  std::vector<double> ratios;
};

/// For random value pairs drawn uniformly from [-B, B]^S with
/// B = r_max / (1 - discount), reports max over pairs and agents of
/// ||T V - T V'|| / ||V - V'|| in sup-norm, with each agent's aggregate
/// distribution induced exactly by the other agents' policies.
ContractionReport check_contraction(const GameSpec& spec, std::span<const PolicyTable> policies,
                                    std::span<const CptParams> params, int n_pairs, Rng& rng);

/// Contraction ratio for a single value pair and agent.
double contraction_ratio(const PolicyTable& policy, const SigmaDistribution& sigma,
                         const GameSpec& spec, const CptParams& params,
                         const Eigen::VectorXd& v, const Eigen::VectorXd& v_bar);

}  // namespace cptmarl
