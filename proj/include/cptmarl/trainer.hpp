#pragma once

// Distributed nested CPT actor-critic. Agents act in lock-step on one shared
// environment; each keeps its own experience store.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cptmarl/actor.hpp"

namespace cptmarl {

/// alpha_cr(t) = cr_scale / (1 + t)^cr_exponent, alpha_ac(t) likewise.
/// Exponents lie in (0.5, 1] and the actor decays strictly faster.
struct LearningSchedule {
  double cr_scale = 0.5;
  double cr_exponent = 0.6;
  double ac_scale = 0.05;
  double ac_exponent = 0.9;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const LearningSchedule&, const LearningSchedule&) = default;
};

struct LearningRates {
  double critic = 0.0;
  double actor = 0.0;
};

LearningRates lr(const LearningSchedule& schedule, std::int64_t t);

/// What train() does when an agent's subjective visitation kernel is not a
/// contraction (no finite eta) at some iteration.
enum class VisitationFailure { SkipActorStep, Abort };

std::string to_string(VisitationFailure v);
VisitationFailure visitation_failure_from_string(const std::string& s);

struct TrainerConfig {
  LearningSchedule schedule;
  int n_iters = 10000;
  int n_max = 64;
  /// Minimum samples under a key before the store replaces the simulator.
  int store_threshold = 32;
  int workers = 1;
  GradientOptions gradient;
  /// Use the environment's reward function in the gradient instead of
  /// per-key store means.
  bool true_reward_model = false;
  /// Stop once every agent's gradient norm stays below grad_tolerance for
  /// `patience` consecutive iterations.
  double grad_tolerance = 1e-4;
  int patience = 100;
  VisitationFailure on_visitation_failure = VisitationFailure::SkipActorStep;

  void validate() const;

  friend bool operator==(const TrainerConfig&, const TrainerConfig&) = default;
};

struct AgentIterationMetrics {
  double td_error = 0.0;
  double grad_norm = 0.0;
  bool actor_skipped = false;
  Eigen::VectorXd values;  // snapshot after the critic step
};

struct IterationMetrics {
  int iteration = 0;
  int state = 0;
  int next_state = 0;
  std::vector<AgentIterationMetrics> agents;
};

struct TrainingResult {
  std::vector<PolicyTable> policies;
  std::vector<ValueTable> values;
  std::vector<IterationMetrics> metrics;  // one entry per iteration run
  std::vector<std::size_t> store_sizes;
  /// Per agent, iterations whose actor step was skipped because eta had no
  /// finite solution.
  std::vector<int> skipped_actor_steps;
  int iterations = 0;
  bool converged = false;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
};

TrainingResult train(const GameSpec& spec, const std::vector<CptParams>& agents,
                     const TrainerConfig& config, std::uint64_t seed);

/// Loss-aversion assignment for one experiment scenario.
struct Scenario {
  int id = 0;
  std::string name;
  std::vector<CptParams> agents;
};

/// 1: all risk-neutral; 2: all lambda = 2.6; 3: only agent 0 with lambda = 2.6;
/// 4: agent 0 with lambda = 3.2, the others 2.6. Risk-sensitive agents use the
/// conventional curvatures (alpha = beta = 0.65, gamma_w = delta_w = 0.69).
std::vector<Scenario> loss_aversion_scenarios(int n_agents);

struct ScenarioRunSettings {
  ExperimentOverrides environment;
  TrainerConfig trainer;
  std::uint64_t base_seed = 0;
  int n_runs = 8;
  /// Parallel training runs; each run itself trains single-threaded.
  int workers = 1;
};

struct ScenarioSummary {
  std::vector<Scenario> scenarios;
  int n_runs = 0;
  int n_agents = 0;
  int n_actions = 0;
  /// [scenario][run] -> agents x actions, each entry the state-averaged
  /// converged probability of the action.
  std::vector<std::vector<Eigen::MatrixXd>> per_run;

  Eigen::MatrixXd mean(std::size_t scenario) const;
  Eigen::MatrixXd stddev(std::size_t scenario) const;
};

/// Trains every scenario on the environments generated from seeds
/// base_seed, ..., base_seed + n_runs - 1.
ScenarioSummary run_scenarios(const ScenarioRunSettings& settings);

}  // namespace cptmarl
