#pragma once

// Network aggregative Markov games and the random four-agent experiment.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cptmarl/random.hpp"

namespace cptmarl {

/// Mixed-radix encoding of joint actions; agent i has stride n_actions^i.
class JointActionCodec {
 public:
  JointActionCodec() = default;
  JointActionCodec(int n_agents, int n_actions);

  std::size_t size() const { return size_; }
  std::size_t stride(int agent) const { return strides_[static_cast<std::size_t>(agent)]; }
  std::size_t encode(std::span<const int> joint) const;
  void decode(std::size_t code, std::span<int> joint) const;
  std::vector<int> decode(std::size_t code) const;
  int action_of(std::size_t code, int agent) const;
  /// Code with `agent`'s action replaced by zero.
  std::size_t without(std::size_t code, int agent) const;

 private:
  int n_agents_ = 0;
  int n_actions_ = 0;
  std::size_t size_ = 0;
  std::vector<std::size_t> strides_;
};

/// Per-agent reward coefficients: R_i(s, a, sigma) = r_self(i, s) + sigma * r_com(i, s) * a.
struct RewardModel {
  Eigen::MatrixXd r_self;  // agents x states
  Eigen::MatrixXd r_com;   // agents x states
  /// Optional agents x (states * actions) table replacing r_self when non-empty,
  /// indexed [agent](state, action).
  std::vector<Eigen::MatrixXd> r_self_by_action;

  bool self_reward_by_action() const { return !r_self_by_action.empty(); }
};

struct GameSpec {
  int n_agents = 0;
  int n_states = 0;
  int n_actions = 0;
  /// Row i holds the weights agent i places on every other agent; zero diagonal.
  Eigen::MatrixXd graph_weights;
  /// P(s' | s, joint) flattened as [(s * n_joint + joint) * n_states + s'].
  std::vector<double> transition;
  RewardModel reward;
  double discount = 0.0;
  Eigen::VectorXd initial_dist;
  double r_max = 0.0;

  JointActionCodec codec() const { return {n_agents, n_actions}; }
  std::size_t n_joint() const;
  std::span<const double> transition_row(int state, std::size_t joint) const;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  friend bool operator==(const GameSpec& a, const GameSpec& b);
};

struct Observation {
  int state = 0;
  int own_action = 0;
  double aggregate = 0.0;
  double reward = 0.0;
  int next_state = 0;
};

struct StepResult {
  int next_state = 0;
  std::vector<Observation> per_agent;
};

/// Graph-weighted sum of the other agents' actions as seen by `agent`.
double aggregate(int agent, std::span<const int> joint_action, const GameSpec& spec);

/// Deterministic reward, clamped into [-r_max, r_max].
double reward(int agent, int state, int own_action, double aggregate, const GameSpec& spec);

StepResult step(int state, std::span<const int> joint_action, const GameSpec& spec, Rng& rng);

/// Largest reward magnitude attainable under the spec's coefficients and graph.
double reward_bound(const GameSpec& spec);

struct ExperimentOverrides {
  int n_agents = 4;
  int n_states = 5;
  int n_actions = 3;
  double discount = 0.5;
  bool self_reward_by_action = false;

  friend bool operator==(const ExperimentOverrides&, const ExperimentOverrides&) = default;
};

/// Random instance of the loss-aversion experiment: fully connected graph with
/// equal weights, r_self ~ Normal(0.5, 0.1), r_com ~ 5 * Uniform[-0.5, 0.5],
/// Dirichlet(1, ..., 1) transition rows, start state 0.
GameSpec generate_experiment(std::uint64_t seed, const ExperimentOverrides& overrides = {});

std::string game_to_json(const GameSpec& spec);
GameSpec game_from_json(const std::string& text);
void save_game(const GameSpec& spec, const std::filesystem::path& path);
GameSpec load_game(const std::filesystem::path& path);

}  // namespace cptmarl
