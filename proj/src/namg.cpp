#include "cptmarl/namg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cptmarl {

using nlohmann::json;

JointActionCodec::JointActionCodec(int n_agents, int n_actions)
    : n_agents_(n_agents), n_actions_(n_actions) {
  if (n_agents < 1 || n_actions < 1) throw std::invalid_argument("codec needs agents and actions");
  strides_.resize(static_cast<std::size_t>(n_agents));
  std::size_t s = 1;
  for (int i = 0; i < n_agents; ++i) {
    strides_[static_cast<std::size_t>(i)] = s;
    s *= static_cast<std::size_t>(n_actions);
  }
  size_ = s;
}

std::size_t JointActionCodec::encode(std::span<const int> joint) const {
  if (joint.size() != strides_.size()) throw std::invalid_argument("joint action has wrong arity");
  std::size_t code = 0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] < 0 || joint[i] >= n_actions_) throw std::out_of_range("action id out of range");
    code += static_cast<std::size_t>(joint[i]) * strides_[i];
  }
  return code;
}

void JointActionCodec::decode(std::size_t code, std::span<int> joint) const {
  for (std::size_t i = 0; i < strides_.size(); ++i) {
    joint[i] = static_cast<int>(code % static_cast<std::size_t>(n_actions_));
    code /= static_cast<std::size_t>(n_actions_);
  }
}

std::vector<int> JointActionCodec::decode(std::size_t code) const {
  std::vector<int> joint(strides_.size());
  decode(code, joint);
  return joint;
}

int JointActionCodec::action_of(std::size_t code, int agent) const {
  return static_cast<int>((code / stride(agent)) % static_cast<std::size_t>(n_actions_));
}

std::size_t JointActionCodec::without(std::size_t code, int agent) const {
  return code - static_cast<std::size_t>(action_of(code, agent)) * stride(agent);
}

std::size_t GameSpec::n_joint() const { return codec().size(); }

std::span<const double> GameSpec::transition_row(int state, std::size_t joint) const {
  const auto ns = static_cast<std::size_t>(n_states);
  const std::size_t offset = (static_cast<std::size_t>(state) * n_joint() + joint) * ns;
  return {transition.data() + offset, ns};
}

void GameSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("game spec: " + what); };
  if (n_agents < 1) fail("n_agents must be at least 1");
  if (n_states < 1) fail("n_states must be at least 1");
  if (n_actions < 1) fail("n_actions must be at least 1");
  if (graph_weights.rows() != n_agents || graph_weights.cols() != n_agents) {
    fail("graph_weights must be n_agents x n_agents");
  }
  for (int i = 0; i < n_agents; ++i) {
    if (graph_weights(i, i) != 0.0) fail("graph_weights diagonal must be zero");
    for (int j = 0; j < n_agents; ++j) {
      if (!std::isfinite(graph_weights(i, j))) fail("graph_weights must be finite");
    }
  }
  if (!(discount >= 0.0 && discount < 1.0)) fail("discount must lie in [0, 1)");
  const std::size_t expected =
      static_cast<std::size_t>(n_states) * n_joint() * static_cast<std::size_t>(n_states);
  if (transition.size() != expected) fail("transition tensor has wrong size");
  for (int s = 0; s < n_states; ++s) {
    for (std::size_t j = 0; j < n_joint(); ++j) {
      double total = 0.0;
      for (double p : transition_row(s, j)) {
        if (!(p >= 0.0)) fail("transition probabilities must be non-negative");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) fail("transition row does not sum to 1");
    }
  }
  if (initial_dist.size() != n_states) fail("initial_dist must have n_states entries");
  if ((initial_dist.array() < 0.0).any()) fail("initial_dist must be non-negative");
  if (std::abs(initial_dist.sum() - 1.0) > 1e-12) fail("initial_dist does not sum to 1");
  if (reward.r_self.rows() != n_agents || reward.r_self.cols() != n_states) {
    fail("reward.r_self must be n_agents x n_states");
  }
  if (reward.r_com.rows() != n_agents || reward.r_com.cols() != n_states) {
    fail("reward.r_com must be n_agents x n_states");
  }
  if (!reward.r_self.allFinite() || !reward.r_com.allFinite()) fail("rewards must be finite");
  if (reward.self_reward_by_action()) {
    if (static_cast<int>(reward.r_self_by_action.size()) != n_agents) {
      fail("reward.r_self_by_action needs one table per agent");
    }
    for (const auto& m : reward.r_self_by_action) {
      if (m.rows() != n_states || m.cols() != n_actions || !m.allFinite()) {
        fail("reward.r_self_by_action tables must be finite n_states x n_actions");
      }
    }
  }
  if (!(r_max > 0.0) || !std::isfinite(r_max)) fail("r_max must be positive");
}

bool operator==(const GameSpec& a, const GameSpec& b) {
  auto same = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  if (a.n_agents != b.n_agents || a.n_states != b.n_states || a.n_actions != b.n_actions) {
    return false;
  }
  if (a.reward.r_self_by_action.size() != b.reward.r_self_by_action.size()) return false;
  for (std::size_t i = 0; i < a.reward.r_self_by_action.size(); ++i) {
    if (!same(a.reward.r_self_by_action[i], b.reward.r_self_by_action[i])) return false;
  }
  return same(a.graph_weights, b.graph_weights) && a.transition == b.transition &&
         same(a.reward.r_self, b.reward.r_self) && same(a.reward.r_com, b.reward.r_com) &&
         a.discount == b.discount && a.initial_dist.size() == b.initial_dist.size() &&
         a.initial_dist == b.initial_dist && a.r_max == b.r_max;
}

double aggregate(int agent, std::span<const int> joint_action, const GameSpec& spec) {
  double sigma = 0.0;
  for (int j = 0; j < spec.n_agents; ++j) {
    if (j == agent) continue;
    sigma += spec.graph_weights(agent, j) * joint_action[static_cast<std::size_t>(j)];
  }
  return sigma;
}

double reward(int agent, int state, int own_action, double aggregate, const GameSpec& spec) {
  const auto& rm = spec.reward;
  const double self = rm.self_reward_by_action()
                          ? rm.r_self_by_action[static_cast<std::size_t>(agent)](state, own_action)
                          : rm.r_self(agent, state);
  const double r = self + aggregate * rm.r_com(agent, state) * own_action;
  return std::clamp(r, -spec.r_max, spec.r_max);
}

StepResult step(int state, std::span<const int> joint_action, const GameSpec& spec, Rng& rng) {
  const std::size_t joint = spec.codec().encode(joint_action);
  StepResult result;
  result.next_state = static_cast<int>(sample_index(spec.transition_row(state, joint), rng));
  result.per_agent.reserve(static_cast<std::size_t>(spec.n_agents));
  for (int i = 0; i < spec.n_agents; ++i) {
    Observation obs;
    obs.state = state;
    obs.own_action = joint_action[static_cast<std::size_t>(i)];
    obs.aggregate = aggregate(i, joint_action, spec);
    obs.reward = reward(i, state, obs.own_action, obs.aggregate, spec);
    obs.next_state = result.next_state;
    result.per_agent.push_back(obs);
  }
  return result;
}

double reward_bound(const GameSpec& spec) {
  const double a_max = spec.n_actions - 1;
  double bound = 0.0;
  for (int i = 0; i < spec.n_agents; ++i) {
    const double sigma_max = spec.graph_weights.row(i).cwiseAbs().sum() * a_max;
    for (int s = 0; s < spec.n_states; ++s) {
      double self = std::abs(spec.reward.r_self(i, s));
      if (spec.reward.self_reward_by_action()) {
        self = spec.reward.r_self_by_action[static_cast<std::size_t>(i)]
                   .row(s)
                   .cwiseAbs()
                   .maxCoeff();
      }
      bound = std::max(bound, self + std::abs(spec.reward.r_com(i, s)) * sigma_max * a_max);
    }
  }
  return bound;
}

GameSpec generate_experiment(std::uint64_t seed, const ExperimentOverrides& o) {
  if (o.n_agents < 2) throw std::invalid_argument("experiment needs at least two agents");
  GameSpec spec;
  spec.n_agents = o.n_agents;
  spec.n_states = o.n_states;
  spec.n_actions = o.n_actions;
  spec.discount = o.discount;

  spec.graph_weights = Eigen::MatrixXd::Constant(o.n_agents, o.n_agents, 1.0 / (o.n_agents - 1));
  spec.graph_weights.diagonal().setZero();

  Rng rng = derive_stream(seed, 0);
  std::normal_distribution<double> self_dist(0.5, 0.1);
  spec.reward.r_self.resize(o.n_agents, o.n_states);
  spec.reward.r_com.resize(o.n_agents, o.n_states);
  for (int i = 0; i < o.n_agents; ++i) {
    for (int s = 0; s < o.n_states; ++s) spec.reward.r_self(i, s) = self_dist(rng);
  }
  for (int i = 0; i < o.n_agents; ++i) {
    for (int s = 0; s < o.n_states; ++s) spec.reward.r_com(i, s) = 5.0 * (uniform01(rng) - 0.5);
  }
  if (o.self_reward_by_action) {
    for (int i = 0; i < o.n_agents; ++i) {
      Eigen::MatrixXd m(o.n_states, o.n_actions);
      for (int s = 0; s < o.n_states; ++s) {
        for (int a = 0; a < o.n_actions; ++a) m(s, a) = self_dist(rng);
      }
      spec.reward.r_self_by_action.push_back(std::move(m));
    }
  }

  const std::size_t n_joint = spec.n_joint();
  const auto ns = static_cast<std::size_t>(o.n_states);
  spec.transition.resize(ns * n_joint * ns);
  std::exponential_distribution<double> unit_exp(1.0);
  for (std::size_t row = 0; row < ns * n_joint; ++row) {
    double* p = spec.transition.data() + row * ns;
    double total = 0.0;
    for (std::size_t k = 0; k < ns; ++k) {
      p[k] = unit_exp(rng);
      total += p[k];
    }
    for (std::size_t k = 0; k < ns; ++k) p[k] /= total;
  }

  spec.initial_dist = Eigen::VectorXd::Zero(o.n_states);
  spec.initial_dist(0) = 1.0;
  spec.r_max = reward_bound(spec);
  spec.validate();
  return spec;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string("game spec: ") + field + " must be an array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument(std::string("game spec: ") + field + " is ragged");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

std::string game_to_json(const GameSpec& spec) {
  json j;
  j["format"] = "cptmarl.game/1";
  j["n_agents"] = spec.n_agents;
  j["n_states"] = spec.n_states;
  j["n_actions"] = spec.n_actions;
  j["discount"] = spec.discount;
  j["r_max"] = spec.r_max;
  j["initial_dist"] = std::vector<double>(spec.initial_dist.data(),
                                          spec.initial_dist.data() + spec.initial_dist.size());
  j["graph_weights"] = matrix_to_json(spec.graph_weights);
  j["reward"]["r_self"] = matrix_to_json(spec.reward.r_self);
  j["reward"]["r_com"] = matrix_to_json(spec.reward.r_com);
  if (spec.reward.self_reward_by_action()) {
    json tables = json::array();
    for (const auto& m : spec.reward.r_self_by_action) tables.push_back(matrix_to_json(m));
    j["reward"]["r_self_by_action"] = std::move(tables);
  }
  // transition[s][joint] = row over next states
  json kernel = json::array();
  for (int s = 0; s < spec.n_states; ++s) {
    json per_state = json::array();
    for (std::size_t a = 0; a < spec.n_joint(); ++a) {
      const auto row = spec.transition_row(s, a);
      per_state.push_back(std::vector<double>(row.begin(), row.end()));
    }
    kernel.push_back(std::move(per_state));
  }
  j["transition"] = std::move(kernel);
  return j.dump(1) + "\n";
}

GameSpec game_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("game spec: malformed JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "cptmarl.game/1") {
      throw std::invalid_argument("game spec: unsupported format tag");
    }
    GameSpec spec;
    spec.n_agents = j.at("n_agents").get<int>();
    spec.n_states = j.at("n_states").get<int>();
    spec.n_actions = j.at("n_actions").get<int>();
    spec.discount = j.at("discount").get<double>();
    spec.r_max = j.at("r_max").get<double>();
    const auto p0 = j.at("initial_dist").get<std::vector<double>>();
    spec.initial_dist = Eigen::Map<const Eigen::VectorXd>(p0.data(), static_cast<Eigen::Index>(p0.size()));
    spec.graph_weights = matrix_from_json(j.at("graph_weights"), "graph_weights");
    spec.reward.r_self = matrix_from_json(j.at("reward").at("r_self"), "reward.r_self");
    spec.reward.r_com = matrix_from_json(j.at("reward").at("r_com"), "reward.r_com");
    if (j["reward"].contains("r_self_by_action")) {
      for (const auto& m : j["reward"]["r_self_by_action"]) {
        spec.reward.r_self_by_action.push_back(matrix_from_json(m, "reward.r_self_by_action"));
      }
    }
    const auto& kernel = j.at("transition");
    if (spec.n_agents < 1 || spec.n_actions < 1 || spec.n_states < 1) {
      throw std::invalid_argument("game spec: sizes must be positive");
    }
    const std::size_t n_joint = spec.n_joint();
    if (!kernel.is_array() || kernel.size() != static_cast<std::size_t>(spec.n_states)) {
      throw std::invalid_argument("game spec: transition must have n_states blocks");
    }
    spec.transition.reserve(static_cast<std::size_t>(spec.n_states) * n_joint *
                            static_cast<std::size_t>(spec.n_states));
    for (const auto& per_state : kernel) {
      if (!per_state.is_array() || per_state.size() != n_joint) {
        throw std::invalid_argument("game spec: transition block must have one row per joint action");
      }
      for (const auto& row : per_state) {
        if (!row.is_array() || row.size() != static_cast<std::size_t>(spec.n_states)) {
          throw std::invalid_argument("game spec: transition row must have n_states entries");
        }
        for (const auto& p : row) spec.transition.push_back(p.get<double>());
      }
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("game spec: ") + e.what());
  }
}

void save_game(const GameSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << game_to_json(spec);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

GameSpec load_game(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return game_from_json(buf.str());
}

}  // namespace cptmarl
