#pragma once

// Small hand-built games and textbook oracles that do not go through the
// library's CPT code.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "cptmarl/actor.hpp"

namespace testing_support {

using namespace cptmarl;

/// Uniform graph weights, uniform kernel, zero rewards, start state 0.
inline GameSpec blank_game(int n_agents, int n_states, int n_actions, double discount) {
  GameSpec g;
  g.n_agents = n_agents;
  g.n_states = n_states;
  g.n_actions = n_actions;
  g.discount = discount;
  g.graph_weights = Eigen::MatrixXd::Constant(n_agents, n_agents, n_agents > 1 ? 1.0 / (n_agents - 1) : 0.0);
  g.graph_weights.diagonal().setZero();
  g.transition.assign(static_cast<std::size_t>(n_states) * g.n_joint() * static_cast<std::size_t>(n_states),
                      1.0 / n_states);
  g.reward.r_self = Eigen::MatrixXd::Zero(n_agents, n_states);
  g.reward.r_com = Eigen::MatrixXd::Zero(n_agents, n_states);
  g.initial_dist = Eigen::VectorXd::Zero(n_states);
  g.initial_dist(0) = 1.0;
  g.r_max = 100.0;
  return g;
}

inline void set_row(GameSpec& g, int s, std::size_t joint, std::vector<double> row) {
  std::copy(row.begin(), row.end(),
            g.transition.begin() + static_cast<long>((static_cast<std::size_t>(s) * g.n_joint() + joint) *
                                                     static_cast<std::size_t>(g.n_states)));
}

/// The two-agent, two-state, two-action game used by the hand-enumeration
/// tests. Kernel rows depend on both actions.
inline GameSpec toy_game(double discount = 0.6) {
  GameSpec g = blank_game(2, 2, 2, discount);
  g.graph_weights << 0.0, 1.0, 1.0, 0.0;
  // joint code = a0 + 2 a1
  set_row(g, 0, 0, {0.9, 0.1});
  set_row(g, 0, 1, {0.3, 0.7});
  set_row(g, 0, 2, {0.5, 0.5});
  set_row(g, 0, 3, {0.2, 0.8});
  set_row(g, 1, 0, {0.6, 0.4});
  set_row(g, 1, 1, {0.1, 0.9});
  set_row(g, 1, 2, {0.75, 0.25});
  set_row(g, 1, 3, {0.4, 0.6});
  g.reward.r_self << 0.5, -0.2, 0.3, 0.4;
  g.reward.r_com << 1.5, -2.0, -1.0, 0.8;
  g.r_max = reward_bound(g);
  g.validate();
  return g;
}

inline PolicyTable policy_from_probs(int agent, const Eigen::MatrixXd& probs) {
  return {agent, probs.array().log().matrix()};
}

inline double prob(const std::vector<PolicyTable>& pols, int agent, int s, int a) {
  return pols[static_cast<std::size_t>(agent)].policy(s)(a);
}

/// Joint-action probability at s under independent policies.
inline double joint_prob(const GameSpec& g, const std::vector<PolicyTable>& pols, int s,
                         const std::vector<int>& joint) {
  double p = 1.0;
  for (int j = 0; j < g.n_agents; ++j) p *= prob(pols, j, s, joint[static_cast<std::size_t>(j)]);
  return p;
}

struct Classical {
  Eigen::MatrixXd P;       // state transition matrix under the joint policy
  Eigen::VectorXd r;       // expected one-step reward of the agent
  Eigen::VectorXd V;       // (I - gamma P)^-1 r
  Eigen::VectorXd visits;  // (I - gamma P^T)^-1 p0
  Eigen::MatrixXd Q;       // Q(s, own action)
  Eigen::MatrixXd grad;    // sum_s visits(s) sum_a d pi(a|s) / d theta(s, b) Q(s, a)
};

/// Textbook policy evaluation for one agent with the others' policies fixed.
inline Classical classical(const GameSpec& g, const std::vector<PolicyTable>& pols, int agent) {
  const int S = g.n_states;
  const auto codec = g.codec();
  Classical c;
  c.P = Eigen::MatrixXd::Zero(S, S);
  c.r = Eigen::VectorXd::Zero(S);
  Eigen::MatrixXd r_sa = Eigen::MatrixXd::Zero(S, g.n_actions);
  std::vector<Eigen::MatrixXd> P_sa(static_cast<std::size_t>(g.n_actions), Eigen::MatrixXd::Zero(S, S));
  for (int s = 0; s < S; ++s) {
    for (std::size_t code = 0; code < codec.size(); ++code) {
      const auto joint = codec.decode(code);
      const double pj = joint_prob(g, pols, s, joint);
      const int a = joint[static_cast<std::size_t>(agent)];
      const double pa = prob(pols, agent, s, a);
      const double others = pa > 0 ? pj / pa : 0.0;
      const double R = reward(agent, s, a, aggregate(agent, joint, g), g);
      c.r(s) += pj * R;
      r_sa(s, a) += others * R;
      const auto row = g.transition_row(s, code);
      for (int t = 0; t < S; ++t) {
        c.P(s, t) += pj * row[static_cast<std::size_t>(t)];
        P_sa[static_cast<std::size_t>(a)](s, t) += others * row[static_cast<std::size_t>(t)];
      }
    }
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(S, S);
  c.V = (I - g.discount * c.P).fullPivLu().solve(c.r);
  c.visits = (I - g.discount * c.P.transpose()).fullPivLu().solve(g.initial_dist);
  c.Q = Eigen::MatrixXd::Zero(S, g.n_actions);
  for (int a = 0; a < g.n_actions; ++a) {
    c.Q.col(a) = r_sa.col(a) + g.discount * P_sa[static_cast<std::size_t>(a)] * c.V;
  }
  c.grad = Eigen::MatrixXd::Zero(S, g.n_actions);
  for (int s = 0; s < S; ++s) {
    const Eigen::VectorXd pi = pols[static_cast<std::size_t>(agent)].policy(s);
    const double baseline = pi.dot(c.Q.row(s).transpose());
    for (int b = 0; b < g.n_actions; ++b) c.grad(s, b) = c.visits(s) * pi(b) * (c.Q(s, b) - baseline);
  }
  return c;
}

/// Straightforward CPT with Tversky-Kahneman weights, written from the
/// textbook definition: sort, cumulative sums from each tail, differences.
struct Lottery {
  std::vector<double> x;
  std::vector<double> p;
};

inline double tk(double p, double c) {
  if (p <= 0) return 0;
  if (p >= 1) return 1;
  return std::pow(p, c) / std::pow(std::pow(p, c) + std::pow(1 - p, c), 1 / c);
}

/// Decision weight of each outcome, input order, reference point 0.
inline std::vector<double> tk_decision_weights(const Lottery& l, double gamma, double delta) {
  const std::size_t n = l.x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return l.x[a] < l.x[b]; });
  std::vector<double> w(n, 0.0);
  double head = 0;
  for (std::size_t k = 0; k < n && l.x[idx[k]] < 0; ++k) {
    const double before = tk(head, delta);
    head += l.p[idx[k]];
    w[idx[k]] = tk(head, delta) - before;
  }
  double tail = 0;
  for (std::size_t k = n; k-- > 0 && l.x[idx[k]] >= 0;) {
    const double before = tk(tail, gamma);
    tail += l.p[idx[k]];
    w[idx[k]] = tk(tail, gamma) - before;
  }
  return w;
}

inline double textbook_utility(double x, double alpha, double beta, double lambda) {
  return x >= 0 ? std::pow(x, alpha) : -lambda * std::pow(-x, beta);
}

inline double textbook_cpt(const Lottery& l, const CptParams& p) {
  const auto w = tk_decision_weights(l, p.gamma_w, p.delta_w);
  double v = 0;
  for (std::size_t i = 0; i < l.x.size(); ++i) v += w[i] * textbook_utility(l.x[i], p.alpha, p.beta, p.lambda);
  return v;
}

inline double cosine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum() / (a.norm() * b.norm());
}

}  // namespace testing_support
