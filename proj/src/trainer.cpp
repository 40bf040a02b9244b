#include "cptmarl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cptmarl/errors.hpp"
#include "cptmarl/parallel.hpp"

namespace cptmarl {

void LearningSchedule::validate() const {
  auto exponent = [](double e, const char* name) {
    if (!(e > 0.5 && e <= 1.0)) {
      throw std::invalid_argument(std::string("schedule.") + name + " must lie in (0.5, 1]");
    }
  };
  exponent(cr_exponent, "cr_exponent");
  exponent(ac_exponent, "ac_exponent");
  if (!(ac_exponent > cr_exponent)) {
    throw std::invalid_argument("schedule.ac_exponent must exceed schedule.cr_exponent");
  }
  if (!(cr_scale > 0.0 && cr_scale <= 1.0)) {
    throw std::invalid_argument("schedule.cr_scale must lie in (0, 1]");
  }
  if (!(ac_scale > 0.0) || !std::isfinite(ac_scale)) {
    throw std::invalid_argument("schedule.ac_scale must be positive");
  }
}

LearningRates lr(const LearningSchedule& s, std::int64_t t) {
  if (t < 0) throw std::invalid_argument("iteration index must be non-negative");
  const double base = 1.0 + static_cast<double>(t);
  return {s.cr_scale / std::pow(base, s.cr_exponent), s.ac_scale / std::pow(base, s.ac_exponent)};
}

std::string to_string(VisitationFailure v) {
  return v == VisitationFailure::Abort ? "abort" : "skip_actor_step";
}

VisitationFailure visitation_failure_from_string(const std::string& s) {
  if (s == "abort") return VisitationFailure::Abort;
  if (s == "skip_actor_step") return VisitationFailure::SkipActorStep;
  throw std::invalid_argument("unknown visitation failure policy '" + s +
                              "' (expected skip_actor_step or abort)");
}

void TrainerConfig::validate() const {
  schedule.validate();
  if (n_iters < 1) throw std::invalid_argument("trainer.n_iters must be at least 1");
  if (n_max < 1) throw std::invalid_argument("trainer.n_max must be at least 1");
  if (store_threshold < 1) throw std::invalid_argument("trainer.store_threshold must be at least 1");
  if (workers < 1) throw std::invalid_argument("trainer.workers must be at least 1");
  if (!(gradient.utility_derivative_cap > 0.0)) {
    throw std::invalid_argument("trainer.utility_derivative_cap must be positive");
  }
  if (!(grad_tolerance >= 0.0)) throw std::invalid_argument("trainer.grad_tolerance must be non-negative");
  if (patience < 1) throw std::invalid_argument("trainer.patience must be at least 1");
}

namespace {

// Everything one agent owns. Nothing here is read by other agents.
struct Agent {
  int id = 0;
  CptParams params;
  PolicyTable policy;
  ValueTable values;
  ExperienceStore store;
  SigmaDistribution sigma;
  Rng rng;
};

// Neighbor actions come from the round's broadcast of hypothetical actions;
// the environment model supplies rewards and successors.
class BroadcastSimulator final : public Simulator {
 public:
  BroadcastSimulator(const GameSpec& spec, int agent, const std::vector<std::vector<int>>& record)
      : spec_(spec), codec_(spec.codec()), agent_(agent), record_(record),
        joint_(static_cast<std::size_t>(spec.n_agents)) {}

  NeighborDraw draw_neighbors(int /*state*/, int draw, Rng& /*rng*/) override {
    for (int j = 0; j < spec_.n_agents; ++j) {
      joint_[static_cast<std::size_t>(j)] =
          j == agent_ ? 0 : record_[static_cast<std::size_t>(j)][static_cast<std::size_t>(draw)];
    }
    return {codec_.encode(joint_), aggregate(agent_, joint_, spec_)};
  }

  Transition simulate(int state, int own_action, const NeighborDraw& nb, Rng& rng) override {
    const std::size_t joint = nb.profile + static_cast<std::size_t>(own_action) * codec_.stride(agent_);
    const int next = static_cast<int>(sample_index(spec_.transition_row(state, joint), rng));
    return {reward(agent_, state, own_action, nb.aggregate, spec_), next};
  }

  double discount() const override { return spec_.discount; }

 private:
  const GameSpec& spec_;
  JointActionCodec codec_;
  int agent_;
  const std::vector<std::vector<int>>& record_;
  std::vector<int> joint_;
};

// Makes sure every (state, action, aggregate) the gradient will touch has at
// least one stored reward, querying the simulator for missing keys.
void cover_reward_keys(Agent& agent, const GameSpec& spec) {
  const auto codec = spec.codec();
  for (int s = 0; s < spec.n_states; ++s) {
    const auto atoms = agent.sigma.support(s);
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      for (int a = 0; a < spec.n_actions; ++a) {
        const auto key = ExperienceStore::key(s, a, atoms[k].aggregate);
        if (agent.store.count(key) > 0) continue;
        const std::size_t profile = agent.sigma.sample_profile(s, k, agent.rng);
        const std::size_t joint = profile + static_cast<std::size_t>(a) * codec.stride(agent.id);
        const int next = static_cast<int>(sample_index(spec.transition_row(s, joint), agent.rng));
        agent.store.push(key, {reward(agent.id, s, a, atoms[k].aggregate, spec), next});
      }
    }
  }
}

}  // namespace

TrainingResult train(const GameSpec& spec, const std::vector<CptParams>& params,
                     const TrainerConfig& config, std::uint64_t seed) {
  spec.validate();
  config.validate();
  if (static_cast<int>(params.size()) != spec.n_agents) {
    throw std::invalid_argument("need one CPT parameter set per agent");
  }
  for (const auto& p : params) p.validate();

  const auto started = std::chrono::steady_clock::now();
  const auto n = static_cast<std::size_t>(spec.n_agents);
  std::vector<Agent> agents(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int id = static_cast<int>(i);
    agents[i] = Agent{id,
                      params[i],
                      PolicyTable::uniform(id, spec.n_states, spec.n_actions),
                      ValueTable::zeros(id, spec.n_states),
                      ExperienceStore{},
                      SigmaDistribution(id, spec),
                      derive_stream(seed, 1 + i)};
  }
  Rng env_rng = derive_stream(seed, 0);

  GradientOptions gradient_options = config.gradient;
  gradient_options.skip_unobserved_states = true;

  TrainingResult result;
  result.seed = seed;
  result.metrics.reserve(static_cast<std::size_t>(config.n_iters));
  result.skipped_actor_steps.assign(n, 0);

  std::vector<int> joint(n);
  std::vector<std::vector<int>> record(n, std::vector<int>(static_cast<std::size_t>(config.n_max)));
  std::vector<AgentIterationMetrics> round(n);
  int state = static_cast<int>(sample_index(
      std::span<const double>(spec.initial_dist.data(), static_cast<std::size_t>(spec.n_states)),
      env_rng));
  int calm_streak = 0;

  for (int t = 0; t < config.n_iters; ++t) {
    const LearningRates rates = lr(config.schedule, t);

    // Round 1: every agent acts and broadcasts its hypothetical actions for
    // the critic's samples at this state.
    parallel_for(spec.n_agents, config.workers, [&](int i) {
      Agent& ag = agents[static_cast<std::size_t>(i)];
      joint[static_cast<std::size_t>(i)] = ag.policy.sample(state, ag.rng);
      const Eigen::VectorXd pi = ag.policy.policy(state);
      const std::span<const double> probs(pi.data(), static_cast<std::size_t>(pi.size()));
      for (auto& a : record[static_cast<std::size_t>(i)]) a = static_cast<int>(sample_index(probs, ag.rng));
    });

    const StepResult outcome = step(state, joint, spec, env_rng);

    // Round 2: local learning from the broadcast record.
    parallel_for(spec.n_agents, config.workers, [&](int i) {
      Agent& ag = agents[static_cast<std::size_t>(i)];
      const Observation& obs = outcome.per_agent[static_cast<std::size_t>(i)];
      ag.store.push(state, obs.own_action, obs.aggregate, {obs.reward, obs.next_state});
      update_sigma_dist(ag.sigma, state, joint);

      BroadcastSimulator sim(spec, i, record);
      const double estimate =
          sampled_value_estimate(state, ag.policy, ag.store, sim, ag.values.values, ag.params,
                                 config.n_max, ag.rng,
                                 static_cast<std::size_t>(config.store_threshold));
      const CriticStep cs = critic_step(ag.values.values, state, estimate, rates.critic);

      RewardFn reward_fn;
      if (config.true_reward_model) {
        reward_fn = true_reward(spec, i);
      } else {
        cover_reward_keys(ag, spec);
        reward_fn = [&ag](int s, int a, double sigma) {
          return *ag.store.mean_reward(ExperienceStore::key(s, a, sigma));
        };
      }
      auto& m = round[static_cast<std::size_t>(i)];
      m.td_error = cs.td_error;
      m.values = ag.values.values;
      m.actor_skipped = false;
      try {
        const PolicyGradient g = grad_value(ag.policy, ag.values.values, spec, ag.sigma, ag.params,
                                            gradient_options, reward_fn);
        ag.policy.theta = actor_step(ag.policy.theta, g.grad, rates.actor);
        m.grad_norm = g.grad.norm();
      } catch (const DiagnosticError& e) {
        if (config.on_visitation_failure == VisitationFailure::Abort) {
          throw DiagnosticError("agent " + std::to_string(i) + ", iteration " + std::to_string(t) +
                                ": " + e.what());
        }
        m.actor_skipped = true;
        m.grad_norm = std::numeric_limits<double>::quiet_NaN();
      }
    });

    IterationMetrics im;
    im.iteration = t;
    im.state = state;
    im.next_state = outcome.next_state;
    im.agents = round;
    double worst = 0.0;
    bool skipped = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (round[i].actor_skipped) {
        skipped = true;
        ++result.skipped_actor_steps[i];
      } else {
        worst = std::max(worst, round[i].grad_norm);
      }
    }
    result.metrics.push_back(std::move(im));
    result.iterations = t + 1;

    calm_streak = !skipped && worst < config.grad_tolerance ? calm_streak + 1 : 0;
    state = outcome.next_state;
    if (calm_streak >= config.patience) {
      result.converged = true;
      break;
    }
  }

  for (auto& ag : agents) {
    result.policies.push_back(ag.policy);
    result.values.push_back(ag.values);
    result.store_sizes.push_back(ag.store.size());
  }
  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<Scenario> loss_aversion_scenarios(int n_agents) {
  const auto n = static_cast<std::size_t>(n_agents);
  std::vector<Scenario> out;
  out.push_back({1, "risk_neutral", std::vector<CptParams>(n, CptParams::risk_neutral())});
  out.push_back({2, "all_lambda_2.6", std::vector<CptParams>(n, CptParams::conventional(2.6))});
  Scenario third{3, "agent1_lambda_2.6", std::vector<CptParams>(n, CptParams::risk_neutral())};
  third.agents[0] = CptParams::conventional(2.6);
  out.push_back(std::move(third));
  Scenario fourth{4, "agent1_lambda_3.2", std::vector<CptParams>(n, CptParams::conventional(2.6))};
  fourth.agents[0] = CptParams::conventional(3.2);
  out.push_back(std::move(fourth));
  return out;
}

Eigen::MatrixXd ScenarioSummary::mean(std::size_t scenario) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_agents, n_actions);
  for (const auto& run : per_run.at(scenario)) m += run;
  return m / static_cast<double>(n_runs);
}

Eigen::MatrixXd ScenarioSummary::stddev(std::size_t scenario) const {
  const Eigen::MatrixXd mu = mean(scenario);
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(n_agents, n_actions);
  for (const auto& run : per_run.at(scenario)) var += (run - mu).cwiseAbs2();
  const double denom = n_runs > 1 ? static_cast<double>(n_runs - 1) : 1.0;
  return (var / denom).cwiseSqrt();
}

ScenarioSummary run_scenarios(const ScenarioRunSettings& settings) {
  if (settings.n_runs < 1) throw std::invalid_argument("n_runs must be at least 1");
  settings.trainer.validate();
  ScenarioSummary summary;
  summary.scenarios = loss_aversion_scenarios(settings.environment.n_agents);
  summary.n_runs = settings.n_runs;
  summary.n_agents = settings.environment.n_agents;
  summary.n_actions = settings.environment.n_actions;
  const auto n_scen = summary.scenarios.size();
  summary.per_run.assign(n_scen, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(settings.n_runs)));

  std::vector<GameSpec> envs;
  for (int r = 0; r < settings.n_runs; ++r) {
    envs.push_back(generate_experiment(settings.base_seed + static_cast<std::uint64_t>(r),
                                       settings.environment));
  }

  TrainerConfig trainer = settings.trainer;
  trainer.workers = 1;
  const int jobs = static_cast<int>(n_scen) * settings.n_runs;
  parallel_for(jobs, settings.workers, [&](int job) {
    const auto sc = static_cast<std::size_t>(job / settings.n_runs);
    const auto run = static_cast<std::size_t>(job % settings.n_runs);
    // Scenarios of one run share the environment and the training seed.
    const std::uint64_t seed = derive_stream(settings.base_seed, 1000 + run)();
    const auto res = train(envs[run], summary.scenarios[sc].agents, trainer, seed);
    Eigen::MatrixXd probs(summary.n_agents, summary.n_actions);
    for (int i = 0; i < summary.n_agents; ++i) {
      probs.row(i) = res.policies[static_cast<std::size_t>(i)].probabilities().colwise().mean();
    }
    summary.per_run[sc][run] = probs;
  });
  return summary;
}

}  // namespace cptmarl
