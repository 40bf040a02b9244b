// cptmarl command line.
//
// Exit code 1 means bad input. Exit code 2 means a runtime diagnostic such as
// a failed check or a non-contracting visitation kernel.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "cptmarl/config.hpp"
#include "cptmarl/diagnostics.hpp"
#include "cptmarl/errors.hpp"
#include "cptmarl/io.hpp"

namespace fs = std::filesystem;
using namespace cptmarl;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

struct Loaded {
  RunConfig config;
  fs::path base_dir;
};

Loaded load(const Flags& f) {
  Loaded l;
  if (!f.config.empty()) {
    l.config = load_config(f.config);
    l.base_dir = fs::path(f.config).parent_path();
  }
  if (f.seed) l.config.seed = *f.seed;
  if (f.workers) l.config.workers = *f.workers;
  if (!f.out.empty()) l.config.out = f.out;
  validate(l.config);
  return l;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

int cmd_generate(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_config(f.config);
  const std::uint64_t seed = f.seed ? *f.seed : c.game.seed;
  const std::string out = f.out.empty() ? "game.json" : f.out;
  const auto spec = generate_experiment(seed, c.game.overrides);
  if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
  save_game(spec, out);
  std::cout << "wrote " << out << " (" << spec.n_agents << " agents, " << spec.n_states
            << " states, " << spec.n_actions << " actions)\n";
  return 0;
}

int cmd_train(const Flags& f) {
  const auto [c, base] = load(f);
  const GameSpec spec = resolve_game(c, base);
  TrainerConfig tc = c.trainer;
  tc.workers = c.workers;
  const auto result = train(spec, agent_params(c, spec.n_agents), tc, c.seed);

  const fs::path dir = prepare_dir(c.out);
  {
    auto o = open_out(dir / "metrics.csv");
    write_metrics_csv(o, result);
  }
  {
    auto o = open_out(dir / "policy.csv");
    write_policy_csv(o, result.policies);
  }
  {
    auto o = open_out(dir / "value_trace.csv");
    write_value_trace_csv(o, result);
  }
  {
    auto o = open_out(dir / "value_curve.csv");
    write_value_curve_csv(o, result, c.trace_state, c.smoothing_window);
  }
  nlohmann::json summary;
  summary["seed"] = result.seed;
  summary["iterations"] = result.iterations;
  summary["converged"] = result.converged;
  summary["wall_clock_seconds"] = result.wall_clock_seconds;
  summary["skipped_actor_steps"] = result.skipped_actor_steps;
  summary["store_sizes"] = result.store_sizes;
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : result.values) {
    values.push_back(std::vector<double>(v.values.data(), v.values.data() + v.values.size()));
  }
  summary["values"] = values;
  open_out(dir / "summary.json") << summary.dump(2) << "\n";
  save_config(c, dir / "config.json");

  std::cout << "trained " << result.iterations << " iterations"
            << (result.converged ? " (converged)" : "") << "; outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_scenarios(const Flags& f) {
  const auto [c, base] = load(f);
  if (c.game.kind != GameSource::Kind::Generate) {
    throw ConfigError("game: scenarios need a 'generate' game source, one environment per run");
  }
  ScenarioRunSettings st;
  st.environment = c.game.overrides;
  st.trainer = c.trainer;
  st.base_seed = c.seed;
  st.n_runs = c.n_runs;
  st.workers = c.workers;
  const auto summary = run_scenarios(st);

  const fs::path dir = prepare_dir(c.out);
  {
    auto o = open_out(dir / "scenario_summary.csv");
    write_scenario_summary_csv(o, summary);
  }
  {
    auto o = open_out(dir / "scenario_ordering.csv");
    write_scenario_ordering_csv(o, summary);
  }
  save_config(c, dir / "config.json");
  int ordered = 0;
  for (int r = 0; r < summary.n_runs; ++r) ordered += ordering_holds(summary, static_cast<std::size_t>(r));
  std::cout << "agent 0 P(a=0) non-decreasing over scenarios 1 -> 3 -> 4 in " << ordered << " of "
            << summary.n_runs << " runs; outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_check(const Flags& f) {
  const auto [c, base] = load(f);
  const GameSpec spec = resolve_game(c, base);
  const auto params = agent_params(c, spec.n_agents);
  Rng rng = derive_stream(c.seed, 0);
  bool ok = true;
  nlohmann::json report;

  std::vector<PolicyTable> uniform;
  for (int i = 0; i < spec.n_agents; ++i) uniform.push_back(PolicyTable::uniform(i, spec.n_states, spec.n_actions));
  const auto contraction = check_contraction(spec, uniform, params, 100, rng);
  const bool contraction_ok = contraction.max_ratio < 1.0;
  ok = ok && contraction_ok;
  report["contraction"] = {{"pairs", contraction.pairs}, {"max_ratio", contraction.max_ratio},
                           {"ok", contraction_ok}};
  std::cout << "contraction: max ratio " << contraction.max_ratio << " over " << contraction.pairs
            << " pairs " << (contraction_ok ? "ok" : "FAILED") << "\n";

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<PolicyTable> random_policies = uniform;
  for (auto& p : random_policies) {
    for (Eigen::Index k = 0; k < p.theta.size(); ++k) p.theta.data()[k] = normal(rng);
  }
  nlohmann::json grads = nlohmann::json::array();
  for (int i = 0; i < spec.n_agents; ++i) {
    const auto fp = solve_fixed_point(random_policies[static_cast<std::size_t>(i)],
                                      SigmaDistribution::exact(i, random_policies, spec), spec,
                                      params[static_cast<std::size_t>(i)]);
    const auto g = gradient_check(spec, random_policies, i, params[static_cast<std::size_t>(i)]);
    const bool good = g.cosine >= 0.999 && fp.converged;
    ok = ok && good;
    grads.push_back({{"agent", i}, {"cosine", g.cosine}, {"relative_error", g.relative_error},
                     {"fixed_point_residual", fp.residual}, {"fixed_point_sweeps", fp.sweeps},
                     {"ok", good}});
    std::cout << "agent " << i << ": fixed point residual " << fp.residual << " after " << fp.sweeps
              << " sweeps; gradient vs finite differences cosine " << g.cosine << " "
              << (good ? "ok" : "FAILED") << "\n";
  }
  report["gradient"] = grads;

  const DiscreteDistribution two_point({{1.0, 0.5}, {-1.0, 0.5}});
  const auto est = estimator_consistency(two_point, params.front(), 100000, 10, c.seed);
  const bool est_ok = est.mean_abs_error <= 0.01;
  ok = ok && est_ok;
  report["estimator"] = {{"exact", est.exact}, {"mean_estimate", est.mean_estimate},
                         {"mean_abs_error", est.mean_abs_error}, {"n_samples", est.n_samples},
                         {"n_seeds", est.n_seeds}, {"ok", est_ok}};
  std::cout << "estimator: exact " << est.exact << ", mean |error| " << est.mean_abs_error << " "
            << (est_ok ? "ok" : "FAILED") << "\n";

  report["ok"] = ok;
  const fs::path dir = prepare_dir(c.out);
  open_out(dir / "check_report.json") << report.dump(2) << "\n";
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-sensitive multi-agent actor-critic under cumulative prospect theory"};
  app.require_subcommand(1);
  Flags flags;
  int (*handler)(const Flags&) = nullptr;

  auto add = [&](const char* name, const char* help, int (*fn)(const Flags&)) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "overrides the configured seed");
    sub->add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", flags.out, "output directory (output file for generate)");
    sub->callback([&handler, fn] { handler = fn; });
    return sub;
  };
  add("generate", "write a random experiment game", cmd_generate);
  add("train", "train all agents on one game", cmd_train);
  add("scenarios", "run the four loss-aversion scenarios", cmd_scenarios);
  add("check", "contraction, gradient and estimator self-checks", cmd_check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return handler(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const DiagnosticError& e) {
    std::cerr << "diagnostic: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
