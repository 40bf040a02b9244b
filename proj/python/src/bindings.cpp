#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cptmarl/actor.hpp"
#include "cptmarl/config.hpp"
#include "cptmarl/diagnostics.hpp"
#include "cptmarl/errors.hpp"
#include "cptmarl/io.hpp"
#include "cptmarl/trainer.hpp"

namespace py = pybind11;
using namespace cptmarl;

namespace {

std::vector<Outcome> to_outcomes(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<Outcome> out;
  out.reserve(pairs.size());
  for (const auto& [v, p] : pairs) out.push_back({v, p});
  return out;
}

template <class F>
std::string to_csv(F&& write) {
  std::ostringstream o;
  write(o);
  return o.str();
}

}  // namespace

PYBIND11_MODULE(_cptmarl, m) {
  m.doc() = "Risk-sensitive multi-agent actor-critic under cumulative prospect theory";

  py::register_exception<DiagnosticError>(m, "DiagnosticError", PyExc_RuntimeError);

  py::enum_<WeightingFamily>(m, "WeightingFamily")
      .value("TverskyKahneman", WeightingFamily::TverskyKahneman)
      .value("Prelec", WeightingFamily::Prelec);

  py::class_<CptParams>(m, "CptParams")
      .def(py::init<>())
      .def_readwrite("alpha", &CptParams::alpha)
      .def_readwrite("beta", &CptParams::beta)
      .def_readwrite("lam", &CptParams::lambda)
      .def_readwrite("gamma_w", &CptParams::gamma_w)
      .def_readwrite("delta_w", &CptParams::delta_w)
      .def_readwrite("x0", &CptParams::x0)
      .def_readwrite("family", &CptParams::family)
      .def_static("risk_neutral", &CptParams::risk_neutral)
      .def_static("conventional", &CptParams::conventional, py::arg("lam") = 2.6)
      .def("validate", &CptParams::validate)
      .def(py::self == py::self)
      .def("__repr__", [](const CptParams& p) {
        std::ostringstream s;
        s << "CptParams(alpha=" << p.alpha << ", beta=" << p.beta << ", lam=" << p.lambda
          << ", gamma_w=" << p.gamma_w << ", delta_w=" << p.delta_w << ", x0=" << p.x0 << ")";
        return s.str();
      });

  m.def("weight", py::overload_cast<double, double, WeightingFamily>(&weight), py::arg("p"),
        py::arg("curvature"), py::arg("family") = WeightingFamily::TverskyKahneman);
  m.def("utility", &utility, py::arg("x"), py::arg("params"));
  m.def(
      "cpt_exact",
      [](const std::vector<std::pair<double, double>>& outcomes, const CptParams& params) {
        return cpt_exact(DiscreteDistribution(to_outcomes(outcomes)), params);
      },
      py::arg("outcomes"), py::arg("params"), "CPT value of a finite lottery given as (value, probability) pairs.");
  m.def(
      "cpt_estimate",
      [](const std::vector<double>& samples, const CptParams& params) { return cpt_estimate(samples, params); },
      py::arg("samples"), py::arg("params"));

  py::class_<GameSpec>(m, "GameSpec")
      .def_readonly("n_agents", &GameSpec::n_agents)
      .def_readonly("n_states", &GameSpec::n_states)
      .def_readonly("n_actions", &GameSpec::n_actions)
      .def_readonly("discount", &GameSpec::discount)
      .def_readonly("r_max", &GameSpec::r_max)
      .def_readonly("graph_weights", &GameSpec::graph_weights)
      .def_readonly("initial_dist", &GameSpec::initial_dist)
      .def("to_json", [](const GameSpec& g) { return game_to_json(g); })
      .def_static("from_json", &game_from_json)
      .def("save", [](const GameSpec& g, const std::string& path) { save_game(g, path); })
      .def_static("load", [](const std::string& path) { return load_game(path); })
      .def(py::self == py::self);

  m.def(
      "generate_experiment",
      [](std::uint64_t seed, int n_agents, int n_states, int n_actions, double discount, bool by_action) {
        ExperimentOverrides o;
        o.n_agents = n_agents;
        o.n_states = n_states;
        o.n_actions = n_actions;
        o.discount = discount;
        o.self_reward_by_action = by_action;
        return generate_experiment(seed, o);
      },
      py::arg("seed"), py::arg("n_agents") = 4, py::arg("n_states") = 5, py::arg("n_actions") = 3,
      py::arg("discount") = 0.5, py::arg("self_reward_by_action") = false);

  py::class_<PolicyTable>(m, "PolicyTable")
      .def_readonly("agent", &PolicyTable::agent)
      .def_readwrite("theta", &PolicyTable::theta)
      .def_static("uniform", &PolicyTable::uniform, py::arg("agent"), py::arg("n_states"), py::arg("n_actions"))
      .def("policy", &PolicyTable::policy, py::arg("state"))
      .def("probabilities", &PolicyTable::probabilities);

  py::class_<SigmaDistribution>(m, "SigmaDistribution")
      .def_static(
          "exact",
          [](int agent, const std::vector<PolicyTable>& policies, const GameSpec& spec) {
            return SigmaDistribution::exact(agent, policies, spec);
          },
          py::arg("agent"), py::arg("policies"), py::arg("spec"));

  m.def(
      "td_apply",
      [](int state, const PolicyTable& policy, const SigmaDistribution& sigma, const Eigen::VectorXd& values,
         const GameSpec& spec, const CptParams& params) {
        return td_apply(state, policy, sigma, values, spec, params);
      },
      py::arg("state"), py::arg("policy"), py::arg("sigma"), py::arg("values"), py::arg("spec"), py::arg("params"));

  py::class_<FixedPointResult>(m, "FixedPointResult")
      .def_readonly("values", &FixedPointResult::values)
      .def_readonly("residual", &FixedPointResult::residual)
      .def_readonly("sweeps", &FixedPointResult::sweeps)
      .def_readonly("converged", &FixedPointResult::converged);
  m.def(
      "solve_fixed_point",
      [](const PolicyTable& policy, const SigmaDistribution& sigma, const GameSpec& spec, const CptParams& params,
         double tolerance, int max_sweeps) {
        return solve_fixed_point(policy, sigma, spec, params, tolerance, max_sweeps);
      },
      py::arg("policy"), py::arg("sigma"), py::arg("spec"), py::arg("params"), py::arg("tolerance") = 1e-10,
      py::arg("max_sweeps") = 10000);

  m.def(
      "check_contraction",
      [](const GameSpec& spec, const std::vector<PolicyTable>& policies, const std::vector<CptParams>& params,
         int n_pairs, std::uint64_t seed) {
        Rng rng = derive_stream(seed, 0);
        return check_contraction(spec, policies, params, n_pairs, rng).max_ratio;
      },
      py::arg("spec"), py::arg("policies"), py::arg("params"), py::arg("n_pairs") = 100, py::arg("seed") = 0,
      "Largest sup-norm contraction ratio of the CPT Bellman operator over random value pairs.");

  py::class_<PolicyGradient>(m, "PolicyGradient")
      .def_readonly("grad", &PolicyGradient::grad)
      .def_readonly("eta_mass", &PolicyGradient::eta_mass)
      .def_property_readonly("eta", [](const PolicyGradient& g) { return g.visitation.eta; })
      .def_property_readonly("spectral_radius", [](const PolicyGradient& g) { return g.visitation.spectral_radius; });
  m.def(
      "grad_value",
      [](const PolicyTable& policy, const Eigen::VectorXd& values, const GameSpec& spec,
         const SigmaDistribution& sigma, const CptParams& params) {
        return grad_value(policy, values, spec, sigma, params);
      },
      py::arg("policy"), py::arg("values"), py::arg("spec"), py::arg("sigma"), py::arg("params"));
  m.def(
      "gradient_check",
      [](const GameSpec& spec, const std::vector<PolicyTable>& policies, int agent, const CptParams& params) {
        const auto g = gradient_check(spec, policies, agent, params);
        return py::dict(py::arg("analytic") = g.analytic, py::arg("numeric") = g.numeric,
                        py::arg("cosine") = g.cosine, py::arg("relative_error") = g.relative_error);
      },
      py::arg("spec"), py::arg("policies"), py::arg("agent"), py::arg("params"));

  py::class_<TrainingResult>(m, "TrainingResult")
      .def_readonly("policies", &TrainingResult::policies)
      .def_readonly("iterations", &TrainingResult::iterations)
      .def_readonly("converged", &TrainingResult::converged)
      .def_readonly("skipped_actor_steps", &TrainingResult::skipped_actor_steps)
      .def_readonly("seed", &TrainingResult::seed)
      .def_property_readonly("values",
                             [](const TrainingResult& r) {
                               std::vector<Eigen::VectorXd> out;
                               for (const auto& v : r.values) out.push_back(v.values);
                               return out;
                             })
      .def("metrics_csv", [](const TrainingResult& r) { return to_csv([&](auto& o) { write_metrics_csv(o, r); }); })
      .def("policy_csv",
           [](const TrainingResult& r) { return to_csv([&](auto& o) { write_policy_csv(o, r.policies); }); });

  m.def(
      "train",
      [](const GameSpec& spec, const std::vector<CptParams>& params, std::uint64_t seed, int n_iters, int workers,
         int n_max) {
        TrainerConfig tc;
        tc.n_iters = n_iters;
        tc.workers = workers;
        tc.n_max = n_max;
        py::gil_scoped_release release;
        return train(spec, params, tc, seed);
      },
      py::arg("spec"), py::arg("params"), py::arg("seed"), py::arg("n_iters") = 10000, py::arg("workers") = 1,
      py::arg("n_max") = 64);

  m.def(
      "train_from_config",
      [](const std::string& config_json) {
        const RunConfig c = config_from_json(config_json);
        const GameSpec spec = resolve_game(c);
        TrainerConfig tc = c.trainer;
        tc.workers = c.workers;
        py::gil_scoped_release release;
        return train(spec, agent_params(c, spec.n_agents), tc, c.seed);
      },
      py::arg("config_json"));

  m.def(
      "run_scenarios",
      [](int n_runs, int n_iters, std::uint64_t base_seed, int workers) {
        ScenarioRunSettings st;
        st.n_runs = n_runs;
        st.trainer.n_iters = n_iters;
        st.base_seed = base_seed;
        st.workers = workers;
        ScenarioSummary s;
        {
          py::gil_scoped_release release;
          s = run_scenarios(st);
        }
        py::list rows;
        for (std::size_t k = 0; k < s.scenarios.size(); ++k) {
          rows.append(py::dict(py::arg("scenario") = s.scenarios[k].id, py::arg("name") = s.scenarios[k].name,
                               py::arg("mean") = s.mean(k), py::arg("std") = s.stddev(k)));
        }
        std::vector<bool> ordering;
        for (std::size_t r = 0; r < static_cast<std::size_t>(s.n_runs); ++r) ordering.push_back(ordering_holds(s, r));
        return py::dict(py::arg("scenarios") = rows, py::arg("ordering_holds") = ordering,
                        py::arg("summary_csv") = to_csv([&](auto& o) { write_scenario_summary_csv(o, s); }));
      },
      py::arg("n_runs") = 8, py::arg("n_iters") = 10000, py::arg("base_seed") = 0, py::arg("workers") = 1);
}
