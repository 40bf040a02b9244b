#pragma once

// CSV exports. Numbers are written with 17 significant digits so files
// round-trip and compare byte-for-byte across runs.

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cptmarl/trainer.hpp"

namespace cptmarl {

std::string format_number(double x);

/// iteration, agent, V_0..V_{S-1}, td_error, grad_norm. grad_norm is "nan"
/// on iterations whose actor step was skipped.
void write_metrics_csv(std::ostream& out, const TrainingResult& result);

/// agent, state, action, probability.
void write_policy_csv(std::ostream& out, std::span<const PolicyTable> policies);

/// iteration, agent, state, V, td_error for the state visited at each iteration.
void write_value_trace_csv(std::ostream& out, const TrainingResult& result);

/// iteration, agent, state, V, V_smoothed for one fixed state.
void write_value_curve_csv(std::ostream& out, const TrainingResult& result, int state, int window);

/// scenario, agent, action, mean, std.
void write_scenario_summary_csv(std::ostream& out, const ScenarioSummary& summary);

/// run, p0_scenario1, p0_scenario3, p0_scenario4, non_decreasing for agent 0.
void write_scenario_ordering_csv(std::ostream& out, const ScenarioSummary& summary);

/// Trailing mean: out[t] = mean(x[max(0, t - window + 1)..t]).
std::vector<double> trailing_mean(std::span<const double> x, int window);

/// Value of `state` in `agent`'s table after every iteration.
std::vector<double> value_series(const TrainingResult& result, int agent, int state);

/// Whether agent 0's mean P(a = 0) is non-decreasing across scenarios 1, 3, 4
/// in the given run.
bool ordering_holds(const ScenarioSummary& summary, std::size_t run);

}  // namespace cptmarl
