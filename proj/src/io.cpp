#include "cptmarl/io.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cptmarl {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_metrics_csv(std::ostream& out, const TrainingResult& result) {
  const auto n_states = result.values.empty() ? 0 : result.values.front().values.size();
  out << "iteration,agent";
  for (Eigen::Index s = 0; s < n_states; ++s) out << ",V_" << s;
  out << ",td_error,grad_norm\n";
  for (const auto& m : result.metrics) {
    for (std::size_t i = 0; i < m.agents.size(); ++i) {
      const auto& a = m.agents[i];
      out << m.iteration << ',' << i;
      for (Eigen::Index s = 0; s < a.values.size(); ++s) out << ',' << format_number(a.values(s));
      out << ',' << format_number(a.td_error) << ',' << format_number(a.grad_norm) << '\n';
    }
  }
}

void write_policy_csv(std::ostream& out, std::span<const PolicyTable> policies) {
  out << "agent,state,action,probability\n";
  for (const auto& p : policies) {
    const Eigen::MatrixXd probs = p.probabilities();
    for (Eigen::Index s = 0; s < probs.rows(); ++s) {
      for (Eigen::Index a = 0; a < probs.cols(); ++a) {
        out << p.agent << ',' << s << ',' << a << ',' << format_number(probs(s, a)) << '\n';
      }
    }
  }
}

void write_value_trace_csv(std::ostream& out, const TrainingResult& result) {
  out << "iteration,agent,state,V,td_error\n";
  for (const auto& m : result.metrics) {
    for (std::size_t i = 0; i < m.agents.size(); ++i) {
      out << m.iteration << ',' << i << ',' << m.state << ','
          << format_number(m.agents[i].values(m.state)) << ',' << format_number(m.agents[i].td_error)
          << '\n';
    }
  }
}

void write_value_curve_csv(std::ostream& out, const TrainingResult& result, int state, int window) {
  out << "iteration,agent,state,V,V_smoothed\n";
  const std::size_t n_agents = result.values.size();
  std::vector<std::vector<double>> raw(n_agents);
  std::vector<std::vector<double>> smooth(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    raw[i] = value_series(result, static_cast<int>(i), state);
    smooth[i] = trailing_mean(raw[i], window);
  }
  for (std::size_t t = 0; t < result.metrics.size(); ++t) {
    for (std::size_t i = 0; i < n_agents; ++i) {
      out << result.metrics[t].iteration << ',' << i << ',' << state << ','
          << format_number(raw[i][t]) << ',' << format_number(smooth[i][t]) << '\n';
    }
  }
}

void write_scenario_summary_csv(std::ostream& out, const ScenarioSummary& summary) {
  out << "scenario,agent,action,mean,std\n";
  for (std::size_t k = 0; k < summary.scenarios.size(); ++k) {
    const Eigen::MatrixXd mean = summary.mean(k);
    const Eigen::MatrixXd sd = summary.stddev(k);
    for (int i = 0; i < summary.n_agents; ++i) {
      for (int a = 0; a < summary.n_actions; ++a) {
        out << summary.scenarios[k].id << ',' << i << ',' << a << ',' << format_number(mean(i, a))
            << ',' << format_number(sd(i, a)) << '\n';
      }
    }
  }
}

bool ordering_holds(const ScenarioSummary& summary, std::size_t run) {
  if (summary.per_run.size() < 4) throw std::invalid_argument("summary needs all four scenarios");
  const double p1 = summary.per_run[0].at(run)(0, 0);
  const double p3 = summary.per_run[2].at(run)(0, 0);
  const double p4 = summary.per_run[3].at(run)(0, 0);
  return p1 <= p3 && p3 <= p4;
}

void write_scenario_ordering_csv(std::ostream& out, const ScenarioSummary& summary) {
  out << "run,p0_scenario1,p0_scenario3,p0_scenario4,non_decreasing\n";
  for (int r = 0; r < summary.n_runs; ++r) {
    const auto run = static_cast<std::size_t>(r);
    out << r << ',' << format_number(summary.per_run[0][run](0, 0)) << ','
        << format_number(summary.per_run[2][run](0, 0)) << ','
        << format_number(summary.per_run[3][run](0, 0)) << ',' << (ordering_holds(summary, run) ? 1 : 0)
        << '\n';
  }
}

std::vector<double> trailing_mean(std::span<const double> x, int window) {
  if (window < 1) throw std::invalid_argument("smoothing window must be at least 1");
  const auto w = static_cast<std::size_t>(window);
  std::vector<double> out(x.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    acc += x[t];
    if (t >= w) acc -= x[t - w];
    out[t] = acc / static_cast<double>(std::min(t + 1, w));
  }
  return out;
}

std::vector<double> value_series(const TrainingResult& result, int agent, int state) {
  std::vector<double> out;
  out.reserve(result.metrics.size());
  for (const auto& m : result.metrics) {
    out.push_back(m.agents.at(static_cast<std::size_t>(agent)).values(state));
  }
  return out;
}

}  // namespace cptmarl
