#include "cptmarl/cpt_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cptmarl {

namespace {

constexpr double kProbabilitySlack = 1e-12;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

double clamp_probability(double p) {
  if (!(p >= -kProbabilitySlack && p <= 1.0 + kProbabilitySlack)) {
    std::ostringstream msg;
    msg << "probability " << p << " outside [0, 1]";
    throw std::domain_error(msg.str());
  }
  return std::clamp(p, 0.0, 1.0);
}

double curvature_of(const CptParams& params, Branch branch) {
  return branch == Branch::Gain ? params.gamma_w : params.delta_w;
}

// Indices of `outcomes` in ascending order of value; ties keep input order.
std::vector<std::size_t> ascending_order(std::span<const Outcome> outcomes) {
  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return outcomes[a].value < outcomes[b].value;
  });
  return order;
}

// Position of the first gain (value >= x0) in an ascending order.
std::size_t first_gain(std::span<const Outcome> outcomes, const std::vector<std::size_t>& order,
                       double x0) {
  auto it = std::partition_point(order.begin(), order.end(),
                                 [&](std::size_t i) { return outcomes[i].value < x0; });
  return static_cast<std::size_t>(it - order.begin());
}

}  // namespace

std::string to_string(WeightingFamily family) {
  return family == WeightingFamily::Prelec ? "prelec" : "tversky_kahneman";
}

WeightingFamily weighting_family_from_string(const std::string& name) {
  if (name == "tversky_kahneman" || name == "tk") return WeightingFamily::TverskyKahneman;
  if (name == "prelec") return WeightingFamily::Prelec;
  throw std::invalid_argument("unknown weighting family '" + name + "'");
}

std::string to_string(WeightDerivative mode) {
  return mode == WeightDerivative::ChainRule ? "chain_rule" : "rank_differenced";
}

WeightDerivative weight_derivative_from_string(const std::string& name) {
  if (name == "chain_rule") return WeightDerivative::ChainRule;
  if (name == "rank_differenced") return WeightDerivative::RankDifferenced;
  throw std::invalid_argument("unknown weight derivative mode '" + name + "'");
}

CptParams CptParams::risk_neutral() { return CptParams{}; }

CptParams CptParams::conventional(double lambda) {
  CptParams p;
  p.alpha = 0.65;
  p.beta = 0.65;
  p.lambda = lambda;
  p.gamma_w = 0.69;
  p.delta_w = 0.69;
  return p;
}

void CptParams::validate() const {
  auto unit_interval = [](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(name) + " must lie in (0, 1], got " +
                                  std::to_string(v));
    }
  };
  unit_interval(alpha, "alpha");
  unit_interval(beta, "beta");
  unit_interval(gamma_w, "gamma_w");
  unit_interval(delta_w, "delta_w");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be positive, got " + std::to_string(lambda));
  }
  if (!std::isfinite(x0)) throw std::invalid_argument("x0 must be finite");
}

DiscreteDistribution::DiscreteDistribution(std::vector<Outcome> outcomes)
    : outcomes_(std::move(outcomes)) {
  if (outcomes_.empty()) throw std::invalid_argument("distribution has no outcomes");
  double total = 0.0;
  for (const auto& o : outcomes_) {
    if (!(o.probability >= 0.0)) throw std::invalid_argument("negative outcome probability");
    if (!std::isfinite(o.value)) throw std::invalid_argument("non-finite outcome value");
    total += o.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "outcome probabilities sum to " << total << ", expected 1";
    throw std::invalid_argument(msg.str());
  }
}

double weight(double p, double curvature, WeightingFamily family) {
  p = clamp_probability(p);
  if (!(curvature > 0.0)) throw std::domain_error("weighting curvature must be positive");
  if (p == 0.0 || p == 1.0 || curvature == 1.0) return p;
  if (family == WeightingFamily::Prelec) {
    return std::exp(-std::pow(-std::log(p), curvature));
  }
  const double a = std::pow(p, curvature);
  const double b = std::pow(1.0 - p, curvature);
  return a / std::pow(a + b, 1.0 / curvature);
}

double weight(double p, const CptParams& params, Branch branch) {
  return weight(p, curvature_of(params, branch), params.family);
}

double weight_derivative(double p, double curvature, WeightingFamily family) {
  p = clamp_probability(p);
  if (curvature == 1.0) return 1.0;
  if (p == 0.0 || p == 1.0) {
    if (curvature < 1.0) return kInfinity;
    p = std::clamp(p, 1e-15, 1.0 - 1e-15);
  }
  if (family == WeightingFamily::Prelec) {
    const double l = -std::log(p);
    return std::exp(-std::pow(l, curvature)) * curvature * std::pow(l, curvature - 1.0) / p;
  }
  const double a = std::pow(p, curvature);
  const double b = std::pow(1.0 - p, curvature);
  const double d = a + b;
  // w = a d^{-1/c};  w' = d^{-1/c} [c a / p - a (a / p - b / (1 - p)) / d]
  const double da = curvature * a / p;
  const double db = -curvature * b / (1.0 - p);
  return std::pow(d, -1.0 / curvature) * (da - a * (da + db) / (curvature * d));
}

double utility(double x, const CptParams& params) {
  const double d = x - params.x0;
  if (d >= 0.0) return params.alpha == 1.0 ? d : std::pow(d, params.alpha);
  return -params.lambda * (params.beta == 1.0 ? -d : std::pow(-d, params.beta));
}

double utility_derivative(double x, const CptParams& params, double cap) {
  const double d = x - params.x0;
  if (d >= 0.0) {
    if (params.alpha == 1.0) return std::min(1.0, cap);
    if (d == 0.0) return cap;
    return std::min(params.alpha * std::pow(d, params.alpha - 1.0), cap);
  }
  if (params.beta == 1.0) return std::min(params.lambda, cap);
  return std::min(params.lambda * params.beta * std::pow(-d, params.beta - 1.0), cap);
}

std::vector<double> rank_weights(std::span<const Outcome> outcomes, const CptParams& params) {
  std::vector<double> weights(outcomes.size(), 0.0);
  const auto order = ascending_order(outcomes);
  const std::size_t split = first_gain(outcomes, order, params.x0);

  // Losses accumulate from the worst outcome upward.
  double cum = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < split; ++k) {
    const std::size_t i = order[k];
    cum += outcomes[i].probability;
    if (params.delta_w == 1.0) {
      weights[i] = outcomes[i].probability;
      continue;
    }
    const double w = weight(std::min(cum, 1.0), params.delta_w, params.family);
    weights[i] = w - prev;
    prev = w;
  }
  // Gains accumulate from the best outcome downward.
  cum = 0.0;
  prev = 0.0;
  for (std::size_t k = order.size(); k > split; --k) {
    const std::size_t i = order[k - 1];
    cum += outcomes[i].probability;
    if (params.gamma_w == 1.0) {
      weights[i] = outcomes[i].probability;
      continue;
    }
    const double w = weight(std::min(cum, 1.0), params.gamma_w, params.family);
    weights[i] = w - prev;
    prev = w;
  }
  return weights;
}

std::vector<WeightedOutcome> decision_weights(const DiscreteDistribution& dist,
                                              const CptParams& params) {
  const auto outcomes = dist.outcomes();
  const auto weights = rank_weights(outcomes, params);
  const auto order = ascending_order(outcomes);
  std::vector<WeightedOutcome> out;
  out.reserve(order.size());
  for (std::size_t i : order) {
    out.push_back({outcomes[i].value, outcomes[i].probability, weights[i]});
  }
  return out;
}

double cpt_value(std::span<const Outcome> outcomes, const CptParams& params) {
  const auto weights = rank_weights(outcomes, params);
  double gains = 0.0;
  double losses = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const double u = utility(outcomes[i].value, params);
    if (u >= 0.0) {
      gains += weights[i] * u;
    } else {
      losses += weights[i] * u;
    }
  }
  return gains + losses;
}

double cpt_exact(const DiscreteDistribution& dist, const CptParams& params) {
  return cpt_value(dist.outcomes(), params);
}

double cpt_estimate(std::span<const double> samples, const CptParams& params) {
  if (samples.empty()) throw std::invalid_argument("cpt_estimate needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  // w(k / n) for k = 0..n, one table per branch.
  auto table = [&](double curvature) {
    std::vector<double> w(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      w[k] = curvature == 1.0 ? static_cast<double>(k) * inv_n
                              : weight(static_cast<double>(k) * inv_n, curvature, params.family);
    }
    w[n] = 1.0;
    return w;
  };

  double rho_plus = 0.0;
  double rho_minus = 0.0;
  std::vector<double> w_gain;
  std::vector<double> w_loss;
  for (std::size_t idx = 0; idx < n; ++idx) {
    const std::size_t i = idx + 1;  // 1-based rank
    const double d = sorted[idx] - params.x0;
    if (d >= 0.0) {
      if (d == 0.0) continue;
      double increment = inv_n;
      if (params.gamma_w != 1.0) {
        if (w_gain.empty()) w_gain = table(params.gamma_w);
        increment = w_gain[n + 1 - i] - w_gain[n - i];
      }
      rho_plus += utility(sorted[idx], params) * increment;
    } else {
      double increment = inv_n;
      if (params.delta_w != 1.0) {
        if (w_loss.empty()) w_loss = table(params.delta_w);
        increment = w_loss[i] - w_loss[i - 1];
      }
      rho_minus += -utility(sorted[idx], params) * increment;
    }
  }
  return rho_plus - rho_minus;
}

std::vector<double> probability_sensitivity(std::span<const Outcome> outcomes,
                                            const CptParams& params, WeightDerivative mode) {
  std::vector<double> sens(outcomes.size(), 0.0);
  const auto order = ascending_order(outcomes);
  const std::size_t split = first_gain(outcomes, order, params.x0);
  const std::size_t n_loss = split;
  const std::size_t n_gain = order.size() - split;

  // Gains ranked best first: g_1..g_n with tail sums T_k and utilities u_k.
  std::vector<std::size_t> gains;
  gains.reserve(n_gain);
  for (std::size_t k = order.size(); k > split; --k) gains.push_back(order[k - 1]);
  // Losses ranked worst first: l_1..l_m with head sums H_k and magnitudes v_k.
  std::vector<std::size_t> losses(order.begin(), order.begin() + static_cast<long>(split));

  auto cumulative = [&](const std::vector<std::size_t>& ranked) {
    std::vector<double> c(ranked.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      acc += outcomes[ranked[k]].probability;
      c[k] = std::min(acc, 1.0);
    }
    return c;
  };
  std::vector<double> mag(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) mag[i] = std::abs(utility(outcomes[i].value, params));
  auto magnitude = [&](std::size_t i) { return mag[i]; };

  auto chain_rule = [&](const std::vector<std::size_t>& ranked, double curvature, double sign,
                        bool mass_is_total) {
    const auto cum = cumulative(ranked);
    double acc = 0.0;
    for (std::size_t k = ranked.size(); k-- > 0;) {
      const double u_k = magnitude(ranked[k]);
      const double u_next = k + 1 < ranked.size() ? magnitude(ranked[k + 1]) : 0.0;
      const double diff = u_k - u_next;
      // The last cumulative sum is the total mass when only one branch is
      // present; it is constant under mass-preserving perturbations.
      const bool frozen = mass_is_total && k + 1 == ranked.size();
      if (diff != 0.0 && !frozen) {
        acc += weight_derivative(cum[k], curvature, params.family) * diff;
      }
      sens[ranked[k]] = sign * acc;
    }
  };

  auto rank_differenced = [&](const std::vector<std::size_t>& ranked, double curvature,
                              double sign) {
    const auto cum = cumulative(ranked);
    auto dw = [&](double p) {
      return weight_derivative(std::clamp(p, 1e-9, 1.0 - 1e-9), curvature, params.family);
    };
    double prev = dw(0.0);
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      const double cur = dw(cum[k]);
      sens[ranked[k]] = sign * (cur - prev) * magnitude(ranked[k]);
      prev = cur;
    }
  };

  if (mode == WeightDerivative::ChainRule) {
    chain_rule(gains, params.gamma_w, 1.0, n_loss == 0);
    chain_rule(losses, params.delta_w, -1.0, n_gain == 0);
  } else {
    rank_differenced(gains, params.gamma_w, 1.0);
    rank_differenced(losses, params.delta_w, -1.0);
  }
  return sens;
}

}  // namespace cptmarl
