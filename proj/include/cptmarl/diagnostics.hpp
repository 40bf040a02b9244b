#pragma once

// Self-checks used by `cptmarl check` and the tests.

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "cptmarl/actor.hpp"

namespace cptmarl {

/// Central finite differences of p0 . V*, where V* is the exact CPT fixed
/// point for `policy` against a fixed aggregate distribution.
Eigen::MatrixXd fd_gradient(const PolicyTable& policy, const SigmaDistribution& sigma,
                            const GameSpec& spec, const CptParams& params, double step = 1e-5,
                            double tolerance = 1e-13);

struct GradientCheck {
  Eigen::MatrixXd analytic;
  Eigen::MatrixXd numeric;
  double cosine = 0.0;
  double relative_error = 0.0;
};

/// grad_value at the exact fixed point of `agent` vs fd_gradient, with the
/// aggregate distribution induced exactly by the other policies.
GradientCheck gradient_check(const GameSpec& spec, std::span<const PolicyTable> policies, int agent,
                             const CptParams& params, double step = 1e-5);

struct EstimatorCheck {
  double exact = 0.0;
  double mean_estimate = 0.0;
  double mean_abs_error = 0.0;  // average over seeds of |estimate - exact|
  int n_samples = 0;
  int n_seeds = 0;
};

/// cpt_estimate on n i.i.d. draws from `dist`, repeated over seeds
/// derived from base_seed.
EstimatorCheck estimator_consistency(const DiscreteDistribution& dist, const CptParams& params,
                                     int n_samples, int n_seeds, std::uint64_t base_seed);

}  // namespace cptmarl
