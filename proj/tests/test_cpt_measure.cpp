#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "cptmarl/cpt_measure.hpp"
#include "cptmarl/random.hpp"

using namespace cptmarl;

namespace {

// 40-digit values from an mpmath evaluation of the closed forms.
constexpr double kTk05 = 0.4539875495240296250507987562766411866155;      // w(0.5), c = 0.69
constexpr double kTkSlope05 = 0.6265028183431608825701022836617648375293;  // w'(0.5)
constexpr double kPrelec03 = 0.3208932611821368595785892484439515340916;   // Prelec w(0.3)
constexpr double kTk02 = 0.2570254667624945247747252791799049127979;
constexpr double kTk07MinusTk02 = 0.330755581392126055618658284002732789303;
constexpr double kTk03 = 0.3275756392013215005996704319392461559845;
constexpr double kThreeOutcomeValue = -0.4807654076714574340498586184939848394046;
constexpr double kTwoPointValue = -0.7263800792384474000812780100426258985847;

const CptParams kConventional = CptParams::conventional(2.6);

}  // namespace

TEST(Params, RiskNeutralIsIdentity) {
  const auto p = CptParams::risk_neutral();
  EXPECT_EQ(p.alpha, 1.0);
  EXPECT_EQ(p.beta, 1.0);
  EXPECT_EQ(p.lambda, 1.0);
  EXPECT_EQ(p.gamma_w, 1.0);
  EXPECT_EQ(p.delta_w, 1.0);
  EXPECT_EQ(p.x0, 0.0);
}

TEST(Params, ValidationRejectsBadFields) {
  CptParams p;
  p.alpha = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = CptParams{};
  p.lambda = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = CptParams{};
  p.delta_w = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_NO_THROW(kConventional.validate());
}

TEST(Distribution, RejectsBadProbabilities) {
  EXPECT_THROW(DiscreteDistribution({{1.0, 0.5}, {2.0, 0.4}}), std::invalid_argument);
  EXPECT_THROW(DiscreteDistribution({{1.0, 1.2}, {2.0, -0.2}}), std::invalid_argument);
  EXPECT_THROW(DiscreteDistribution(std::vector<Outcome>{}), std::invalid_argument);
  EXPECT_NO_THROW(DiscreteDistribution({{1.0, 0.3}, {2.0, 0.7}}));
}

TEST(Weight, Boundaries) {
  EXPECT_EQ(weight(0.0, 0.69, WeightingFamily::TverskyKahneman), 0.0);
  EXPECT_EQ(weight(1.0, 0.69, WeightingFamily::TverskyKahneman), 1.0);
  EXPECT_EQ(weight(0.0, 0.69, WeightingFamily::Prelec), 0.0);
  EXPECT_EQ(weight(1.0, 0.69, WeightingFamily::Prelec), 1.0);
}

TEST(Weight, MatchesHighPrecisionClosedForm) {
  EXPECT_NEAR(weight(0.5, 0.69, WeightingFamily::TverskyKahneman), kTk05, 1e-15);
  EXPECT_NEAR(weight(0.3, 0.69, WeightingFamily::Prelec), kPrelec03, 1e-15);
  EXPECT_NEAR(weight(0.5, kConventional, Branch::Gain), kTk05, 1e-15);
  EXPECT_NEAR(weight(0.5, kConventional, Branch::Loss), kTk05, 1e-15);
}

TEST(Weight, DomainGuard) {
  // Accumulated rounding just past the unit interval is clamped.
  EXPECT_EQ(weight(1.0 + 5e-13, 0.69, WeightingFamily::TverskyKahneman), 1.0);
  EXPECT_EQ(weight(-5e-13, 0.69, WeightingFamily::TverskyKahneman), 0.0);
  EXPECT_THROW(weight(1.01, 0.69, WeightingFamily::TverskyKahneman), std::domain_error);
  EXPECT_THROW(weight(-0.01, 0.69, WeightingFamily::Prelec), std::domain_error);
  EXPECT_THROW(weight(0.5, 0.0, WeightingFamily::Prelec), std::domain_error);
}

TEST(Weight, MonotoneInProbability) {
  for (auto family : {WeightingFamily::TverskyKahneman, WeightingFamily::Prelec}) {
    for (double c : {0.3, 0.61, 0.69, 0.9, 1.0}) {
      double prev = 0.0;
      for (int k = 0; k <= 1000; ++k) {
        const double w = weight(k / 1000.0, c, family);
        EXPECT_GE(w, prev) << "family " << to_string(family) << " c " << c << " p " << k / 1000.0;
        prev = w;
      }
    }
  }
}

TEST(Weight, DerivativeMatchesCentralDifferences) {
  EXPECT_NEAR(weight_derivative(0.5, 0.69, WeightingFamily::TverskyKahneman), kTkSlope05, 1e-12);
  const double h = 1e-6;
  for (auto family : {WeightingFamily::TverskyKahneman, WeightingFamily::Prelec}) {
    for (double p : {0.05, 0.2, 0.5, 0.8, 0.95}) {
      const double fd = (weight(p + h, 0.69, family) - weight(p - h, 0.69, family)) / (2 * h);
      EXPECT_NEAR(weight_derivative(p, 0.69, family), fd, 1e-6);
    }
  }
  EXPECT_TRUE(std::isinf(weight_derivative(0.0, 0.69, WeightingFamily::TverskyKahneman)));
  EXPECT_EQ(weight_derivative(0.3, 1.0, WeightingFamily::Prelec), 1.0);
}

TEST(Utility, Examples) {
  EXPECT_EQ(utility(0.0, CptParams::risk_neutral()), 0.0);
  CptParams p = kConventional;
  EXPECT_DOUBLE_EQ(utility(-1.0, p), -2.6);
  EXPECT_DOUBLE_EQ(utility(2.0, p), std::pow(2.0, 0.65));
  p.x0 = 1.5;
  EXPECT_EQ(utility(1.5, p), 0.0);
  EXPECT_DOUBLE_EQ(utility(2.5, p), 1.0);
}

TEST(Utility, Monotone) {
  for (double x0 : {-1.0, 0.0, 2.0}) {
    CptParams p = kConventional;
    p.x0 = x0;
    double prev = -1e300;
    for (int k = -500; k <= 500; ++k) {
      const double u = utility(k / 50.0, p);
      EXPECT_GE(u, prev);
      prev = u;
    }
  }
}

TEST(Utility, DerivativeCapAndValues) {
  EXPECT_EQ(utility_derivative(0.0, kConventional, 1e3), 1e3);
  EXPECT_EQ(utility_derivative(1e-30, kConventional, 50.0), 50.0);
  EXPECT_NEAR(utility_derivative(2.0, kConventional), 0.65 * std::pow(2.0, -0.35), 1e-15);
  EXPECT_NEAR(utility_derivative(-2.0, kConventional), 2.6 * 0.65 * std::pow(2.0, -0.35), 1e-15);
  EXPECT_EQ(utility_derivative(-3.0, CptParams::risk_neutral()), 1.0);
}

TEST(DecisionWeights, SingleGainTelescopesToOne) {
  const auto w = decision_weights(DiscreteDistribution({{3.0, 1.0}}), kConventional);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].value, 3.0);
  EXPECT_EQ(w[0].weight, 1.0);
}

TEST(DecisionWeights, RiskNeutralEqualsProbabilities) {
  const auto w = decision_weights(DiscreteDistribution({{1.0, 0.5}, {-1.0, 0.5}}),
                                  CptParams::risk_neutral());
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].value, -1.0);
  EXPECT_EQ(w[0].weight, 0.5);
  EXPECT_EQ(w[1].weight, 0.5);

  // Identity curvature reproduces arbitrary probabilities bit-for-bit.
  const std::vector<Outcome> outcomes{{0.3, 0.1}, {-2.0, 0.25}, {4.0, 0.4}, {-0.5, 0.25}};
  CptParams p = kConventional;
  p.gamma_w = p.delta_w = 1.0;
  const auto rw = rank_weights(outcomes, p);
  for (std::size_t i = 0; i < outcomes.size(); ++i) EXPECT_EQ(rw[i], outcomes[i].probability);
}

TEST(DecisionWeights, ThreeMixedOutcomesMatchHandComputation) {
  // Gains 3 (p .2) and 1 (p .5) weighted from the best outcome down,
  // the loss -2 (p .3) from the worst outcome up.
  const auto w = decision_weights(DiscreteDistribution({{1.0, 0.5}, {-2.0, 0.3}, {3.0, 0.2}}), kConventional);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].value, -2.0);
  EXPECT_NEAR(w[0].weight, kTk03, 1e-15);
  EXPECT_EQ(w[1].value, 1.0);
  EXPECT_NEAR(w[1].weight, kTk07MinusTk02, 1e-15);
  EXPECT_EQ(w[2].value, 3.0);
  EXPECT_NEAR(w[2].weight, kTk02, 1e-15);
  for (const auto& x : w) EXPECT_GE(x.weight, 0.0);
}

TEST(DecisionWeights, SingleSignWeightsSumToOne) {
  Rng rng = derive_stream(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Outcome> gains, losses;
    double total = 0.0;
    std::vector<double> raw(7);
    for (auto& r : raw) total += (r = uniform01(rng) + 0.01);
    for (std::size_t k = 0; k < raw.size(); ++k) {
      gains.push_back({0.1 + 5.0 * uniform01(rng), raw[k] / total});
      losses.push_back({-0.1 - 5.0 * uniform01(rng), raw[k] / total});
    }
    for (const auto* set : {&gains, &losses}) {
      // w is steep near 1, so rounding in the probabilities costs ~1e-11.
      const auto w = rank_weights(*set, kConventional);
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-9);
    }
  }
}

TEST(CptExact, Examples) {
  const DiscreteDistribution two_point({{1.0, 0.5}, {-1.0, 0.5}});
  EXPECT_EQ(cpt_exact(two_point, CptParams::risk_neutral()), 0.0);
  EXPECT_NEAR(cpt_exact(DiscreteDistribution({{2.5, 1.0}}), kConventional), std::pow(2.5, 0.65), 1e-15);
  const double v = cpt_exact(two_point, kConventional);
  EXPECT_NEAR(v, kTwoPointValue, 1e-14);
  EXPECT_LT(v, 0.0);
  EXPECT_NEAR(cpt_exact(DiscreteDistribution({{1.0, 0.5}, {-2.0, 0.3}, {3.0, 0.2}}), kConventional),
              kThreeOutcomeValue, 1e-14);
}

TEST(CptExact, RiskNeutralIsExpectation) {
  Rng rng = derive_stream(5, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Outcome> outcomes;
    double total = 0.0;
    for (int k = 0; k < 6; ++k) {
      outcomes.push_back({10.0 * uniform01(rng) - 5.0, uniform01(rng)});
      total += outcomes.back().probability;
    }
    CptParams p;
    p.x0 = uniform01(rng) - 0.5;
    double expectation = 0.0;
    for (auto& o : outcomes) {
      o.probability /= total;
      expectation += o.probability * (o.value - p.x0);
    }
    EXPECT_NEAR(cpt_value(outcomes, p), expectation, 1e-13);
  }
}

TEST(CptExact, PositiveHomogeneity) {
  CptParams p = kConventional;  // alpha == beta, x0 == 0
  const DiscreteDistribution gains({{1.0, 0.2}, {2.0, 0.5}, {4.0, 0.3}});
  const DiscreteDistribution losses({{-1.0, 0.2}, {-2.0, 0.5}, {-4.0, 0.3}});
  for (double k : {0.1, 0.5, 2.0, 7.0}) {
    for (const auto* d : {&gains, &losses}) {
      std::vector<Outcome> scaled(d->outcomes().begin(), d->outcomes().end());
      for (auto& o : scaled) o.value *= k;
      EXPECT_NEAR(cpt_value(scaled, p), std::pow(k, 0.65) * cpt_exact(*d, p), 1e-12);
    }
  }
}

TEST(CptExact, MonotoneInOutcomes) {
  // Raising any single outcome value never lowers the CPT value.
  const std::vector<Outcome> base{{-1.0, 0.3}, {0.5, 0.4}, {2.0, 0.3}};
  const double v0 = cpt_value(base, kConventional);
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto up = base;
    up[i].value += 0.25;
    EXPECT_GE(cpt_value(up, kConventional), v0);
  }
}

TEST(CptEstimate, EmptyRejected) {
  EXPECT_THROW(cpt_estimate(std::vector<double>{}, kConventional), std::invalid_argument);
}

TEST(CptEstimate, ConstantSamples) {
  const std::vector<double> s(37, 2.0);
  EXPECT_NEAR(cpt_estimate(s, kConventional), std::pow(2.0, 0.65), 1e-14);
}

TEST(CptEstimate, RiskNeutralIsSampleMean) {
  Rng rng = derive_stream(9, 2);
  for (int n : {1, 2, 17, 1000}) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto& x : s) x = 6.0 * uniform01(rng) - 3.0;
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    EXPECT_NEAR(cpt_estimate(s, CptParams::risk_neutral()), mean, 1e-12);
  }
}

TEST(CptEstimate, TiesAndReferencePoint) {
  // Values at the reference point contribute nothing; tied values sum like
  // one outcome with the combined mass.
  const std::vector<double> s{0.0, 1.0, 1.0, -1.0};
  const DiscreteDistribution d({{0.0, 0.25}, {1.0, 0.5}, {-1.0, 0.25}});
  EXPECT_NEAR(cpt_estimate(s, kConventional), cpt_exact(d, kConventional), 1e-14);
}

TEST(CptEstimate, ErrorShrinksWithSampleSize) {
  const DiscreteDistribution d({{1.0, 0.5}, {-1.0, 0.5}});
  const double exact = cpt_exact(d, kConventional);
  auto rmse = [&](int n) {
    double acc = 0.0;
    const int seeds = 200;
    std::vector<double> s(static_cast<std::size_t>(n));
    for (int k = 0; k < seeds; ++k) {
      Rng rng = derive_stream(1234, static_cast<std::uint64_t>(k));
      for (auto& x : s) x = uniform01(rng) < 0.5 ? 1.0 : -1.0;
      const double e = cpt_estimate(s, kConventional) - exact;
      acc += e * e;
    }
    return std::sqrt(acc / seeds);
  };
  // Quadrupling n should roughly halve the error.
  const double e1 = rmse(1000);
  const double e4 = rmse(4000);
  const double e16 = rmse(16000);
  EXPECT_NEAR(e1 / e4, 2.0, 0.6);
  EXPECT_NEAR(e4 / e16, 2.0, 0.6);
}

TEST(Sensitivity, ChainRuleMatchesFiniteDifferences) {
  // Perturb probability mass between two outcomes and compare against the
  // difference of their sensitivities.
  const std::vector<Outcome> base{{-1.5, 0.2}, {-0.3, 0.15}, {0.4, 0.3}, {2.0, 0.35}};
  const auto sens = probability_sensitivity(base, kConventional, WeightDerivative::ChainRule);
  const double h = 1e-6;
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = 0; j < base.size(); ++j) {
      if (i == j) continue;
      auto plus = base, minus = base;
      plus[i].probability += h;
      plus[j].probability -= h;
      minus[i].probability -= h;
      minus[j].probability += h;
      const double fd = (cpt_value(plus, kConventional) - cpt_value(minus, kConventional)) / (2 * h);
      EXPECT_NEAR(sens[i] - sens[j], fd, 1e-6) << i << "," << j;
    }
  }
}

TEST(Sensitivity, RiskNeutralChainRuleIsUtility) {
  const std::vector<Outcome> base{{-1.5, 0.2}, {0.4, 0.3}, {2.0, 0.5}};
  const auto sens = probability_sensitivity(base, CptParams::risk_neutral());
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = 0; j < base.size(); ++j) {
      EXPECT_NEAR(sens[i] - sens[j], base[i].value - base[j].value, 1e-12);
    }
  }
}

TEST(Sensitivity, RankDifferencedIsAvailable) {
  const std::vector<Outcome> base{{-1.5, 0.2}, {0.4, 0.3}, {2.0, 0.5}};
  const auto s = probability_sensitivity(base, kConventional, WeightDerivative::RankDifferenced);
  ASSERT_EQ(s.size(), 3u);
  for (double x : s) EXPECT_TRUE(std::isfinite(x));
  EXPECT_EQ(weight_derivative_from_string(to_string(WeightDerivative::RankDifferenced)),
            WeightDerivative::RankDifferenced);
  EXPECT_THROW(weight_derivative_from_string("nope"), std::invalid_argument);
}
