#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cptmarl/namg.hpp"
#include "support.hpp"

using namespace cptmarl;
using testing_support::blank_game;
using testing_support::set_row;

TEST(Codec, RoundTripAndStrides) {
  const JointActionCodec codec(4, 3);
  EXPECT_EQ(codec.size(), 81u);
  EXPECT_EQ(codec.stride(0), 1u);
  EXPECT_EQ(codec.stride(3), 27u);
  for (std::size_t code = 0; code < codec.size(); ++code) {
    const auto joint = codec.decode(code);
    EXPECT_EQ(codec.encode(joint), code);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(codec.action_of(code, i), joint[static_cast<std::size_t>(i)]);
    EXPECT_EQ(codec.action_of(codec.without(code, 2), 2), 0);
  }
  EXPECT_THROW(codec.encode(std::vector<int>{0, 3, 0, 0}), std::out_of_range);
}

TEST(Aggregate, EqualWeightsGiveMean) {
  const auto g = blank_game(4, 1, 3, 0.5);
  const std::vector<int> joint{2, 1, 2, 0};
  EXPECT_DOUBLE_EQ(aggregate(0, joint, g), 1.0);
}

TEST(Aggregate, SingleNeighborAndZeros) {
  auto g = blank_game(2, 1, 3, 0.5);
  g.graph_weights << 0.0, 1.0, 1.0, 0.0;
  for (int a = 0; a < 3; ++a) EXPECT_EQ(aggregate(0, std::vector<int>{1, a}, g), a);
  const auto g4 = blank_game(4, 1, 3, 0.5);
  EXPECT_EQ(aggregate(2, std::vector<int>{0, 0, 2, 0}, g4), 0.0);
}

TEST(Aggregate, LinearAndMeanOfOthers) {
  const auto g = blank_game(4, 1, 3, 0.5);
  const JointActionCodec codec(4, 3);
  for (std::size_t code = 0; code < codec.size(); ++code) {
    const auto joint = codec.decode(code);
    for (int i = 0; i < 4; ++i) {
      double mean = 0.0;
      for (int j = 0; j < 4; ++j) mean += j == i ? 0 : joint[static_cast<std::size_t>(j)];
      EXPECT_NEAR(aggregate(i, joint, g), mean / 3.0, 1e-15);
      // Raising one neighbor's action by one moves the aggregate by its weight.
      for (int j = 0; j < 4; ++j) {
        if (j == i || joint[static_cast<std::size_t>(j)] == 2) continue;
        auto up = joint;
        ++up[static_cast<std::size_t>(j)];
        EXPECT_NEAR(aggregate(i, up, g) - aggregate(i, joint, g), g.graph_weights(i, j), 1e-15);
      }
    }
  }
}

TEST(Reward, Examples) {
  auto g = blank_game(2, 1, 3, 0.5);
  g.reward.r_self(0, 0) = 0.5;
  g.reward.r_com(0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(reward(0, 0, 2, 1.0, g), 4.5);
  EXPECT_EQ(reward(0, 0, 0, 1.7, g), 0.5);
  EXPECT_EQ(reward(0, 0, 2, 0.0, g), 0.5);
  g.r_max = 3.0;
  EXPECT_EQ(reward(0, 0, 2, 1.0, g), 3.0);
}

TEST(Step, DeterministicKernel) {
  auto g = blank_game(2, 3, 2, 0.5);
  for (std::size_t j = 0; j < g.n_joint(); ++j) set_row(g, 1, j, {0.0, 0.0, 1.0});
  Rng rng = derive_stream(1, 0);
  for (int k = 0; k < 100; ++k) {
    const auto r = step(1, std::vector<int>{k % 2, 1}, g, rng);
    EXPECT_EQ(r.next_state, 2);
    ASSERT_EQ(r.per_agent.size(), 2u);
    EXPECT_EQ(r.per_agent[1].aggregate, k % 2);
    EXPECT_EQ(r.per_agent[0].next_state, 2);
  }
}

TEST(Step, SameSeedSameTrajectory) {
  const auto g = generate_experiment(3);
  auto run = [&] {
    Rng rng = derive_stream(42, 0);
    std::vector<int> states;
    int s = 0;
    for (int t = 0; t < 500; ++t) {
      const std::vector<int> joint{t % 3, (t / 3) % 3, 1, 2};
      s = step(s, joint, g, rng).next_state;
      states.push_back(s);
    }
    return states;
  };
  EXPECT_EQ(run(), run());
}

TEST(Step, UniformKernelFrequencies) {
  const auto g = blank_game(2, 5, 2, 0.5);
  Rng rng = derive_stream(7, 0);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int t = 0; t < n; ++t) ++counts[static_cast<std::size_t>(step(0, std::vector<int>{0, 1}, g, rng).next_state)];
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.2, 0.01);
}

TEST(Generate, DefaultShape) {
  const auto g = generate_experiment(0);
  EXPECT_EQ(g.n_agents, 4);
  EXPECT_EQ(g.n_states, 5);
  EXPECT_EQ(g.n_actions, 3);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(g.graph_weights(i, j), i == j ? 0.0 : 1.0 / 3.0);
  }
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.initial_dist(0), 1.0);
}

TEST(Generate, DeterministicInSeed) {
  EXPECT_TRUE(generate_experiment(17) == generate_experiment(17));
  EXPECT_FALSE(generate_experiment(17) == generate_experiment(18));
}

TEST(Generate, RewardsWithinBoundAndStochasticRows) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = generate_experiment(seed);
    const JointActionCodec codec(4, 3);
    for (int s = 0; s < g.n_states; ++s) {
      for (std::size_t code = 0; code < codec.size(); ++code) {
        const auto row = g.transition_row(s, code);
        double total = 0;
        for (double p : row) {
          EXPECT_GT(p, 0.0);  // full support
          total += p;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        const auto joint = codec.decode(code);
        for (int i = 0; i < 4; ++i) {
          const double sigma = aggregate(i, joint, g);
          const double raw = g.reward.r_self(i, s) + sigma * g.reward.r_com(i, s) * joint[static_cast<std::size_t>(i)];
          EXPECT_LE(std::abs(raw), g.r_max + 1e-12);
        }
      }
    }
  }
}

TEST(Generate, RewardMoments) {
  // Loose checks on the sampling distributions across many instances.
  double self_sum = 0, self_sq = 0, com_min = 1e9, com_max = -1e9;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto g = generate_experiment(seed);
    for (int i = 0; i < 4; ++i) {
      for (int s = 0; s < 5; ++s) {
        self_sum += g.reward.r_self(i, s);
        self_sq += g.reward.r_self(i, s) * g.reward.r_self(i, s);
        com_min = std::min(com_min, g.reward.r_com(i, s));
        com_max = std::max(com_max, g.reward.r_com(i, s));
        ++n;
      }
    }
  }
  const double mean = self_sum / n;
  EXPECT_NEAR(mean, 0.5, 0.01);
  EXPECT_NEAR(std::sqrt(self_sq / n - mean * mean), 0.1, 0.01);
  EXPECT_GE(com_min, -2.5);
  EXPECT_LE(com_max, 2.5);
  EXPECT_LT(com_min, -2.3);
  EXPECT_GT(com_max, 2.3);
}

TEST(Generate, StateActionSelfRewardFlag) {
  ExperimentOverrides o;
  o.self_reward_by_action = true;
  const auto g = generate_experiment(5, o);
  ASSERT_TRUE(g.reward.self_reward_by_action());
  EXPECT_EQ(reward(1, 2, 0, 0.0, g), g.reward.r_self_by_action[1](2, 0));
  EXPECT_EQ(reward(1, 2, 2, 0.0, g), g.reward.r_self_by_action[1](2, 2));
}

TEST(Validate, RejectsBrokenSpecs) {
  auto g = blank_game(2, 2, 2, 0.5);
  EXPECT_NO_THROW(g.validate());
  auto bad = g;
  bad.graph_weights(0, 0) = 0.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = g;
  bad.transition[0] += 0.1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = g;
  bad.initial_dist(1) = 0.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = g;
  bad.discount = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Serialization, LosslessRoundTrip) {
  for (bool by_action : {false, true}) {
    ExperimentOverrides o;
    o.self_reward_by_action = by_action;
    const auto g = generate_experiment(9, o);
    const std::string text = game_to_json(g);
    const auto back = game_from_json(text);
    EXPECT_TRUE(back == g);
    EXPECT_EQ(game_to_json(back), text);
  }
}

TEST(Serialization, FilesAreByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "cptmarl_namg_test";
  std::filesystem::create_directories(dir);
  save_game(generate_experiment(4), dir / "a.json");
  save_game(generate_experiment(4), dir / "b.json");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  EXPECT_TRUE(load_game(dir / "a.json") == generate_experiment(4));
  std::filesystem::remove_all(dir);
}

TEST(Serialization, RejectsMalformed) {
  EXPECT_THROW(game_from_json("{"), std::invalid_argument);
  EXPECT_THROW(game_from_json("{\"format\": \"other\"}"), std::invalid_argument);
  auto text = game_to_json(generate_experiment(1));
  text.replace(text.find("\"discount\": 0.5"), 15, "\"discount\": 1.5");
  EXPECT_THROW(game_from_json(text), std::invalid_argument);
}
