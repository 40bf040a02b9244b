#pragma once

// Run configuration: one JSON file that fully determines a train, scenarios
// or check invocation, seeds included.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cptmarl/trainer.hpp"

namespace cptmarl {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GameSource {
  enum class Kind { Generate, File };
  Kind kind = Kind::Generate;
  std::uint64_t seed = 0;            // Generate
  ExperimentOverrides overrides;     // Generate
  std::string path;                  // File; relative paths resolve against the config file

  friend bool operator==(const GameSource&, const GameSource&) = default;
};

struct RunConfig {
  GameSource game;
  /// One entry per agent. Empty means every agent is risk-neutral.
  std::vector<CptParams> agents;
  TrainerConfig trainer;
  std::uint64_t seed = 0;
  int n_runs = 8;
  std::string out = "out";
  int workers = 1;
  /// Trailing-mean window of the smoothed value curve.
  int smoothing_window = 200;
  /// State whose value curve is exported.
  int trace_state = 0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Checks every field against the module invariants; throws ConfigError.
void validate(const RunConfig& config);

std::string config_to_json(const RunConfig& config);
/// Parses and validates. Unknown keys are rejected.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

/// Builds or loads the game; file paths resolve against `base_dir`.
GameSpec resolve_game(const RunConfig& config, const std::filesystem::path& base_dir = {});

/// Per-agent parameters for a game with n_agents agents.
std::vector<CptParams> agent_params(const RunConfig& config, int n_agents);

}  // namespace cptmarl
