#include "cptmarl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cptmarl {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) fail(where.empty() ? key : where + "." + key, "unknown field");
  }
}

const json& object_at(const json& parent, const std::string& key, const std::string& field) {
  const auto& v = parent.at(key);
  if (!v.is_object()) fail(field, "expected an object");
  return v;
}

// Reads parent[key] into out when present, with a field-level type error.
template <class T>
void read(const json& parent, const char* key, const std::string& where, T& out) {
  const auto it = parent.find(key);
  if (it == parent.end()) return;
  const std::string field = where.empty() ? key : where + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) fail(field, "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) fail(field, "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) fail(field, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && !it->is_number_unsigned()) fail(field, "must be non-negative");
      }
    } else {
      if (!it->is_number()) fail(field, "expected a number");
    }
    out = it->get<T>();
  } catch (const json::exception& e) {
    fail(field, e.what());
  }
}

json params_to_json(const CptParams& p) {
  return {{"alpha", p.alpha},     {"beta", p.beta},       {"lambda", p.lambda},
          {"gamma_w", p.gamma_w}, {"delta_w", p.delta_w}, {"x0", p.x0},
          {"weighting", to_string(p.family)}};
}

CptParams params_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  reject_unknown(j, where, {"alpha", "beta", "lambda", "gamma_w", "delta_w", "x0", "weighting"});
  CptParams p;
  read(j, "alpha", where, p.alpha);
  read(j, "beta", where, p.beta);
  read(j, "lambda", where, p.lambda);
  read(j, "gamma_w", where, p.gamma_w);
  read(j, "delta_w", where, p.delta_w);
  read(j, "x0", where, p.x0);
  std::string family = to_string(p.family);
  read(j, "weighting", where, family);
  try {
    p.family = weighting_family_from_string(family);
  } catch (const std::invalid_argument& e) {
    fail(where + ".weighting", e.what());
  }
  return p;
}

// Runs a module validator and re-labels its message with the field prefix.
template <class F>
void check(const std::string& field, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(field, e.what());
  }
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.game.kind == GameSource::Kind::Generate) {
    const auto& o = c.game.overrides;
    if (o.n_agents < 2) fail("game.generate.n_agents", "must be at least 2");
    if (o.n_states < 1) fail("game.generate.n_states", "must be at least 1");
    if (o.n_actions < 2) fail("game.generate.n_actions", "must be at least 2");
    if (!(o.discount >= 0.0 && o.discount < 1.0)) fail("game.generate.discount", "must lie in [0, 1)");
    if (!c.agents.empty() && static_cast<int>(c.agents.size()) != o.n_agents) {
      fail("agents", "expected " + std::to_string(o.n_agents) + " entries, got " +
                         std::to_string(c.agents.size()));
    }
  } else if (c.game.path.empty()) {
    fail("game.file", "path must not be empty");
  }
  for (std::size_t i = 0; i < c.agents.size(); ++i) {
    check("agents[" + std::to_string(i) + "]", [&] { c.agents[i].validate(); });
  }
  check("trainer", [&] {
    TrainerConfig t = c.trainer;
    t.workers = 1;
    t.validate();
  });
  if (c.n_runs < 1) fail("n_runs", "must be at least 1");
  if (c.workers < 1) fail("workers", "must be at least 1");
  if (c.out.empty()) fail("out", "must not be empty");
  if (c.smoothing_window < 1) fail("smoothing_window", "must be at least 1");
  if (c.trace_state < 0) fail("trace_state", "must be non-negative");
  if (c.game.kind == GameSource::Kind::Generate && c.trace_state >= c.game.overrides.n_states) {
    fail("trace_state", "must be below game.generate.n_states");
  }
}

std::string config_to_json(const RunConfig& c) {
  json game;
  if (c.game.kind == GameSource::Kind::Generate) {
    const auto& o = c.game.overrides;
    game["generate"] = {{"seed", c.game.seed},
                        {"n_agents", o.n_agents},
                        {"n_states", o.n_states},
                        {"n_actions", o.n_actions},
                        {"discount", o.discount},
                        {"self_reward_by_action", o.self_reward_by_action}};
  } else {
    game["file"] = c.game.path;
  }
  json agents = json::array();
  for (const auto& p : c.agents) agents.push_back(params_to_json(p));
  const auto& t = c.trainer;
  json trainer = {
      {"n_iters", t.n_iters},
      {"n_max", t.n_max},
      {"store_threshold", t.store_threshold},
      {"true_reward_model", t.true_reward_model},
      {"grad_tolerance", t.grad_tolerance},
      {"patience", t.patience},
      {"weight_derivative", to_string(t.gradient.weight_derivative)},
      {"utility_derivative_cap", t.gradient.utility_derivative_cap},
      {"on_visitation_failure", to_string(t.on_visitation_failure)},
      {"schedule",
       {{"cr_scale", t.schedule.cr_scale},
        {"cr_exponent", t.schedule.cr_exponent},
        {"ac_scale", t.schedule.ac_scale},
        {"ac_exponent", t.schedule.ac_exponent}}}};
  json root = {{"game", game},       {"agents", agents},   {"trainer", trainer},
               {"seed", c.seed},     {"n_runs", c.n_runs}, {"out", c.out},
               {"workers", c.workers}, {"smoothing_window", c.smoothing_window},
               {"trace_state", c.trace_state}};
  return root.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(root, "", {"game", "agents", "trainer", "seed", "n_runs", "out", "workers",
                            "smoothing_window", "trace_state"});
  RunConfig c;
  if (root.contains("game")) {
    const auto& g = object_at(root, "game", "game");
    reject_unknown(g, "game", {"generate", "file"});
    if (g.contains("generate") == g.contains("file")) {
      fail("game", "give exactly one of 'generate' or 'file'");
    }
    if (g.contains("generate")) {
      const auto& gen = object_at(g, "generate", "game.generate");
      reject_unknown(gen, "game.generate",
                     {"seed", "n_agents", "n_states", "n_actions", "discount", "self_reward_by_action"});
      c.game.kind = GameSource::Kind::Generate;
      read(gen, "seed", "game.generate", c.game.seed);
      read(gen, "n_agents", "game.generate", c.game.overrides.n_agents);
      read(gen, "n_states", "game.generate", c.game.overrides.n_states);
      read(gen, "n_actions", "game.generate", c.game.overrides.n_actions);
      read(gen, "discount", "game.generate", c.game.overrides.discount);
      read(gen, "self_reward_by_action", "game.generate", c.game.overrides.self_reward_by_action);
    } else {
      c.game.kind = GameSource::Kind::File;
      read(g, "file", "game", c.game.path);
    }
  }
  if (root.contains("agents")) {
    const auto& a = root.at("agents");
    if (!a.is_array()) fail("agents", "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      c.agents.push_back(params_from_json(a[i], "agents[" + std::to_string(i) + "]"));
    }
  }
  if (root.contains("trainer")) {
    const auto& t = object_at(root, "trainer", "trainer");
    reject_unknown(t, "trainer",
                   {"n_iters", "n_max", "store_threshold", "true_reward_model", "grad_tolerance",
                    "patience", "weight_derivative", "utility_derivative_cap",
                    "on_visitation_failure", "schedule"});
    auto& tc = c.trainer;
    read(t, "n_iters", "trainer", tc.n_iters);
    read(t, "n_max", "trainer", tc.n_max);
    read(t, "store_threshold", "trainer", tc.store_threshold);
    read(t, "true_reward_model", "trainer", tc.true_reward_model);
    read(t, "grad_tolerance", "trainer", tc.grad_tolerance);
    read(t, "patience", "trainer", tc.patience);
    read(t, "utility_derivative_cap", "trainer", tc.gradient.utility_derivative_cap);
    std::string mode = to_string(tc.gradient.weight_derivative);
    read(t, "weight_derivative", "trainer", mode);
    check("trainer.weight_derivative",
          [&] { tc.gradient.weight_derivative = weight_derivative_from_string(mode); });
    std::string failure = to_string(tc.on_visitation_failure);
    read(t, "on_visitation_failure", "trainer", failure);
    check("trainer.on_visitation_failure",
          [&] { tc.on_visitation_failure = visitation_failure_from_string(failure); });
    if (t.contains("schedule")) {
      const auto& s = object_at(t, "schedule", "trainer.schedule");
      reject_unknown(s, "trainer.schedule", {"cr_scale", "cr_exponent", "ac_scale", "ac_exponent"});
      read(s, "cr_scale", "trainer.schedule", tc.schedule.cr_scale);
      read(s, "cr_exponent", "trainer.schedule", tc.schedule.cr_exponent);
      read(s, "ac_scale", "trainer.schedule", tc.schedule.ac_scale);
      read(s, "ac_exponent", "trainer.schedule", tc.schedule.ac_exponent);
    }
  }
  read(root, "seed", "", c.seed);
  read(root, "n_runs", "", c.n_runs);
  read(root, "out", "", c.out);
  read(root, "workers", "", c.workers);
  read(root, "smoothing_window", "", c.smoothing_window);
  read(root, "trace_state", "", c.trace_state);
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << config_to_json(config);
}

GameSpec resolve_game(const RunConfig& config, const std::filesystem::path& base_dir) {
  GameSpec spec;
  if (config.game.kind == GameSource::Kind::Generate) {
    spec = generate_experiment(config.game.seed, config.game.overrides);
  } else {
    std::filesystem::path p = config.game.path;
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    try {
      spec = load_game(p);
    } catch (const std::exception& e) {
      fail("game.file", e.what());
    }
  }
  if (!config.agents.empty() && static_cast<int>(config.agents.size()) != spec.n_agents) {
    fail("agents", "expected " + std::to_string(spec.n_agents) + " entries, got " +
                       std::to_string(config.agents.size()));
  }
  if (config.trace_state >= spec.n_states) fail("trace_state", "must be below the game's state count");
  return spec;
}

std::vector<CptParams> agent_params(const RunConfig& config, int n_agents) {
  if (config.agents.empty()) {
    return std::vector<CptParams>(static_cast<std::size_t>(n_agents), CptParams::risk_neutral());
  }
  return config.agents;
}

}  // namespace cptmarl
