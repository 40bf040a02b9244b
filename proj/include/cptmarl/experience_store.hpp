#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "cptmarl/random.hpp"

namespace cptmarl {

struct Transition {
  double reward = 0.0;
  int next_state = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Per-agent archive of (reward, next state) samples keyed by
/// (state, own action, observed aggregate). Lists are append-only.
class ExperienceStore {
 public:
  struct Key {
    int state = 0;
    int own_action = 0;
    std::int64_t aggregate_bin = 0;

    auto operator<=>(const Key&) const = default;
  };

  static Key key(int state, int own_action, double aggregate);

  void push(const Key& key, const Transition& t);
  void push(int state, int own_action, double aggregate, const Transition& t) {
    push(key(state, own_action, aggregate), t);
  }

  std::size_t count(const Key& key) const;
  std::size_t size() const { return total_; }
  std::size_t n_keys() const { return entries_.size(); }

  /// Uniform draw from the key's list; the key must be non-empty.
  const Transition& sample(const Key& key, Rng& rng) const;
  std::optional<double> mean_reward(const Key& key) const;
  const std::vector<Transition>* find(const Key& key) const;

  friend bool operator==(const ExperienceStore&, const ExperienceStore&) = default;

 private:
  struct Entry {
    std::vector<Transition> transitions;
    double reward_sum = 0.0;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::map<Key, Entry> entries_;
  std::size_t total_ = 0;
};

}  // namespace cptmarl
