#include "cptmarl/experience_store.hpp"

#include <cmath>
#include <stdexcept>

namespace cptmarl {

ExperienceStore::Key ExperienceStore::key(int state, int own_action, double aggregate) {
  return {state, own_action, std::llround(aggregate * 1e9)};
}

void ExperienceStore::push(const Key& key, const Transition& t) {
  auto& e = entries_[key];
  e.transitions.push_back(t);
  e.reward_sum += t.reward;
  ++total_;
}

std::size_t ExperienceStore::count(const Key& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.transitions.size();
}

const Transition& ExperienceStore::sample(const Key& key, Rng& rng) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.transitions.empty()) {
    throw std::out_of_range("experience store has no samples for key");
  }
  const auto& list = it->second.transitions;
  std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
  return list[pick(rng)];
}

std::optional<double> ExperienceStore::mean_reward(const Key& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.transitions.empty()) return std::nullopt;
  return it->second.reward_sum / static_cast<double>(it->second.transitions.size());
}

const std::vector<Transition>* ExperienceStore::find(const Key& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second.transitions;
}

}  // namespace cptmarl
