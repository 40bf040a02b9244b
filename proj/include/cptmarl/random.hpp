#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace cptmarl {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream id); the same pair always yields the
/// same sequence.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::generate_canonical<double, 53>(rng);
}

/// Index drawn from a discrete distribution by inverse CDF. The last index
/// absorbs rounding slack.
inline std::size_t sample_index(std::span<const double> probabilities, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc) return i;
  }
  for (std::size_t i = probabilities.size(); i-- > 0;) {
    if (probabilities[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace cptmarl
