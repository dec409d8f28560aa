#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <string_view>

namespace evoglm {

/// FNV-1a hash of a label, used to name random sub-streams.
std::uint64_t label_hash(std::string_view label) noexcept;

/// Mixes a seed with a list of stream identifiers into a 64-bit key.
std::uint64_t stream_key(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> ids) noexcept;

/// Counter-based random stream (SplitMix64 over a keyed counter).
///
/// A stream is fully determined by its key, so results do not depend on
/// which thread consumes it or in which order streams are created. Satisfies
/// UniformRandomBitGenerator, so the standard distributions accept it.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t key) noexcept : state_(key) {}
  RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept
      : state_(stream_key(seed, ids)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double normal() { return normal_(*this); }
  double normal(double mean, double sd) { return mean + sd * normal_(*this); }

 private:
  std::uint64_t state_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace evoglm
