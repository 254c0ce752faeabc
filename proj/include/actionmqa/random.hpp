#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace actionmqa {

/// Stable 64-bit seed derivation from a base seed and string salts.
/// Identical across platforms and runs.
std::uint64_t derive_seed(std::uint64_t base, std::string_view salt);
std::uint64_t derive_seed(std::uint64_t base, std::string_view salt_a,
                          std::string_view salt_b);

/// Seeded generator. The engine is std::mt19937_64, whose output sequence is
/// fixed by the standard; the distributions below are implemented here rather
/// than with <random> distributions, whose outputs vary across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1).
  double unit();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace actionmqa
