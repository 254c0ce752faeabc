#include "actionmqa/random.hpp"

#include "actionmqa/text.hpp"

namespace actionmqa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_salt(std::uint64_t state, std::string_view salt) {
  // length prefix keeps ("ab","c") and ("a","bc") apart
  const auto h = text::fnv1a64(salt, text::fnv1a64(std::to_string(salt.size())));
  return splitmix64(state ^ h);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view salt) {
  return mix_salt(splitmix64(base), salt);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view salt_a,
                          std::string_view salt_b) {
  return mix_salt(mix_salt(splitmix64(base), salt_a), salt_b);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // rejection sampling on the top of the range to remove modulo bias
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

}  // namespace actionmqa
