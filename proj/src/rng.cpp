#include "nacart/rng.hpp"

namespace nacart {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  std::uint64_t k = 0;
  for (auto t : tags) {
    h = splitmix64(h ^ (t + 0x9E3779B97F4A7C15ULL * (k + 1)));
    ++k;
  }
  return h;
}

}  // namespace nacart
