#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace nacart {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives a child seed from a master seed and a sequence of tags
/// (repetition, method index, stage). Each tag is folded in as
/// `h = splitmix64(h ^ (tag + 0x9E3779B97F4A7C15 * (k + 1)))` where k is the
/// tag position, starting from `h = splitmix64(master)`.
std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

/// Stage tags used when deriving per-stage streams.
enum class Stage : std::uint64_t {
  TrainData = 1,
  TestData = 2,
  Fit = 3,
  Predict = 4,
  Amputation = 5,
  Bootstrap = 6,
  TreeGrow = 7,
  Noise = 8,
  Bayes = 9,
};

inline std::uint64_t tag(Stage s) { return static_cast<std::uint64_t>(s); }

}  // namespace nacart
