#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nacart/tree.hpp"

namespace nacart {

struct ForestParams {
  std::size_t trees = 100;
  std::size_t mtry = 0;  // 0 = ceil(d / 3)
  bool bootstrap = true;
  /// Fit trees concurrently. Per-tree seeds are fixed up front, so the result
  /// does not depend on scheduling.
  bool parallel = true;
};

struct ForestModel {
  std::vector<TreeModel> trees;
  std::size_t mtry = 0;
  bool bootstrap = true;
  std::size_t d = 0;
};

struct BoostParams {
  std::size_t rounds = 200;
  double learning_rate = 0.1;
};

struct BoostModel {
  double init_value = 0.0;
  double learning_rate = 0.1;
  std::vector<TreeModel> stages;
  std::size_t d = 0;
};

/// Bagged trees. Tree t uses the stream mix_seed(seed, {Bootstrap, t}) for its
/// resample and mix_seed(seed, {TreeGrow, t}) for growing.
ForestModel fit_forest(const IncompleteMatrix& x, std::span<const double> y, Strategy strategy,
                       const TreeHyper& hyper, const ForestParams& params, std::uint64_t seed);

/// Least-squares boosting: each stage fits the current residuals.
BoostModel fit_boosting(const IncompleteMatrix& x, std::span<const double> y, Strategy strategy,
                        const TreeHyper& hyper, const BoostParams& params, std::uint64_t seed);

/// Mean of tree predictions, summed in tree order.
double predict_ensemble(const ForestModel& m, std::span<const double> row, std::span<const std::uint8_t> mask,
                        std::uint64_t seed = 0);
double predict_ensemble(const BoostModel& m, std::span<const double> row, std::span<const std::uint8_t> mask,
                        std::uint64_t seed = 0);

/// Row i uses mix_seed(seed, {i}).
std::vector<double> predict_ensemble(const ForestModel& m, const IncompleteMatrix& x, std::uint64_t seed = 0);
std::vector<double> predict_ensemble(const BoostModel& m, const IncompleteMatrix& x, std::uint64_t seed = 0);

/// Default boosting tree depth.
inline constexpr int kBoostDepth = 6;

}  // namespace nacart
