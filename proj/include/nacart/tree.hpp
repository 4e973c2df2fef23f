#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nacart/core.hpp"
#include "nacart/split.hpp"

namespace nacart {

/// Missing-value strategy of a tree.
///
/// The first three choose splits on observed values only and differ in how
/// rows lacking the split feature are routed; MIA scores the missing rows
/// inside the split criterion.
enum class Strategy { Surrogate, Probabilistic, Block, MIA };

/// Training-time handling of rows that lack the primary split feature under
/// the surrogate strategy.
enum class SurrogateTraining {
  Routed,       // send them down the surrogate chain (rpart behavior)
  ObservedOnly  // drop them at that node; node values use available cases only
};

enum class ProbPrediction {
  Stochastic,  // one Bernoulli(p_left) draw per probabilistic node, seeded per call
  Expected     // p_left-weighted average of both subtrees
};

struct TreeHyper {
  int max_depth = 30;
  std::size_t min_split = 10;
  std::size_t min_leaf = 5;
  std::size_t mtry = 0;  // features sampled per split; 0 = all
  /// A split must lower the squared error by cp times the root node's error
  /// (rpart's complexity parameter used as a stopping rule); 0 disables it.
  double cp = 0.0;
  ObservedCriterion criterion = ObservedCriterion::PerObservedRow;
  SurrogateTraining surrogate_training = SurrogateTraining::Routed;
  std::size_t max_surrogates = 5;
  /// A surrogate must beat the majority rule by this many binomial standard
  /// deviations of the error count; 0 keeps any strict improvement.
  double surrogate_z = 3.0;
  ProbPrediction prob_prediction = ProbPrediction::Stochastic;
  bool parallel = true;  // concurrent feature scans in large nodes

  void validate() const;
};

struct SurrogateRule {
  std::size_t feature = 0;
  double threshold = 0.0;
  /// false: x <= threshold goes Left; true: x <= threshold goes Right.
  bool direction_flip = false;
  /// Error rate on rows observing both features.
  double misclassification = 0.0;
};

struct SurrogateFit {
  std::vector<SurrogateRule> rules;  // ascending misclassification
  Side majority_side = Side::Left;
};

struct SurrogateParams {
  std::size_t max_surrogates = 5;
  double z = 3.0;
};

/// Surrogates for a thresholded primary split: one-split classifiers of the
/// primary side, fitted on rows where both features are observed, kept when
/// they beat the majority ("blind") rule.
SurrogateFit fit_surrogates(const IncompleteMatrix& x, std::span<const std::uint32_t> rows,
                            const SplitSpec& primary, const SurrogateParams& params = {},
                            std::span<const double> weights = {});

struct TreeNode {
  std::optional<SplitSpec> split;
  std::vector<SurrogateRule> surrogates;
  Side majority_side = Side::Left;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;   // weighted mean of the training responses in the node
  double n_node = 0.0;  // weighted training count
  int depth = 0;

  bool is_leaf() const { return !split.has_value(); }
};

class TreeModel {
 public:
  Strategy strategy = Strategy::MIA;
  TreeHyper hyper;
  std::size_t d = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Prediction for one row; `seed` drives stochastic probabilistic routing.
  double predict(std::span<const double> row, std::span<const std::uint8_t> mask,
                 std::uint64_t seed = 0) const;
  /// Row i of x uses the stream mix_seed(seed, {i}).
  std::vector<double> predict(const IncompleteMatrix& x, std::uint64_t seed = 0) const;

  /// Index of the leaf a row lands in (stochastic routing for probabilistic nodes).
  std::size_t leaf_index(std::span<const double> row, std::span<const std::uint8_t> mask,
                         std::uint64_t seed = 0) const;

  std::size_t leaf_count() const;
  int depth() const;
  bool needs_seed() const;

 private:
  double predict_expected(std::size_t node, std::span<const double> row,
                          std::span<const std::uint8_t> mask) const;
};

/// Greedy least-squares tree. `weights` (empty = unit) are integer-like case
/// weights; rows with weight 0 are ignored.
TreeModel fit_tree(const IncompleteMatrix& x, std::span<const double> y, Strategy strategy,
                   const TreeHyper& hyper, std::uint64_t seed, std::span<const double> weights = {});

/// Feature of the root split; nullopt for a single leaf.
std::optional<std::size_t> selected_root_feature(const TreeModel& model);

/// Indented text dump, one node per line:
///   j=<1-based> z=<17 digits|NA> miss=<L|R|SEP|P:<p>> n=<count> value=<mean> [surr=...]
///   leaf n=<count> value=<mean>
std::string dump_tree(const TreeModel& model);

namespace detail {

/// Column store plus per-feature observed rows ordered by (value, row id).
/// Built once and shared by every tree of a forest.
struct PresortedData {
  explicit PresortedData(const IncompleteMatrix& x);
  ColumnStore store;
  std::vector<std::vector<std::uint32_t>> order;
};

TreeModel fit_tree_presorted(const PresortedData& data, std::span<const double> y, Strategy strategy,
                             const TreeHyper& hyper, std::uint64_t seed, std::span<const double> weights = {});

}  // namespace detail

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

}  // namespace nacart
