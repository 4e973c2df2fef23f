#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nacart/core.hpp"

namespace nacart {

enum class Side : std::uint8_t { Left, Right };

/// Where rows lacking the split feature go.
enum class MissingRoute : std::uint8_t {
  Left,
  Right,
  Separate,       // observed -> Left, missing -> Right (MissingVsNonMissing splits)
  Probabilistic,  // Bernoulli(p_left)
  SurrogateChain  // first applicable surrogate, else the majority side
};

enum class SplitKind : std::uint8_t { Thresholded, MissingVsNonMissing };

struct SplitSpec {
  std::size_t feature = 0;
  std::optional<double> threshold;
  MissingRoute missing_route = MissingRoute::Left;
  double p_left = 0.5;  // meaningful for Probabilistic only
  SplitKind kind = SplitKind::Thresholded;
};

struct SplitCandidate {
  SplitSpec split;
  double criterion = 0.0;
};

/// How the observed-values criterion is compared across features that have
/// different numbers of observed rows in the node.
enum class ObservedCriterion {
  /// Within-child squared error on observed rows, rescaled to the node size:
  /// SSE_obs * (n_node / n_obs). Invariant to an MCAR missing fraction.
  PerObservedRow,
  /// rpart-style: node SSE minus the SSE reduction achieved on the observed
  /// rows. Penalizes features with many missing values.
  NodeScaledGain,
};

struct SplitParams {
  std::size_t min_leaf = 5;
  ObservedCriterion criterion = ObservedCriterion::PerObservedRow;
  /// Evaluate features concurrently (OpenMP). The reduction keeps feature
  /// order, so the result does not depend on the thread count.
  bool parallel = false;
};

/// Weighted count, sum and sum of squares of a response.
struct NodeStats {
  double w = 0.0;
  double s = 0.0;
  double q = 0.0;

  void add(double weight, double v) {
    w += weight;
    s += weight * v;
    q += weight * v * v;
  }
  double sse() const { return w > 0.0 ? q - s * s / w : 0.0; }
  NodeStats operator+(const NodeStats& o) const { return {w + o.w, s + o.s, q + o.q}; }
  NodeStats operator-(const NodeStats& o) const { return {w - o.w, s - o.s, q - o.q}; }
};

/// Best split computed on observed values only (missing rows of each feature
/// are ignored by that feature's criterion). The returned split has
/// missing_route Left as a placeholder; callers assign the routing.
/// Ties go to the smaller feature index, then the smaller threshold.
/// `features` restricts the scan (empty = all); `weights` empty = unit weights.
std::optional<SplitCandidate> best_split_observed(const IncompleteMatrix& x, std::span<const double> y,
                                                  std::span<const std::uint32_t> rows,
                                                  const SplitParams& params,
                                                  std::span<const std::size_t> features = {},
                                                  std::span<const double> weights = {});

/// Missing-incorporated-in-attribute split: every threshold is scored with the
/// missing rows sent left and sent right, plus one missing-vs-observed split per
/// feature. The criterion is the within-child SSE over all node rows. Ties:
/// feature, threshold, Left before Right, thresholded before separate.
std::optional<SplitCandidate> best_split_mia(const IncompleteMatrix& x, std::span<const double> y,
                                             std::span<const std::uint32_t> rows,
                                             const SplitParams& params,
                                             std::span<const std::size_t> features = {},
                                             std::span<const double> weights = {});

/// Side minimizing the total squared error when every missing row is sent as
/// one block; Left on ties.
Side route_missing_block(const NodeStats& left_observed, const NodeStats& right_observed,
                         const NodeStats& missing);

/// Serial brute-force searches. Every candidate partition is materialized and
/// scored with a two-pass mean/deviation computation. Kept as the test oracle
/// and benchmark baseline for the scan kernels.
namespace reference {

std::optional<SplitCandidate> best_split_observed(const IncompleteMatrix& x, std::span<const double> y,
                                                  std::span<const std::uint32_t> rows,
                                                  const SplitParams& params);
std::optional<SplitCandidate> best_split_mia(const IncompleteMatrix& x, std::span<const double> y,
                                             std::span<const std::uint32_t> rows,
                                             const SplitParams& params);

}  // namespace reference

namespace detail {

/// Column-major copy of a matrix for cache-friendly scans.
struct ColumnStore {
  explicit ColumnStore(const IncompleteMatrix& x);
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::uint8_t>> mask;
};

/// Inputs shared by every feature scan of one node. `yc` holds responses
/// centered by the node mean and `w` the row weights, both indexed by row id.
struct NodeView {
  const ColumnStore* store = nullptr;
  std::span<const double> w;
  std::span<const double> yc;
  std::span<const std::uint32_t> rows;  // node rows, ascending
  NodeStats total;                      // over all node rows (centered)
};

struct FeatureBest {
  bool found = false;
  double criterion = 0.0;
  double threshold = 0.0;
  SplitKind kind = SplitKind::Thresholded;
  MissingRoute route = MissingRoute::Left;
};

/// `sorted_obs`: node rows observing feature j, ordered by (value, row id).
FeatureBest scan_observed(const NodeView& node, std::size_t j,
                          std::span<const std::uint32_t> sorted_obs, const SplitParams& params);
FeatureBest scan_mia(const NodeView& node, std::size_t j, std::span<const std::uint32_t> sorted_obs,
                     const SplitParams& params);

/// Runs `scan` over `features` (OpenMP when params.parallel) and reduces in
/// feature order with strict improvement.
template <typename Scan>
std::optional<SplitCandidate> reduce_features(std::span<const std::size_t> features,
                                              const SplitParams& params, Scan&& scan);

/// Midpoint between consecutive distinct values, never equal to `hi`.
double midpoint(double lo, double hi);

}  // namespace detail
}  // namespace nacart

#include "nacart/split_impl.hpp"
