#include "nacart/split.hpp"

#include <algorithm>
#include <numeric>

namespace nacart {
namespace detail {

ColumnStore::ColumnStore(const IncompleteMatrix& x)
    : n(x.rows()), d(x.cols()), values(x.cols()), mask(x.cols()) {
  for (std::size_t j = 0; j < d; ++j) {
    values[j].resize(n);
    mask[j].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      mask[j][i] = x.missing(i, j) ? 1 : 0;
      values[j][i] = x.missing(i, j) ? 0.0 : x.value(i, j);
    }
  }
}

double midpoint(double lo, double hi) {
  const double z = lo + 0.5 * (hi - lo);
  return z < hi ? z : lo;
}

FeatureBest scan_observed(const NodeView& node, std::size_t j,
                          std::span<const std::uint32_t> sorted_obs, const SplitParams& params) {
  FeatureBest best;
  if (sorted_obs.size() < 2) return best;
  const auto& col = node.store->values[j];
  const auto minl = static_cast<double>(params.min_leaf);

  NodeStats obs;
  for (auto r : sorted_obs) obs.add(node.w[r], node.yc[r]);
  if (obs.w < 2.0 * minl) return best;

  NodeStats left;
  double best_sse = 0.0;
  for (std::size_t k = 0; k + 1 < sorted_obs.size(); ++k) {
    const auto r = sorted_obs[k];
    left.add(node.w[r], node.yc[r]);
    const double v = col[r];
    const double v_next = col[sorted_obs[k + 1]];
    if (v == v_next || left.w < minl) continue;
    const NodeStats right = obs - left;
    if (right.w < minl) break;
    const double sse = left.sse() + right.sse();
    if (!best.found || sse < best_sse) {
      best.found = true;
      best_sse = sse;
      best.threshold = midpoint(v, v_next);
    }
  }
  if (!best.found) return best;

  if (obs.w == node.total.w) {
    best.criterion = best_sse;
  } else if (params.criterion == ObservedCriterion::PerObservedRow) {
    best.criterion = best_sse * (node.total.w / obs.w);
  } else {
    best.criterion = node.total.sse() - (obs.sse() - best_sse);
  }
  return best;
}

FeatureBest scan_mia(const NodeView& node, std::size_t j, std::span<const std::uint32_t> sorted_obs,
                     const SplitParams& params) {
  FeatureBest best;
  const auto& col = node.store->values[j];
  const auto& mask = node.store->mask[j];
  const auto minl = static_cast<double>(params.min_leaf);

  NodeStats obs, miss;
  for (auto r : sorted_obs) obs.add(node.w[r], node.yc[r]);
  for (auto r : node.rows) {
    if (mask[r]) miss.add(node.w[r], node.yc[r]);
  }

  auto consider = [&](const NodeStats& l, const NodeStats& r, double z, SplitKind kind, MissingRoute route) {
    if (l.w < minl || r.w < minl) return;
    const double sse = l.sse() + r.sse();
    if (!best.found || sse < best.criterion) {
      best.found = true;
      best.criterion = sse;
      best.threshold = z;
      best.kind = kind;
      best.route = route;
    }
  };

  NodeStats left;
  for (std::size_t k = 0; k + 1 < sorted_obs.size(); ++k) {
    const auto r = sorted_obs[k];
    left.add(node.w[r], node.yc[r]);
    const double v = col[r];
    const double v_next = col[sorted_obs[k + 1]];
    if (v == v_next) continue;
    const double z = midpoint(v, v_next);
    const NodeStats right = obs - left;
    consider(left + miss, right, z, SplitKind::Thresholded, MissingRoute::Left);
    consider(left, right + miss, z, SplitKind::Thresholded, MissingRoute::Right);
  }
  consider(obs, miss, 0.0, SplitKind::MissingVsNonMissing, MissingRoute::Separate);
  return best;
}

}  // namespace detail

namespace {

struct PreparedNode {
  detail::ColumnStore store;
  std::vector<double> w;
  std::vector<double> yc;
  std::vector<std::uint32_t> rows;
  std::vector<std::size_t> features;
  detail::NodeView view;

  PreparedNode(const IncompleteMatrix& x, std::span<const double> y, std::span<const std::uint32_t> rows_in,
               std::span<const std::size_t> features_in, std::span<const double> weights)
      : store(x), w(x.rows(), 1.0), yc(x.rows(), 0.0), rows(rows_in.begin(), rows_in.end()) {
    if (y.size() != x.rows()) throw DataError("split search: y length differs from row count");
    if (!weights.empty()) {
      if (weights.size() != x.rows()) throw DataError("split search: weight length differs from row count");
      std::copy(weights.begin(), weights.end(), w.begin());
    }
    std::sort(rows.begin(), rows.end());
    double ws = 0.0, s = 0.0;
    for (auto r : rows) {
      ws += w[r];
      s += w[r] * y[r];
    }
    const double mean = ws > 0.0 ? s / ws : 0.0;
    NodeStats total;
    for (auto r : rows) {
      yc[r] = y[r] - mean;
      total.add(w[r], yc[r]);
    }
    if (features_in.empty()) {
      features.resize(x.cols());
      std::iota(features.begin(), features.end(), std::size_t{0});
    } else {
      features.assign(features_in.begin(), features_in.end());
      std::sort(features.begin(), features.end());
    }
    view = detail::NodeView{&store, w, yc, rows, total};
  }

  std::vector<std::uint32_t> sorted_observed(std::size_t j) const {
    std::vector<std::uint32_t> out;
    for (auto r : rows) {
      if (!store.mask[j][r]) out.push_back(r);
    }
    const auto& col = store.values[j];
    std::stable_sort(out.begin(), out.end(), [&](auto a, auto b) { return col[a] < col[b]; });
    return out;
  }
};

}  // namespace

std::optional<SplitCandidate> best_split_observed(const IncompleteMatrix& x, std::span<const double> y,
                                                  std::span<const std::uint32_t> rows,
                                                  const SplitParams& params,
                                                  std::span<const std::size_t> features,
                                                  std::span<const double> weights) {
  PreparedNode node(x, y, rows, features, weights);
  return detail::reduce_features(node.features, params, [&](std::size_t j) {
    const auto sorted = node.sorted_observed(j);
    return detail::scan_observed(node.view, j, sorted, params);
  });
}

std::optional<SplitCandidate> best_split_mia(const IncompleteMatrix& x, std::span<const double> y,
                                             std::span<const std::uint32_t> rows,
                                             const SplitParams& params,
                                             std::span<const std::size_t> features,
                                             std::span<const double> weights) {
  PreparedNode node(x, y, rows, features, weights);
  return detail::reduce_features(node.features, params, [&](std::size_t j) {
    const auto sorted = node.sorted_observed(j);
    return detail::scan_mia(node.view, j, sorted, params);
  });
}

Side route_missing_block(const NodeStats& left_observed, const NodeStats& right_observed,
                         const NodeStats& missing) {
  const double err_left = (left_observed + missing).sse() + right_observed.sse();
  const double err_right = left_observed.sse() + (right_observed + missing).sse();
  return err_right < err_left ? Side::Right : Side::Left;
}

namespace reference {
namespace {

double two_pass_sse(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = 0.0;
  for (double a : v) m += a;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double a : v) s += (a - m) * (a - m);
  return s;
}

std::vector<double> distinct_observed(const IncompleteMatrix& x, std::span<const std::uint32_t> rows,
                                      std::size_t j) {
  std::vector<double> vals;
  for (auto r : rows) {
    if (!x.missing(r, j)) vals.push_back(x.value(r, j));
  }
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

}  // namespace

std::optional<SplitCandidate> best_split_observed(const IncompleteMatrix& x, std::span<const double> y,
                                                  std::span<const std::uint32_t> rows_in,
                                                  const SplitParams& params) {
  std::vector<std::uint32_t> rows(rows_in.begin(), rows_in.end());
  std::sort(rows.begin(), rows.end());
  std::vector<double> all;
  for (auto r : rows) all.push_back(y[r]);
  const double node_sse = two_pass_sse(all);
  const auto n_node = static_cast<double>(rows.size());

  std::optional<SplitCandidate> best;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto vals = distinct_observed(x, rows, j);
    std::vector<double> obs_y;
    for (auto r : rows) {
      if (!x.missing(r, j)) obs_y.push_back(y[r]);
    }
    const auto n_obs = static_cast<double>(obs_y.size());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double z = detail::midpoint(vals[k], vals[k + 1]);
      std::vector<double> left, right;
      for (auto r : rows) {
        if (x.missing(r, j)) continue;
        (x.value(r, j) <= z ? left : right).push_back(y[r]);
      }
      if (left.size() < params.min_leaf || right.size() < params.min_leaf) continue;
      const double sse = two_pass_sse(left) + two_pass_sse(right);
      double crit;
      if (obs_y.size() == rows.size()) {
        crit = sse;
      } else if (params.criterion == ObservedCriterion::PerObservedRow) {
        crit = sse * (n_node / n_obs);
      } else {
        crit = node_sse - (two_pass_sse(obs_y) - sse);
      }
      if (!best || crit < best->criterion) {
        SplitCandidate c;
        c.split.feature = j;
        c.split.threshold = z;
        c.criterion = crit;
        best = c;
      }
    }
  }
  return best;
}

std::optional<SplitCandidate> best_split_mia(const IncompleteMatrix& x, std::span<const double> y,
                                             std::span<const std::uint32_t> rows_in,
                                             const SplitParams& params) {
  std::vector<std::uint32_t> rows(rows_in.begin(), rows_in.end());
  std::sort(rows.begin(), rows.end());
  std::optional<SplitCandidate> best;

  auto consider = [&](const std::vector<double>& l, const std::vector<double>& r, std::size_t j,
                      std::optional<double> z, MissingRoute route, SplitKind kind) {
    if (l.size() < params.min_leaf || r.size() < params.min_leaf) return;
    const double crit = two_pass_sse(l) + two_pass_sse(r);
    if (!best || crit < best->criterion) {
      SplitCandidate c;
      c.split.feature = j;
      c.split.threshold = z;
      c.split.missing_route = route;
      c.split.kind = kind;
      c.criterion = crit;
      best = c;
    }
  };

  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto vals = distinct_observed(x, rows, j);
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double z = detail::midpoint(vals[k], vals[k + 1]);
      for (auto route : {MissingRoute::Left, MissingRoute::Right}) {
        std::vector<double> left, right;
        for (auto r : rows) {
          const bool go_left = x.missing(r, j) ? route == MissingRoute::Left : x.value(r, j) <= z;
          (go_left ? left : right).push_back(y[r]);
        }
        consider(left, right, j, z, route, SplitKind::Thresholded);
      }
    }
    std::vector<double> observed, missing;
    for (auto r : rows) (x.missing(r, j) ? missing : observed).push_back(y[r]);
    consider(observed, missing, j, std::nullopt, MissingRoute::Separate, SplitKind::MissingVsNonMissing);
  }
  return best;
}

}  // namespace reference
}  // namespace nacart
