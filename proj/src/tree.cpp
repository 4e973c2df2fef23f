#include "nacart/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <tuple>

#include "nacart/csv.hpp"
#include "nacart/rng.hpp"

namespace nacart {

void TreeHyper::validate() const {
  if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (min_split < 1) throw ConfigError("min_split must be >= 1");
  if (surrogate_z < 0.0 || !std::isfinite(surrogate_z)) throw ConfigError("surrogate_z must be >= 0");
  if (!(cp >= 0.0 && cp < 1.0)) throw ConfigError("cp must lie in [0, 1)");
}

namespace {

using RowList = std::vector<std::uint32_t>;

enum : std::uint8_t { kLeft = 0, kRight = 1, kDrop = 2 };

// Surrogate search on presorted per-feature row lists (each ordered by value,
// then row id). `target` holds kLeft/kRight for rows observing the primary
// feature and kDrop elsewhere.
SurrogateFit surrogates_presorted(const detail::ColumnStore& store, std::span<const double> w,
                                  std::span<const std::uint8_t> target,
                                  const std::vector<std::span<const std::uint32_t>>& sorted,
                                  std::span<const std::uint32_t> rows, std::size_t primary,
                                  const SurrogateParams& params) {
  SurrogateFit out;
  double wl = 0.0, wr = 0.0;
  for (auto r : rows) {
    if (target[r] == kLeft) wl += w[r];
    else if (target[r] == kRight) wr += w[r];
  }
  out.majority_side = wr > wl ? Side::Right : Side::Left;

  for (std::size_t j = 0; j < store.d; ++j) {
    if (j == primary || sorted[j].empty()) continue;
    const auto& col = store.values[j];
    RowList pair;
    pair.reserve(sorted[j].size());
    for (auto r : sorted[j]) {
      if (target[r] != kDrop) pair.push_back(r);
    }
    if (pair.size() < 2) continue;
    double total = 0.0, total_left = 0.0;
    for (auto r : pair) {
      total += w[r];
      if (target[r] == kLeft) total_left += w[r];
    }
    const double blind = out.majority_side == Side::Left ? total - total_left : total_left;

    bool found = false;
    double best_err = 0.0, best_z = 0.0;
    bool best_flip = false;
    double pre_w = 0.0, pre_left = 0.0;
    for (std::size_t k = 0; k + 1 < pair.size(); ++k) {
      const auto r = pair[k];
      pre_w += w[r];
      if (target[r] == kLeft) pre_left += w[r];
      const double v = col[r], v_next = col[pair[k + 1]];
      if (v == v_next) continue;
      // x <= z -> Left: errors are right-targets below and left-targets above.
      const double err = (pre_w - pre_left) + (total_left - pre_left);
      const double err_flip = total - err;
      if (!found || err < best_err) {
        found = true;
        best_err = err;
        best_z = detail::midpoint(v, v_next);
        best_flip = false;
      }
      if (err_flip < best_err) {
        best_err = err_flip;
        best_z = detail::midpoint(v, v_next);
        best_flip = true;
      }
    }
    if (!found) continue;
    const double q = blind / total;
    const double margin = params.z * 2.0 * std::sqrt(q * (1.0 - q) * total);
    if (!(blind - best_err > margin)) continue;
    out.rules.push_back({j, best_z, best_flip, best_err / total});
  }
  std::stable_sort(out.rules.begin(), out.rules.end(),
                   [](const SurrogateRule& a, const SurrogateRule& b) { return a.misclassification < b.misclassification; });
  if (out.rules.size() > params.max_surrogates) out.rules.resize(params.max_surrogates);
  return out;
}

std::optional<Side> apply_surrogates(const std::vector<SurrogateRule>& rules, std::span<const double> row,
                                     std::span<const std::uint8_t> mask) {
  for (const auto& s : rules) {
    if (mask[s.feature]) continue;
    const bool below = row[s.feature] <= s.threshold;
    return below != s.direction_flip ? Side::Left : Side::Right;
  }
  return std::nullopt;
}

class Builder {
 public:
  Builder(const detail::PresortedData& data, std::span<const double> y, Strategy strategy, const TreeHyper& hyper,
          std::uint64_t seed, std::span<const double> weights)
      : store_(data.store), y_(y), strategy_(strategy), hyper_(hyper), seed_(seed), w_(data.store.n, 1.0),
        yc_(data.store.n, 0.0), side_(data.store.n, kDrop) {
    if (!weights.empty()) std::copy(weights.begin(), weights.end(), w_.begin());
    model_.strategy = strategy;
    model_.hyper = hyper;
    model_.d = store_.d;
    for (std::uint32_t r = 0; r < store_.n; ++r) {
      if (w_[r] > 0.0) rows_.push_back(r);
    }
    sorted_.resize(store_.d);
    for (std::size_t j = 0; j < store_.d; ++j) {
      sorted_[j].reserve(data.order[j].size());
      for (auto r : data.order[j]) {
        if (w_[r] > 0.0) sorted_[j].push_back(r);
      }
    }
    scratch_.resize(store_.n);
  }

  TreeModel run() {
    Work root;
    root.rows = {0, rows_.size()};
    root.feat.resize(store_.d);
    for (std::size_t j = 0; j < store_.d; ++j) root.feat[j] = {0, sorted_[j].size()};
    build(root, 0);
    return std::move(model_);
  }

 private:
  struct Range {
    std::size_t b = 0, e = 0;
    std::size_t size() const { return e - b; }
  };
  // Node rows live in rows_[rows.b, rows.e) (ascending row id); the rows
  // observing feature j in sorted_[j][feat[j].b, feat[j].e) (by value).
  struct Work {
    Range rows;
    std::vector<Range> feat;
  };

  std::span<const std::uint32_t> view(const std::vector<std::uint32_t>& v, Range r) const {
    return {v.data() + r.b, r.size()};
  }

  // Stable partition of v[r] into Left, Right, then dropped rows.
  std::pair<Range, Range> partition(std::vector<std::uint32_t>& v, Range r) {
    std::size_t out = r.b, nr = 0;
    for (std::size_t k = r.b; k < r.e; ++k) {
      const auto row = v[k];
      if (side_[row] == kLeft) v[out++] = row;
      else if (side_[row] == kRight) scratch_[nr++] = row;
    }
    const std::size_t left_end = out;
    for (std::size_t k = 0; k < nr; ++k) v[out++] = scratch_[k];
    return {Range{r.b, left_end}, Range{left_end, out}};
  }

  std::int32_t build(const Work& work, int depth) {
    const auto id = static_cast<std::int32_t>(model_.nodes.size());
    model_.nodes.emplace_back();
    const auto rows = view(rows_, work.rows);
    double wsum = 0.0, s = 0.0;
    double ymin = 0.0, ymax = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto r = rows[k];
      wsum += w_[r];
      s += w_[r] * y_[r];
      if (k == 0 || y_[r] < ymin) ymin = y_[r];
      if (k == 0 || y_[r] > ymax) ymax = y_[r];
    }
    const double mean = wsum > 0.0 ? s / wsum : 0.0;
    {
      auto& node = model_.nodes[id];
      node.value = mean;
      node.n_node = wsum;
      node.depth = depth;
    }
    if (depth >= hyper_.max_depth || wsum < static_cast<double>(hyper_.min_split) || ymin == ymax) return id;

    Rng rng(mix_seed(seed_, {tag(Stage::TreeGrow), static_cast<std::uint64_t>(id)}));
    const auto features = sample_features(rng);

    NodeStats total;
    for (auto r : rows) {
      yc_[r] = y_[r] - mean;
      total.add(w_[r], yc_[r]);
    }
    detail::NodeView node_view{&store_, w_, yc_, rows, total};
    SplitParams sp;
    sp.min_leaf = hyper_.min_leaf;
    sp.criterion = hyper_.criterion;
    sp.parallel = hyper_.parallel && rows.size() * features.size() >= 20000;
    std::optional<SplitCandidate> best;
    if (strategy_ == Strategy::MIA) {
      best = detail::reduce_features(features, sp, [&](std::size_t j) {
        return detail::scan_mia(node_view, j, view(sorted_[j], work.feat[j]), sp);
      });
    } else {
      best = detail::reduce_features(features, sp, [&](std::size_t j) {
        return detail::scan_observed(node_view, j, view(sorted_[j], work.feat[j]), sp);
      });
    }
    if (!best) return id;
    if (id == 0) root_sse_ = total.sse();
    if (hyper_.cp > 0.0 && total.sse() - best->criterion < hyper_.cp * root_sse_) return id;

    SplitSpec split = best->split;
    std::vector<SurrogateRule> surrogates;
    Side majority = Side::Left;
    assign_sides(work, rows, split, rng, surrogates, majority);

    std::size_t nl = 0, nr = 0;
    for (auto r : rows) {
      nl += side_[r] == kLeft;
      nr += side_[r] == kRight;
    }
    if (nl == 0 || nr == 0) return id;

    Work left, right;
    std::tie(left.rows, right.rows) = partition(rows_, work.rows);
    left.feat.resize(store_.d);
    right.feat.resize(store_.d);
    for (std::size_t j = 0; j < store_.d; ++j)
      std::tie(left.feat[j], right.feat[j]) = partition(sorted_[j], work.feat[j]);

    {
      auto& node = model_.nodes[id];
      node.split = split;
      node.surrogates = std::move(surrogates);
      node.majority_side = majority;
    }
    const auto l = build(left, depth + 1);
    const auto r = build(right, depth + 1);
    model_.nodes[id].left = l;
    model_.nodes[id].right = r;
    return id;
  }

  std::vector<std::size_t> sample_features(Rng& rng) const {
    std::vector<std::size_t> all(store_.d);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const std::size_t m = hyper_.mtry;
    if (m == 0 || m >= store_.d) return all;
    for (std::size_t k = 0; k < m; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, store_.d - 1);
      std::swap(all[k], all[pick(rng)]);
    }
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
  }

  // Fills side_ for the node rows and completes the missing-value route.
  void assign_sides(const Work& work, std::span<const std::uint32_t> rows, SplitSpec& split, Rng& rng,
                    std::vector<SurrogateRule>& surrogates, Side& majority) {
    const std::size_t j = split.feature;
    const auto& col = store_.values[j];
    const auto& mask = store_.mask[j];
    NodeStats lobs, robs, miss;
    double wl = 0.0, wr = 0.0;
    for (auto r : rows) {
      if (mask[r]) {
        side_[r] = kDrop;
        miss.add(w_[r], yc_[r]);
        continue;
      }
      const bool left = split.kind == SplitKind::MissingVsNonMissing || col[r] <= *split.threshold;
      side_[r] = left ? kLeft : kRight;
      (left ? lobs : robs).add(w_[r], yc_[r]);
      (left ? wl : wr) += w_[r];
    }

    switch (strategy_) {
      case Strategy::MIA:
        break;
      case Strategy::Block:
        split.missing_route = route_missing_block(lobs, robs, miss) == Side::Left ? MissingRoute::Left
                                                                                   : MissingRoute::Right;
        break;
      case Strategy::Probabilistic:
        split.missing_route = MissingRoute::Probabilistic;
        split.p_left = wl / (wl + wr);
        break;
      case Strategy::Surrogate: {
        split.missing_route = MissingRoute::SurrogateChain;
        SurrogateParams params{hyper_.max_surrogates, hyper_.surrogate_z};
        std::vector<std::span<const std::uint32_t>> lists(store_.d);
        for (std::size_t k = 0; k < store_.d; ++k) lists[k] = view(sorted_[k], work.feat[k]);
        auto fit = surrogates_presorted(store_, w_, side_, lists, rows, j, params);
        surrogates = std::move(fit.rules);
        majority = fit.majority_side;
        break;
      }
    }

    std::vector<double> row(store_.d);
    std::vector<std::uint8_t> row_mask(store_.d);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto r : rows) {
      if (!mask[r]) continue;
      switch (split.missing_route) {
        case MissingRoute::Left:
          side_[r] = kLeft;
          break;
        case MissingRoute::Right:
        case MissingRoute::Separate:
          side_[r] = kRight;
          break;
        case MissingRoute::Probabilistic:
          side_[r] = u(rng) < split.p_left ? kLeft : kRight;
          break;
        case MissingRoute::SurrogateChain: {
          if (hyper_.surrogate_training == SurrogateTraining::ObservedOnly) {
            side_[r] = kDrop;
            break;
          }
          for (std::size_t k = 0; k < store_.d; ++k) {
            row[k] = store_.values[k][r];
            row_mask[k] = store_.mask[k][r];
          }
          const auto s = apply_surrogates(surrogates, row, row_mask).value_or(majority);
          side_[r] = s == Side::Left ? kLeft : kRight;
          break;
        }
      }
    }
  }

  const detail::ColumnStore& store_;
  std::span<const double> y_;
  Strategy strategy_;
  TreeHyper hyper_;
  std::uint64_t seed_;
  std::vector<double> w_;
  std::vector<double> yc_;
  std::vector<std::uint8_t> side_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<std::uint32_t> scratch_;
  double root_sse_ = 0.0;
  TreeModel model_;
};

void check_fit_inputs(std::size_t n, std::size_t d, std::span<const double> y, const TreeHyper& hyper,
                      std::span<const double> weights) {
  hyper.validate();
  if (n == 0 || d == 0) throw DataError("fit_tree: empty data");
  if (y.size() != n) throw DataError("fit_tree: y length differs from row count");
  check_target(y);
  if (!weights.empty()) {
    if (weights.size() != n) throw DataError("fit_tree: weight length differs from row count");
    for (double v : weights) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw DataError("fit_tree: weights must be finite and >= 0");
    }
  }
  if (n > 0xFFFFFFFFu) throw DataError("fit_tree: too many rows");
}

}  // namespace

SurrogateFit fit_surrogates(const IncompleteMatrix& x, std::span<const std::uint32_t> rows,
                            const SplitSpec& primary, const SurrogateParams& params,
                            std::span<const double> weights) {
  if (primary.kind != SplitKind::Thresholded || !primary.threshold)
    throw ConfigError("fit_surrogates: primary split must be thresholded");
  if (primary.feature >= x.cols()) throw DataError("fit_surrogates: primary feature out of range");
  if (!weights.empty() && weights.size() != x.rows()) throw DataError("fit_surrogates: weight length mismatch");
  detail::ColumnStore store(x);
  std::vector<double> w(x.rows(), 1.0);
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), w.begin());
  RowList sorted_rows(rows.begin(), rows.end());
  std::sort(sorted_rows.begin(), sorted_rows.end());

  std::vector<std::uint8_t> target(x.rows(), kDrop);
  for (auto r : sorted_rows) {
    if (!x.missing(r, primary.feature)) target[r] = x.value(r, primary.feature) <= *primary.threshold ? kLeft : kRight;
  }
  std::vector<RowList> sorted(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (auto r : sorted_rows) {
      if (!store.mask[j][r]) sorted[j].push_back(r);
    }
    const auto& col = store.values[j];
    std::stable_sort(sorted[j].begin(), sorted[j].end(), [&](auto a, auto b) { return col[a] < col[b]; });
  }
  std::vector<std::span<const std::uint32_t>> lists(sorted.begin(), sorted.end());
  return surrogates_presorted(store, w, target, lists, sorted_rows, primary.feature, params);
}

namespace detail {

PresortedData::PresortedData(const IncompleteMatrix& x) : store(x), order(x.cols()) {
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto& list = order[j];
    for (std::uint32_t r = 0; r < store.n; ++r) {
      if (!store.mask[j][r]) list.push_back(r);
    }
    const auto& col = store.values[j];
    std::stable_sort(list.begin(), list.end(), [&](auto a, auto b) { return col[a] < col[b]; });
  }
}

TreeModel fit_tree_presorted(const PresortedData& data, std::span<const double> y, Strategy strategy,
                             const TreeHyper& hyper, std::uint64_t seed, std::span<const double> weights) {
  check_fit_inputs(data.store.n, data.store.d, y, hyper, weights);
  Builder b(data, y, strategy, hyper, seed, weights);
  return b.run();
}

}  // namespace detail

TreeModel fit_tree(const IncompleteMatrix& x, std::span<const double> y, Strategy strategy,
                   const TreeHyper& hyper, std::uint64_t seed, std::span<const double> weights) {
  check_fit_inputs(x.rows(), x.cols(), y, hyper, weights);
  const detail::PresortedData data(x);
  Builder b(data, y, strategy, hyper, seed, weights);
  return b.run();
}

double TreeModel::predict(std::span<const double> row, std::span<const std::uint8_t> mask,
                          std::uint64_t seed) const {
  if (row.size() != d || mask.size() != d) throw DataError("predict: row length differs from model dimension");
  if (strategy == Strategy::Probabilistic && hyper.prob_prediction == ProbPrediction::Expected)
    return predict_expected(0, row, mask);
  return nodes[leaf_index(row, mask, seed)].value;
}

double TreeModel::predict_expected(std::size_t k, std::span<const double> row,
                                   std::span<const std::uint8_t> mask) const {
  while (!nodes[k].is_leaf()) {
    const auto& node = nodes[k];
    const auto& sp = *node.split;
    if (mask[sp.feature] && sp.missing_route == MissingRoute::Probabilistic) {
      return sp.p_left * predict_expected(node.left, row, mask) +
             (1.0 - sp.p_left) * predict_expected(node.right, row, mask);
    }
    bool left;
    if (!mask[sp.feature]) {
      left = sp.kind == SplitKind::MissingVsNonMissing || row[sp.feature] <= *sp.threshold;
    } else {
      left = sp.missing_route == MissingRoute::Left;
    }
    k = left ? node.left : node.right;
  }
  return nodes[k].value;
}

std::size_t TreeModel::leaf_index(std::span<const double> row, std::span<const std::uint8_t> mask,
                                  std::uint64_t seed) const {
  if (row.size() != d || mask.size() != d) throw DataError("predict: row length differs from model dimension");
  std::optional<Rng> rng;
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const auto& node = nodes[k];
    const auto& sp = *node.split;
    Side side;
    if (!mask[sp.feature]) {
      side = (sp.kind == SplitKind::MissingVsNonMissing || row[sp.feature] <= *sp.threshold) ? Side::Left
                                                                                             : Side::Right;
    } else {
      switch (sp.missing_route) {
        case MissingRoute::Left:
          side = Side::Left;
          break;
        case MissingRoute::Right:
        case MissingRoute::Separate:
          side = Side::Right;
          break;
        case MissingRoute::Probabilistic: {
          if (!rng) rng.emplace(seed);
          std::uniform_real_distribution<double> u(0.0, 1.0);
          side = u(*rng) < sp.p_left ? Side::Left : Side::Right;
          break;
        }
        default:
          side = apply_surrogates(node.surrogates, row, mask).value_or(node.majority_side);
          break;
      }
    }
    k = side == Side::Left ? node.left : node.right;
  }
  return k;
}

std::vector<double> TreeModel::predict(const IncompleteMatrix& x, std::uint64_t seed) const {
  if (x.cols() != d) throw DataError("predict: column count differs from model dimension");
  std::vector<double> out(x.rows());
  const bool seeded = needs_seed();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto s = seeded ? mix_seed(seed, {static_cast<std::uint64_t>(i)}) : 0;
    out[i] = predict(x.row_values(i), x.row_mask(i), s);
  }
  return out;
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int TreeModel::depth() const {
  int out = 0;
  for (const auto& n : nodes) out = std::max(out, n.depth);
  return out;
}

bool TreeModel::needs_seed() const {
  return strategy == Strategy::Probabilistic && hyper.prob_prediction == ProbPrediction::Stochastic;
}

std::optional<std::size_t> selected_root_feature(const TreeModel& model) {
  if (model.nodes.empty() || model.nodes[0].is_leaf()) return std::nullopt;
  return model.nodes[0].split->feature;
}

namespace {

std::string count_str(double w) {
  if (w == std::floor(w) && std::abs(w) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", w);
    return buf;
  }
  return format_double(w);
}

void dump_node(const TreeModel& m, std::size_t k, std::ostringstream& os) {
  const auto& node = m.nodes[k];
  os << std::string(2 * static_cast<std::size_t>(node.depth), ' ');
  if (node.is_leaf()) {
    os << "leaf n=" << count_str(node.n_node) << " value=" << format_double(node.value) << '\n';
    return;
  }
  const auto& sp = *node.split;
  os << "j=" << sp.feature + 1 << " z=" << (sp.threshold ? format_double(*sp.threshold) : std::string("NA"))
     << " miss=";
  switch (sp.missing_route) {
    case MissingRoute::Left: os << 'L'; break;
    case MissingRoute::Right: os << 'R'; break;
    case MissingRoute::Separate: os << "SEP"; break;
    case MissingRoute::Probabilistic: os << "P:" << format_double(sp.p_left); break;
    case MissingRoute::SurrogateChain: os << (node.majority_side == Side::Left ? 'L' : 'R'); break;
  }
  os << " n=" << count_str(node.n_node) << " value=" << format_double(node.value);
  if (!node.surrogates.empty()) {
    os << " surr=";
    for (std::size_t i = 0; i < node.surrogates.size(); ++i) {
      const auto& s = node.surrogates[i];
      if (i) os << ',';
      os << s.feature + 1 << (s.direction_flip ? ">" : "<=") << format_double(s.threshold);
    }
  }
  os << '\n';
  dump_node(m, static_cast<std::size_t>(node.left), os);
  dump_node(m, static_cast<std::size_t>(node.right), os);
}

}  // namespace

std::string dump_tree(const TreeModel& model) {
  std::ostringstream os;
  if (!model.nodes.empty()) dump_node(model, 0, os);
  return os.str();
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Surrogate: return "surrogate";
    case Strategy::Probabilistic: return "prob";
    case Strategy::Block: return "block";
    case Strategy::MIA: return "mia";
  }
  return "?";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "mia") return Strategy::MIA;
  if (s == "surrogate") return Strategy::Surrogate;
  if (s == "prob" || s == "probabilistic") return Strategy::Probabilistic;
  if (s == "block") return Strategy::Block;
  throw ConfigError("unknown strategy '" + s + "' (expected mia|surrogate|prob|block)");
}

}  // namespace nacart
