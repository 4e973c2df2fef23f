#include "nacart/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "nacart/rng.hpp"

namespace nacart {

namespace {

void check_row(std::size_t d, std::span<const double> row, std::span<const std::uint8_t> mask) {
  if (row.size() != d || mask.size() != d) throw DataError("predict: row length differs from model dimension");
}

}  // namespace

ForestModel fit_forest(const IncompleteMatrix& x, std::span<const double> y, Strategy strategy,
                       const TreeHyper& hyper, const ForestParams& params, std::uint64_t seed) {
  if (params.trees < 1) throw ConfigError("forest: trees must be >= 1");
  if (params.mtry > x.cols()) throw ConfigError("forest: mtry exceeds feature count");
  if (x.rows() == 0 || x.cols() == 0) throw DataError("forest: empty data");
  if (y.size() != x.rows()) throw DataError("forest: y length differs from row count");
  check_target(y);

  ForestModel out;
  out.d = x.cols();
  out.bootstrap = params.bootstrap;
  out.mtry = params.mtry == 0 ? (x.cols() + 2) / 3 : params.mtry;
  TreeHyper th = hyper;
  th.mtry = out.mtry;
  th.parallel = false;

  const detail::PresortedData data(x);
  const auto nt = static_cast<long>(params.trees);
  std::vector<TreeModel> trees(params.trees);
  std::vector<std::string> errors(params.trees);
#pragma omp parallel for schedule(dynamic) if (params.parallel && nt > 1)
  for (long t = 0; t < nt; ++t) {
    try {
      const auto tu = static_cast<std::uint64_t>(t);
      std::vector<double> w;
      if (params.bootstrap) {
        w.assign(x.rows(), 0.0);
        Rng rng(mix_seed(seed, {tag(Stage::Bootstrap), tu}));
        std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
        for (std::size_t i = 0; i < x.rows(); ++i) w[pick(rng)] += 1.0;
      }
      trees[t] = detail::fit_tree_presorted(data, y, strategy, th, mix_seed(seed, {tag(Stage::TreeGrow), tu}), w);
    } catch (const std::exception& e) {
      errors[t] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DataError("forest: " + e);
  }
  out.trees = std::move(trees);
  return out;
}

BoostModel fit_boosting(const IncompleteMatrix& x, std::span<const double> y, Strategy strategy,
                        const TreeHyper& hyper, const BoostParams& params, std::uint64_t seed) {
  if (params.rounds < 1) throw ConfigError("boosting: rounds must be >= 1");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0))
    throw ConfigError("boosting: learning rate must lie in (0, 1]");
  if (x.rows() == 0) throw DataError("boosting: empty data");
  if (y.size() != x.rows()) throw DataError("boosting: y length differs from row count");
  check_target(y);

  BoostModel out;
  out.d = x.cols();
  out.learning_rate = params.learning_rate;
  double s = 0.0;
  for (double v : y) s += v;
  out.init_value = s / static_cast<double>(y.size());

  std::vector<double> f(y.size(), out.init_value);
  std::vector<double> resid(y.size());
  for (std::size_t m = 0; m < params.rounds; ++m) {
    for (std::size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - f[i];
    const auto stage_seed = mix_seed(seed, {tag(Stage::TreeGrow), static_cast<std::uint64_t>(m)});
    auto tree = fit_tree(x, resid, strategy, hyper, stage_seed);
    // Training predictions use the expected route so residuals do not pick up
    // routing noise.
    TreeModel expected = tree;
    expected.hyper.prob_prediction = ProbPrediction::Expected;
    for (std::size_t i = 0; i < y.size(); ++i)
      f[i] += params.learning_rate * expected.predict(x.row_values(i), x.row_mask(i));
    out.stages.push_back(std::move(tree));
  }
  return out;
}

double predict_ensemble(const ForestModel& m, std::span<const double> row, std::span<const std::uint8_t> mask,
                        std::uint64_t seed) {
  check_row(m.d, row, mask);
  double s = 0.0;
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    const auto& tree = m.trees[t];
    s += tree.predict(row, mask, tree.needs_seed() ? mix_seed(seed, {static_cast<std::uint64_t>(t)}) : 0);
  }
  return s / static_cast<double>(m.trees.size());
}

double predict_ensemble(const BoostModel& m, std::span<const double> row, std::span<const std::uint8_t> mask,
                        std::uint64_t seed) {
  check_row(m.d, row, mask);
  double s = m.init_value;
  for (std::size_t t = 0; t < m.stages.size(); ++t) {
    const auto& tree = m.stages[t];
    s += m.learning_rate *
         tree.predict(row, mask, tree.needs_seed() ? mix_seed(seed, {static_cast<std::uint64_t>(t)}) : 0);
  }
  return s;
}

std::vector<double> predict_ensemble(const ForestModel& m, const IncompleteMatrix& x, std::uint64_t seed) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    out[i] = predict_ensemble(m, x.row_values(i), x.row_mask(i), mix_seed(seed, {static_cast<std::uint64_t>(i)}));
  return out;
}

std::vector<double> predict_ensemble(const BoostModel& m, const IncompleteMatrix& x, std::uint64_t seed) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    out[i] = predict_ensemble(m, x.row_values(i), x.row_mask(i), mix_seed(seed, {static_cast<std::uint64_t>(i)}));
  return out;
}

}  // namespace nacart
