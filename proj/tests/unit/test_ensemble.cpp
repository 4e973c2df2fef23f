#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nacart/bench.hpp"
#include "nacart/ensemble.hpp"
#include "nacart/rng.hpp"
#include "nacart/synth.hpp"

using namespace nacart;

namespace {

LabeledDataset data(ModelId model, std::size_t d, std::size_t n, double p, std::uint64_t seed) {
  ModelSpec spec;
  spec.model = model;
  spec.d = d;
  auto ds = gen_model(spec, n, seed);
  AmputationSpec a;
  for (std::size_t j = 0; j < d; ++j) a.target_columns.push_back(j);
  a.p = p;
  ds.features = ampute(ds.features, a, seed + 1);
  return ds;
}

double train_mse(const BoostModel& m, const LabeledDataset& ds) {
  auto pred = predict_ensemble(m, ds.features);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - ds.y[i]) * (pred[i] - ds.y[i]);
  return s / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("degenerate forest equals a single tree") {
  auto ds = data(ModelId::Friedman, 5, 400, 0.2, 1);
  TreeHyper h;
  ForestParams fp;
  fp.trees = 1;
  fp.bootstrap = false;
  fp.mtry = 5;
  auto f = fit_forest(ds.features, ds.y, Strategy::MIA, h, fp, 3);
  auto t = fit_tree(ds.features, ds.y, Strategy::MIA, h, mix_seed(3, {tag(Stage::TreeGrow), 0}));
  CHECK(predict_ensemble(f, ds.features) == t.predict(ds.features));
}

TEST_CASE("constant target gives constant predictions") {
  auto ds = data(ModelId::Quadratic, 3, 200, 0.2, 2);
  std::fill(ds.y.begin(), ds.y.end(), 2.5);
  ForestParams fp;
  fp.trees = 10;
  auto f = fit_forest(ds.features, ds.y, Strategy::Block, {}, fp, 1);
  for (double v : predict_ensemble(f, ds.features)) CHECK(v == 2.5);
  BoostParams bp;
  bp.rounds = 5;
  auto b = fit_boosting(ds.features, ds.y, Strategy::MIA, {}, bp, 1);
  for (double v : predict_ensemble(b, ds.features)) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("forest prediction is the mean of its trees, in any order") {
  auto ds = data(ModelId::Friedman, 5, 300, 0.2, 3);
  ForestParams fp;
  fp.trees = 7;
  auto f = fit_forest(ds.features, ds.y, Strategy::MIA, {}, fp, 4);
  auto g = f;
  std::reverse(g.trees.begin(), g.trees.end());
  auto a = predict_ensemble(f, ds.features);
  auto b = predict_ensemble(g, ds.features);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);

  ForestModel same = f;
  same.trees.assign(3, f.trees[0]);
  auto row = ds.features.row_values(0);
  auto mask = ds.features.row_mask(0);
  CHECK(predict_ensemble(same, row, mask) == doctest::Approx(f.trees[0].predict(row, mask)).epsilon(1e-15));
}

TEST_CASE("forests are deterministic and independent of tree parallelism") {
  auto ds = data(ModelId::Friedman, 5, 500, 0.3, 5);
  ForestParams fp;
  fp.trees = 12;
  auto a = predict_ensemble(fit_forest(ds.features, ds.y, Strategy::Probabilistic, {}, fp, 6), ds.features, 1);
  fp.parallel = false;
  auto b = predict_ensemble(fit_forest(ds.features, ds.y, Strategy::Probabilistic, {}, fp, 6), ds.features, 1);
  CHECK(a == b);
}

TEST_CASE("forest beats a single tree") {
  int wins = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    auto train = data(ModelId::Friedman, 5, 1000, 0.2, 100 + r);
    auto test = data(ModelId::Friedman, 5, 1000, 0.2, 200 + r);
    TreeHyper h;
    auto t = fit_tree(train.features, train.y, Strategy::MIA, h, r);
    auto f = fit_forest(train.features, train.y, Strategy::MIA, h, {}, r);
    wins += r2_score(test.y, predict_ensemble(f, test.features)) > r2_score(test.y, t.predict(test.features));
  }
  CHECK(wins >= 15);  // sign test, one-sided p < 0.05 at 20 reps
}

TEST_CASE("single boosting stage") {
  auto ds = data(ModelId::Friedman, 5, 300, 0.2, 7);
  BoostParams bp;
  bp.rounds = 1;
  bp.learning_rate = 1.0;
  TreeHyper h;
  h.max_depth = 30;
  auto b = fit_boosting(ds.features, ds.y, Strategy::MIA, h, bp, 1);
  REQUIRE(b.stages.size() == 1);
  auto row = ds.features.row_values(3);
  auto mask = ds.features.row_mask(3);
  CHECK(predict_ensemble(b, row, mask) == doctest::Approx(b.init_value + b.stages[0].predict(row, mask)));

  BoostModel zero = b;
  zero.stages[0].nodes.resize(1);
  zero.stages[0].nodes[0] = TreeNode{};
  CHECK(predict_ensemble(zero, row, mask) == b.init_value);
}

TEST_CASE("boosting training error does not increase") {
  auto ds = data(ModelId::Friedman, 5, 500, 0.2, 8);
  TreeHyper h;
  h.max_depth = 3;
  BoostParams bp;
  bp.rounds = 30;
  auto b = fit_boosting(ds.features, ds.y, Strategy::MIA, h, bp, 1);
  double prev = INFINITY;
  for (std::size_t m = 0; m <= b.stages.size(); ++m) {
    BoostModel part = b;
    part.stages.resize(m);
    const double mse = train_mse(part, ds);
    CHECK(mse <= prev + 1e-12);
    prev = mse;
  }
}

TEST_CASE("ensemble parameters are validated") {
  auto ds = data(ModelId::Quadratic, 3, 50, 0.0, 9);
  ForestParams fp;
  fp.trees = 0;
  CHECK_THROWS_AS(fit_forest(ds.features, ds.y, Strategy::MIA, {}, fp, 0), ConfigError);
  BoostParams bp;
  bp.learning_rate = 1.5;
  CHECK_THROWS_AS(fit_boosting(ds.features, ds.y, Strategy::MIA, {}, bp, 0), ConfigError);
}

TEST_CASE("boosted MIA nears boosted Gaussian imputation on the linear model") {
  ExperimentConfig c;
  c.model.model = ModelId::Linear;
  c.model.d = 10;
  c.pattern.target_columns = {0, 1, 2};
  c.pattern.p = 0.2;
  c.n_train = 10000;
  c.n_test = 2000;
  c.reps = 1;
  c.master_seed = 31;
  c.timings = false;
  c.methods = {Method::Mia, Method::ImputeGaussian};
  c.learner = Learner::Boost;
  auto boost = run_experiment(c);
  CHECK(std::abs(boost[0].r2 - boost[1].r2) < 0.05);
}
