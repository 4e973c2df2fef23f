#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "nacart/bench.hpp"
#include "nacart/svg.hpp"

using namespace nacart;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.model.d = 4;
  c.pattern.target_columns = {0, 1};
  c.pattern.p = 0.2;
  c.n_train = 200;
  c.n_test = 200;
  c.reps = 3;
  c.methods = {Method::Mia, Method::ImputeMean, Method::ImputeGaussian};
  c.master_seed = 5;
  c.timings = false;
  return c;
}

std::string csv_of(const std::vector<RunRecord>& r) {
  std::ostringstream os;
  emit_csv(r, os);
  return os.str();
}

}  // namespace

TEST_CASE("r2 score") {
  std::vector<double> y{0.0, 1.0, 2.0};
  CHECK(r2_score(y, y) == 1.0);
  std::vector<double> mean(3, 1.0);
  CHECK(r2_score(y, mean) == 0.0);
  std::vector<double> p{0.0, 1.0, 1.0};
  CHECK(r2_score(y, p) == doctest::Approx(0.5).epsilon(1e-15));
  std::vector<double> flat(3, 2.0);
  CHECK_THROWS_AS(r2_score(flat, p), DataError);
}

TEST_CASE("relative scores center each repetition") {
  std::vector<RunRecord> r(4);
  r[0].method = "a";
  r[0].r2 = 0.8;
  r[1].method = "b";
  r[1].r2 = 0.6;
  r[2].rep = 1;
  r[2].method = "a";
  r[2].r2 = 0.3;
  r[3].rep = 1;
  r[3].method = "b";
  r[3].r2 = 0.2;
  auto s = relative_scores(r);
  CHECK(s[0] == doctest::Approx(0.1));
  CHECK(s[1] == doctest::Approx(-0.1));
  CHECK(std::abs(s[2] + s[3]) < 1e-12);
  for (auto& x : r) x.r2 += 0.25;
  auto t = relative_scores(r);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(s[i] - t[i]) < 1e-12);
}

TEST_CASE("Bayes rate without holes on the linear model") {
  ModelSpec m;
  m.model = ModelId::Linear;
  m.d = 10;
  m.noise_sd = 1.0;
  AmputationSpec a;
  a.target_columns = {0};
  a.p = 0.0;
  // Var(Y) = b'Sb + 1 with S = rho 11' + (1 - rho) I.
  auto b = linear_beta();
  const double sum = std::accumulate(b.begin(), b.end(), 0.0);
  double sq = 0.0;
  for (double v : b) sq += v * v;
  const double var_f = m.rho * sum * sum + (1.0 - m.rho) * sq;
  const double expected = 1.0 - 1.0 / (var_f + 1.0);
  CHECK(std::abs(estimate_bayes_rate(m, a, 20000, 1, 3) - expected) < 0.01);
}

TEST_CASE("Bayes rate decreases with the missing rate") {
  ModelSpec m;
  AmputationSpec a;
  a.target_columns = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  double prev = 2.0;
  for (double p : {0.0, 0.2, 0.4}) {
    a.p = p;
    const double r = estimate_bayes_rate(m, a, 4000, 200, 8);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("experiment cardinality and determinism") {
  auto c = small_config();
  c.reps = 1;
  c.methods = {Method::Mia, Method::Block};
  CHECK(run_experiment(c).size() == 2);

  auto d = small_config();
  auto first = csv_of(run_experiment(d));
  CHECK(first == csv_of(run_experiment(d)));
  d.threads = 1;
  CHECK(first == csv_of(run_experiment(d)));
  d.threads = 4;
  CHECK(first == csv_of(run_experiment(d)));
}

TEST_CASE("csv output round trips") {
  auto recs = run_experiment(small_config());
  auto text = csv_of(recs);
  CHECK(text.rfind(std::string(kBenchHeader) + "\n", 0) == 0);
  std::istringstream in(text);
  CHECK(read_records_csv(in) == recs);

  std::vector<RunRecord> one(1);
  one[0].method = "mia";
  auto single = csv_of(one);
  CHECK(std::count(single.begin(), single.end(), '\n') == 2);
  std::istringstream bad("rep,method\n0,mia\n");
  CHECK_THROWS_AS(read_records_csv(bad), DataError);
}

TEST_CASE("all methods run on every learner") {
  auto c = small_config();
  c.reps = 1;
  c.methods = all_methods();
  c.forest.trees = 5;
  c.boost.rounds = 5;
  for (auto l : {Learner::Tree, Learner::Forest, Learner::Boost}) {
    c.learner = l;
    for (const auto& r : run_experiment(c)) {
      CHECK(std::isfinite(r.r2));
      CHECK(r.learner == to_string(l));
    }
  }
}

TEST_CASE("method and learner names") {
  for (auto m : all_methods()) CHECK(parse_method(to_string(m)) == m);
  CHECK(to_string(Method::ImputeMeanMask) == "impute_mean+mask");
  CHECK_THROWS_AS(parse_method("knn"), ConfigError);
  CHECK_THROWS_AS(parse_learner("svm"), ConfigError);
}

TEST_CASE("selection experiment") {
  std::vector<double> none{0.0};
  std::vector<std::size_t> big{1000};
  auto rows = selection_frequency_experiment(none, big, MissingOn::X1Only, 100, 3);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].x1 + rows[0].x2 + rows[0].none == 100);
  CHECK(rows[0].freq_x1() > 0.9);

  std::vector<double> heavy{0.75};
  std::vector<std::size_t> small{50};
  auto x1only = selection_frequency_experiment(heavy, small, MissingOn::X1Only, 500, 4);
  auto both = selection_frequency_experiment(heavy, small, MissingOn::Both, 500, 4);
  CHECK(x1only[0].freq_x1() < 0.5);
  CHECK(both[0].freq_x1() > x1only[0].freq_x1());
}

TEST_CASE("svg output") {
  auto recs = run_experiment(small_config());
  std::ostringstream box, curve;
  emit_svg(recs, box, PlotKind::Box);
  emit_svg(recs, curve, PlotKind::Curve);
  CHECK(box.str().rfind("<svg", 0) == 0);
  CHECK(box.str().find("impute_mean") != std::string::npos);
  CHECK(curve.str().find("</svg>") != std::string::npos);
  std::vector<double> ps{0.0, 0.5}, etas{0.5};
  std::ostringstream th;
  emit_theory_svg(theory_curves(ps, etas), th);
  CHECK(th.str().find("</svg>") != std::string::npos);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == 1.75);
}

TEST_CASE("theory csv columns") {
  std::vector<double> ps{0.0}, etas{0.5};
  std::ostringstream os;
  emit_theory_csv(theory_curves(ps, etas), os);
  CHECK(os.str().rfind("p,eta,s_star_L,risk_mia,risk_block,risk_block_cf,risk_prob,risk_surr\n", 0) == 0);
}

TEST_CASE("experiment config validation") {
  auto c = small_config();
  c.methods.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.reps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
