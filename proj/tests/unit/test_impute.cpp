#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nacart/impute.hpp"
#include "nacart/synth.hpp"

using namespace nacart;

TEST_CASE("constant imputers") {
  auto x = make_incomplete({{1.0, 0.0}, {0.0, 1.0}, {3.0, 0.0}}, {{false, false}, {true, false}, {false, false}});
  auto mean = fit_constant(x, ConstantKind::Mean);
  CHECK(mean.alphas[0] == 2.0);
  auto oor = fit_constant(x, ConstantKind::OutOfRange);
  CHECK(oor.alphas[1] == -1.0);
  CHECK(oor.alphas[0] == 1.0 - 2.0);

  auto empty = make_incomplete({{0.0}, {0.0}}, {{true}, {true}});
  auto e = fit_constant(empty, ConstantKind::Mean);
  CHECK(e.alphas[0] == 0.0);
  CHECK(e.has_warnings());
  CHECK_THROWS_AS(fit_constant(x, ConstantKind::Custom), ConfigError);
}

TEST_CASE("constant transform substitutes alphas") {
  auto imp = make_custom_imputer({9.0, 0.0});
  auto row = make_incomplete({{0.0, 5.0}}, {{true, false}});
  auto t = transform(imp, row);
  CHECK(t.complete());
  CHECK(t.value(0, 0) == 9.0);
  CHECK(t.value(0, 1) == 5.0);
  auto masked = transform(imp, row, true);
  REQUIRE(masked.cols() == 4);
  CHECK(masked.value(0, 2) == 1.0);
  auto full = make_incomplete({{1.0, 2.0}}, {{false, false}});
  CHECK(transform(imp, full) == full);
}

TEST_CASE("one EM step on complete data gives sample moments") {
  auto x = gen_gaussian_covariates(500, 3, 0.3, 21);
  auto p = em_step(em_initial_params(x), x);
  const auto n = static_cast<double>(x.rows());
  for (std::size_t a = 0; a < 3; ++a) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) m += x.value(i, a);
    m /= n;
    CHECK(p.mu(a) == doctest::Approx(m).epsilon(1e-12));
  }
  double s01 = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) s01 += (x.value(i, 0) - p.mu(0)) * (x.value(i, 1) - p.mu(1));
  CHECK(p.sigma(0, 1) == doctest::Approx(s01 / n).epsilon(1e-10));
}

TEST_CASE("observed log-likelihood anchors") {
  GaussianParams g;
  g.mu = Eigen::VectorXd::Constant(1, 0.7);
  g.sigma = Eigen::MatrixXd::Identity(1, 1);
  auto one = make_incomplete({{0.7}}, {{false}});
  CHECK(observed_loglik(g, one) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  auto miss = make_incomplete({{0.0}}, {{true}});
  CHECK(observed_loglik(g, miss) == 0.0);
}

TEST_CASE("EM log-likelihood never decreases") {
  auto x = gen_gaussian_covariates(400, 4, 0.6, 8);
  AmputationSpec spec;
  spec.target_columns = {0, 1, 2, 3};
  spec.p = 0.3;
  auto a = ampute(x, spec, 2);
  auto r = fit_gaussian_em(a);
  CHECK(r.converged);
  for (std::size_t k = 1; k < r.loglik_trace.size(); ++k) CHECK(r.loglik_trace[k] >= r.loglik_trace[k - 1] - 1e-9);
}

TEST_CASE("EM rejects degenerate input") {
  auto x = make_incomplete({{1.0, 0.0}, {2.0, 0.0}}, {{false, true}, {false, false}});
  CHECK_THROWS_AS(fit_gaussian_em(x), DataError);
}

TEST_CASE("conditional Gaussian") {
  GaussianParams g;
  g.mu = Eigen::Vector3d(1.0, 2.0, 3.0);
  g.sigma = Eigen::Matrix3d::Identity();
  std::vector<std::size_t> obs{1};
  std::vector<double> val{10.0};
  auto c = conditional_gaussian(g, obs, val);
  REQUIRE(c.missing_idx == std::vector<std::size_t>{0, 2});
  CHECK(c.mu(0) == 1.0);
  CHECK(c.mu(1) == 3.0);
  CHECK(c.sigma.isApprox(Eigen::Matrix2d::Identity()));

  g.sigma << 1.0, 0.5, 0.0, 0.5, 2.0, 0.0, 0.0, 0.0, 1.0;
  auto d = conditional_gaussian(g, obs, val);
  CHECK(d.mu(0) == doctest::Approx(1.0 + 0.25 * 8.0));
  CHECK(d.sigma(0, 0) == doctest::Approx(1.0 - 0.125));

  std::vector<std::size_t> all{0, 1, 2};
  std::vector<double> vals{1.0, 1.0, 1.0};
  CHECK(conditional_gaussian(g, all, vals).missing_idx.empty());
}

TEST_CASE("covariance shrinkage") {
  Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK(shrink_covariance(i2).isApprox(1.01 * i2));
  CHECK(shrink_covariance(Eigen::MatrixXd::Zero(3, 3)).isZero());
  Eigen::MatrixXd r1 = Eigen::VectorXd::Ones(3) * Eigen::RowVectorXd::Ones(3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shrink_covariance(r1));
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("conditional mean imputation") {
  GaussianParams g;
  g.mu = Eigen::Vector2d(4.0, -1.0);
  g.sigma = Eigen::Matrix2d::Identity();
  auto x = make_incomplete({{0.0, 3.0}, {7.0, 0.0}, {0.0, 0.0}}, {{true, false}, {false, true}, {true, true}});
  auto t = impute_conditional_mean(g, x);
  CHECK(t.value(0, 0) == 4.0);
  CHECK(t.value(1, 1) == -1.0);
  CHECK(t.value(2, 0) == 4.0);
  auto full = make_incomplete({{1.0, 2.0}}, {{false, false}});
  CHECK(impute_conditional_mean(g, full) == full);
}

TEST_CASE("duplicated feature is imputed from its twin") {
  Rng rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> v(300, std::vector<double>(2));
  std::vector<std::vector<bool>> m(300, std::vector<bool>(2, false));
  for (std::size_t i = 0; i < 300; ++i) {
    v[i][0] = z(rng);
    v[i][1] = v[i][0];
    if (i % 4 == 0) m[i][1] = true;
  }
  auto x = make_incomplete(v, m);
  EmOptions opt;
  opt.tol = 1e-12;
  opt.max_iter = 5000;
  GaussianParams g = fit_gaussian_em(x, opt).params;
  auto t = impute_conditional_mean(g, x);
  for (std::size_t i = 0; i < 300; i += 4) CHECK(std::abs(t.value(i, 1) - v[i][0]) < 1e-3);
}

TEST_CASE("multiple imputation prediction") {
  auto square = [](std::span<const double> r) { return r[0] * r[0]; };
  auto uniform = [](Rng& rng, std::span<double> row, std::span<const std::uint8_t> mask) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (mask[j]) row[j] = u(rng);
  };
  std::vector<double> row{0.3};
  std::vector<std::uint8_t> obs{0};
  CHECK(multiple_impute_predict(row, obs, uniform, square, 10, 1) == 0.09);
  std::vector<std::uint8_t> miss{1};
  CHECK(std::abs(multiple_impute_predict(row, miss, uniform, square, 100000, 1) - 1.0 / 3.0) < 0.01);
}

TEST_CASE("Gaussian multiple imputation converges to the conditional mean") {
  GaussianParams g;
  g.mu = Eigen::Vector2d(1.0, 0.0);
  g.sigma.resize(2, 2);
  g.sigma << 1.0, 0.8, 0.8, 1.0;
  std::vector<double> row{0.0, 2.0};
  std::vector<std::uint8_t> mask{1, 0};
  auto first = [](std::span<const double> r) { return r[0]; };
  const double k = 100000.0;
  const double est = multiple_impute_predict(g, first, row, mask, 100000, 5);
  const double cond_mean = 1.0 + 0.8 * 2.0;
  const double cond_sd = std::sqrt(1.0 - 0.64);
  CHECK(std::abs(est - cond_mean) < 3.0 * cond_sd / std::sqrt(k));
}

TEST_CASE("pattern-mixture gap: imputation misses the shifted mean") {
  // X ~ U(0,1), Y = X + 1{M=1}: the conditional law of X is the same under
  // both masks, so imputation predicts 1/2 while the Bayes answer is 3/2.
  auto id = [](std::span<const double> r) { return r[0]; };
  auto uniform = [](Rng& rng, std::span<double> row, std::span<const std::uint8_t> mask) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (mask[0]) row[0] = u(rng);
  };
  std::vector<double> row{0.0};
  std::vector<std::uint8_t> miss{1};
  const double mi = multiple_impute_predict(row, miss, uniform, id, 20000, 2);
  CHECK(std::abs(mi - 0.5) < 0.01);
  CHECK(std::abs(mi - 1.5) > 0.9);
}
