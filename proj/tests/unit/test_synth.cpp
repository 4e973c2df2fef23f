#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "nacart/synth.hpp"

using namespace nacart;

namespace {

double cov(const IncompleteMatrix& x, std::size_t a, std::size_t b) {
  const auto n = static_cast<double>(x.rows());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    ma += x.value(i, a);
    mb += x.value(i, b);
  }
  ma /= n;
  mb /= n;
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) s += (x.value(i, a) - ma) * (x.value(i, b) - mb);
  return s / (n - 1.0);
}

}  // namespace

TEST_CASE("independent design has identity covariance") {
  auto x = gen_gaussian_covariates(10000, 3, 0.0, 11);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) CHECK(std::abs(cov(x, a, b) - (a == b ? 1.0 : 0.0)) < 0.05);
}

TEST_CASE("correlated design reaches the requested correlation") {
  auto x = gen_gaussian_covariates(10000, 2, 0.9, 12);
  const double r = cov(x, 0, 1) / std::sqrt(cov(x, 0, 0) * cov(x, 1, 1));
  CHECK(std::abs(r - 0.9) < 0.02);
}

TEST_CASE("regression functions") {
  std::vector<double> half(9, 0.0);
  half[0] = 0.5;
  CHECK(regression_function(ModelId::Quadratic, half) == doctest::Approx(0.25).epsilon(1e-15));
  std::vector<double> ones(10, 1.0);
  CHECK(regression_function(ModelId::Linear, ones) == doctest::Approx(5.6).epsilon(1e-12));
  std::vector<double> f(5, 0.5);
  CHECK(regression_function(ModelId::Friedman, f) ==
        doctest::Approx(10.0 * std::sin(M_PI / 4.0) + 5.0 + 2.5).epsilon(1e-12));
}

TEST_CASE("model targets are f* plus noise") {
  ModelSpec spec;
  spec.noise_sd = 0.1;
  auto ds = gen_model(spec, 2000, 3);
  REQUIRE(ds.y.size() == 2000);
  double s = 0.0, q = 0.0;
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    CHECK(ds.bayes_values[i] == regression_function(ModelId::Quadratic, ds.features.row_values(i)));
    const double e = ds.y[i] - ds.bayes_values[i];
    s += e;
    q += e * e;
  }
  CHECK(std::abs(s / 2000.0) < 0.01);
  CHECK(std::abs(std::sqrt(q / 2000.0) - 0.1) < 0.01);
}

TEST_CASE("MCAR amputation") {
  auto x = gen_gaussian_covariates(5000, 2, 0.0, 4);
  AmputationSpec spec;
  spec.target_columns = {0, 1};
  spec.p = 0.0;
  CHECK(ampute(x, spec, 1) == x);
  spec.p = 0.2;
  auto a = ampute(x, spec, 1);
  const double frac = static_cast<double>(a.missing_count()) / 10000.0;
  CHECK(frac >= 0.19);
  CHECK(frac <= 0.21);
  CHECK(ampute(x, spec, 1) == a);
}

TEST_CASE("quantile MNAR masks the top of the column") {
  auto x = make_incomplete({{1.0}, {2.0}, {3.0}, {4.0}, {5.0}}, std::vector<std::vector<bool>>(5, {false}));
  AmputationSpec spec;
  spec.mechanism = Mechanism::QuantileMNAR;
  spec.target_columns = {0};
  spec.p = 0.4;
  auto a = ampute(x, spec, 9);
  CHECK(!a.missing(0, 0));
  CHECK(!a.missing(1, 0));
  CHECK(!a.missing(2, 0));
  CHECK(a.missing(3, 0));
  CHECK(a.missing(4, 0));
}

TEST_CASE("predictive pattern shifts the target where the cell is hidden") {
  ModelSpec base;
  auto ds = gen_predictive(base, 3000, 1.0, 3.0, 5);
  double mean_resid = 0.0;
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    CHECK(ds.features.missing(i, 0));
    CHECK(ds.bayes_values[i] >= 3.0);
    mean_resid += ds.y[i] - ds.bayes_values[i];
  }
  CHECK(std::abs(mean_resid / 3000.0) < 0.01);
  auto none = gen_predictive(base, 500, 0.0, 3.0, 5);
  CHECK(none.features.missing_count() == 0);
}

TEST_CASE("bad specs are configuration errors") {
  ModelSpec spec;
  spec.rho = 1.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  AmputationSpec a;
  a.target_columns = {12};
  CHECK_THROWS_AS(a.validate(9), ConfigError);
  CHECK_THROWS_AS(parse_model("nope"), ConfigError);
}
