#include <cmath>
#include <vector>

#include "doctest.h"
#include "nacart/theory.hpp"

using namespace nacart;

namespace {

double grid_argmin(double p, Side side, std::size_t points) {
  double best = INFINITY, arg = 0.0;
  for (std::size_t k = 1; k < points; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(points);
    const double v = c_mia(s, side, p);
    if (v < best) {
      best = v;
      arg = s;
    }
  }
  return arg;
}

}  // namespace

TEST_CASE("root criterion") {
  CHECK(cart_root_criterion(0.5) == doctest::Approx(1.0 / 48.0).epsilon(1e-14));
  CHECK(cart_root_criterion(0.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  for (int k = 0; k <= 100; ++k) {
    const double s = k / 100.0;
    CHECK(std::abs(cart_root_criterion(s) - cart_root_criterion(1.0 - s)) < 1e-14);
  }
}

TEST_CASE("MIA criterion anchors and mirror") {
  CHECK(c_mia(0.5, Side::Left, 0.0) == doctest::Approx(1.0 / 48.0).epsilon(1e-14));
  for (int k = 1; k < 100; ++k) {
    const double s = k / 100.0;
    CHECK(std::abs(c_mia(s, Side::Right, 0.3) - c_mia(1.0 - s, Side::Left, 0.3)) < 1e-14);
    CHECK(std::abs(c_mia(s, Side::Left, 1.0) - 1.0 / 12.0) < 1e-14);
    CHECK(std::abs(c_mia(s, Side::Left, 0.0) - cart_root_criterion(s)) < 1e-12);
  }
}

TEST_CASE("argmin against a dense grid") {
  CHECK(std::abs(argmin_c_mia(0.0, Side::Left) - 0.5) < 1e-4);
  CHECK(std::abs(argmin_c_mia(0.5, Side::Left) - grid_argmin(0.5, Side::Left, 1000000)) < 1e-4);
  CHECK_THROWS_AS(argmin_c_mia(1.0, Side::Left), ConfigError);
}

TEST_CASE("direction of the missing-left argmin follows the grid oracle") {
  double prev_fast = argmin_c_mia(0.0, Side::Left);
  double prev_grid = grid_argmin(0.0, Side::Left, 100000);
  for (int k = 1; k <= 18; ++k) {
    const double p = 0.05 * k;
    const double fast = argmin_c_mia(p, Side::Left);
    const double grid = grid_argmin(p, Side::Left, 100000);
    CHECK(std::abs(fast - grid) < 1e-4);
    CHECK((fast > prev_fast) == (grid > prev_grid));
    prev_fast = fast;
    prev_grid = grid;
  }
}

TEST_CASE("closed-form risks") {
  auto zero = risk_closed_forms(0.0, 0.5);
  CHECK(zero.risk_prob == doctest::Approx(1.0 / 48.0).epsilon(1e-14));
  CHECK(zero.risk_surr == doctest::Approx(1.0 / 48.0).epsilon(1e-14));
  CHECK(zero.risk_mia == doctest::Approx(1.0 / 48.0).epsilon(1e-10));
  CHECK(zero.risk_block == doctest::Approx(1.0 / 48.0).epsilon(1e-14));
  CHECK(risk_closed_forms(1.0, 0.5).risk_prob == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  CHECK(risk_closed_forms(1.0, 1.0).risk_surr == doctest::Approx(7.0 / 48.0).epsilon(1e-14));
  CHECK(risk_closed_forms(0.5, 0.3).risk_prob == doctest::Approx(-0.25 / 16.0 + 0.5 / 8.0 + 1.0 / 48.0));
  CHECK(!risk_closed_forms(1.0, 0.5).s_star_mia.has_value());
}

TEST_CASE("risk curves ordering") {
  std::vector<double> ps, etas{0.0, 0.1, 0.5, 0.9, 1.0};
  for (int k = 0; k <= 20; ++k) ps.push_back(k / 20.0);
  for (const auto& t : theory_curves(ps, etas)) {
    for (double r : {t.risk_mia, t.risk_block, t.risk_prob, t.risk_surr}) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0 / 3.0);
    }
    CHECK(t.risk_mia <= t.risk_prob + 1e-12);
    CHECK(t.risk_mia <= t.risk_block + 1e-12);
  }
  auto strong = risk_closed_forms(0.5, 0.1);
  CHECK(strong.risk_surr < strong.risk_mia);
  auto weak = risk_closed_forms(0.5, 0.9);
  CHECK(weak.risk_surr > weak.risk_mia);
}

TEST_CASE("Monte-Carlo stump risks") {
  auto prob = mc_stump_risk(Strategy::Probabilistic, 0.5, 0.5, 100000, 20, 3);
  CHECK(std::abs(prob.mean - risk_closed_forms(0.5, 0.5).risk_prob) < 3.0 * prob.std_error + 1e-4);
  auto surr = mc_stump_risk(Strategy::Surrogate, 0.0, 0.5, 20000, 5, 4);
  CHECK(std::abs(surr.mean - 1.0 / 48.0) < 0.002);
  CHECK(prob.reps == 20);
  CHECK(prob.n == 100000);
}

TEST_CASE("Monte-Carlo is thread-independent") {
  auto a = mc_stump_risk(Strategy::Probabilistic, 0.3, 0.5, 2000, 4, 9, true);
  auto b = mc_stump_risk(Strategy::Probabilistic, 0.3, 0.5, 2000, 4, 9, false);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("stump model draw") {
  auto d = draw_stump_model(10000, 0.3, 0.2, 1);
  std::size_t miss = 0, zero = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    miss += d.x.missing(i, 0);
    zero += d.x.value(i, 1) == 0.0;
    if (!d.x.missing(i, 0)) CHECK(d.x.value(i, 0) == d.y[i]);
  }
  CHECK(std::abs(miss / 10000.0 - 0.3) < 0.02);
  CHECK(std::abs(zero / 10000.0 - 0.2) < 0.02);
}
