#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "nacart/rng.hpp"
#include "nacart/split.hpp"
#include "nacart/theory.hpp"

using namespace nacart;

namespace {

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> r(n);
  std::iota(r.begin(), r.end(), 0u);
  return r;
}

struct Instance {
  IncompleteMatrix x;
  std::vector<double> y;
};

// Small instance with ties (values on a coarse grid) and MCAR holes.
Instance random_instance(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> nd(20, 200), dd(1, 5), level(0, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0), pmiss(0.0, 0.4);
  const std::size_t n = nd(rng), d = dd(rng);
  const double p = pmiss(rng);
  std::vector<double> v(n * d);
  std::vector<std::uint8_t> m(n * d);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      v[i * d + j] = static_cast<double>(level(rng)) / 4.0;
      m[i * d + j] = u(rng) < p;
    }
    y[i] = v[i * d] + (m[i * d] ? 1.0 : 0.0) + 0.3 * u(rng);
  }
  return {make_incomplete(std::move(v), std::move(m), n, d), std::move(y)};
}

void check_same(const std::optional<SplitCandidate>& a, const std::optional<SplitCandidate>& b) {
  REQUIRE(a.has_value() == b.has_value());
  if (!a) return;
  CHECK(a->criterion == doctest::Approx(b->criterion).epsilon(1e-10));
  CHECK(a->split.feature == b->split.feature);
  CHECK(a->split.kind == b->split.kind);
  CHECK(a->split.missing_route == b->split.missing_route);
  CHECK(a->split.threshold == b->split.threshold);
}

}  // namespace

TEST_CASE("scan kernels agree with the brute-force reference, serial and parallel") {
  for (std::uint64_t s = 1; s <= 60; ++s) {
    auto inst = random_instance(s);
    auto rows = all_rows(inst.x.rows());
    SplitParams serial;
    serial.min_leaf = 3;
    SplitParams par = serial;
    par.parallel = true;
    auto ref_obs = reference::best_split_observed(inst.x, inst.y, rows, serial);
    check_same(best_split_observed(inst.x, inst.y, rows, serial), ref_obs);
    check_same(best_split_observed(inst.x, inst.y, rows, par), ref_obs);
    auto ref_mia = reference::best_split_mia(inst.x, inst.y, rows, serial);
    check_same(best_split_mia(inst.x, inst.y, rows, serial), ref_mia);
    check_same(best_split_mia(inst.x, inst.y, rows, par), ref_mia);
  }
}

TEST_CASE("node-scaled criterion agrees with the reference") {
  for (std::uint64_t s = 100; s < 130; ++s) {
    auto inst = random_instance(s);
    auto rows = all_rows(inst.x.rows());
    SplitParams sp;
    sp.criterion = ObservedCriterion::NodeScaledGain;
    check_same(best_split_observed(inst.x, inst.y, rows, sp), reference::best_split_observed(inst.x, inst.y, rows, sp));
  }
}

TEST_CASE("observed split of y = x at one half, with or without holes") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 100000;
  std::vector<double> v(n), y(n);
  std::vector<std::uint8_t> none(n, 0), half(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = u(rng);
    y[i] = v[i];
    half[i] = u(rng) < 0.5;
  }
  auto rows = all_rows(n);
  auto full = best_split_observed(make_incomplete(v, none, n, 1), y, rows, {});
  REQUIRE(full);
  CHECK(std::abs(*full->split.threshold - 0.5) < 0.02);
  auto holes = best_split_observed(make_incomplete(v, half, n, 1), y, rows, {});
  REQUIRE(holes);
  CHECK(std::abs(*holes->split.threshold - 0.5) < 0.02);
}

TEST_CASE("MIA split matches the population argmin") {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 100000;
  const double p = 0.3;
  std::vector<double> v(n), y(n);
  std::vector<std::uint8_t> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = u(rng);
    y[i] = v[i];
    m[i] = u(rng) < p;
  }
  auto best = best_split_mia(make_incomplete(v, m, n, 1), y, all_rows(n), {});
  REQUIRE(best);
  REQUIRE(best->split.kind == SplitKind::Thresholded);
  const double z = *best->split.threshold;
  if (best->split.missing_route == MissingRoute::Left)
    CHECK(std::abs(z - argmin_c_mia(p, Side::Left)) < 0.02);
  else
    CHECK(std::abs(z - argmin_c_mia(p, Side::Right)) < 0.02);
}

TEST_CASE("no admissible split on identical values") {
  auto x = make_incomplete({{1.0}, {1.0}}, {{false}, {false}});
  std::vector<double> y{0.0, 1.0};
  SplitParams sp;
  sp.min_leaf = 1;
  CHECK(!best_split_observed(x, y, all_rows(2), sp));
}

TEST_CASE("missingness itself is the best MIA split") {
  std::vector<std::vector<double>> v;
  std::vector<std::vector<bool>> m;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    const bool miss = i % 3 == 0;
    v.push_back({static_cast<double>(i % 7), static_cast<double>(i % 5)});
    m.push_back({miss, false});
    y.push_back(miss ? 10.0 : 0.0);
  }
  auto x = make_incomplete(v, m);
  SplitParams sp;
  sp.min_leaf = 2;
  auto best = best_split_mia(x, y, all_rows(40), sp);
  REQUIRE(best);
  CHECK(best->split.feature == 0);
  CHECK(best->split.kind == SplitKind::MissingVsNonMissing);
  CHECK(best->criterion == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("MIA without holes equals the observed split") {
  for (std::uint64_t s = 200; s < 220; ++s) {
    Rng rng(s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 80, d = 3;
    std::vector<double> v(n * d), y(n);
    for (auto& e : v) e = u(rng);
    for (std::size_t i = 0; i < n; ++i) y[i] = v[i * d + 1] + 0.2 * u(rng);
    auto x = make_incomplete(v, std::vector<std::uint8_t>(n * d, 0), n, d);
    auto a = best_split_mia(x, y, all_rows(n), {});
    auto b = best_split_observed(x, y, all_rows(n), {});
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->split.feature == b->split.feature);
    CHECK(a->split.threshold == b->split.threshold);
    CHECK(a->criterion == doctest::Approx(b->criterion).epsilon(1e-10));
  }
}

TEST_CASE("block routing") {
  // Observed left y = {0, 0}, right y = {4, 4}, missing y = {0, 0}.
  NodeStats l, r, miss;
  for (double v : {0.0, 0.0}) l.add(1.0, v);
  for (double v : {4.0, 4.0}) r.add(1.0, v);
  for (double v : {0.0, 0.0}) miss.add(1.0, v);
  CHECK(route_missing_block(l, r, miss) == Side::Left);
  CHECK(route_missing_block(r, l, miss) == Side::Right);
  CHECK(route_missing_block(l, r, NodeStats{}) == Side::Left);
}

TEST_CASE("midpoint stays strictly below the upper value") {
  CHECK(detail::midpoint(1.0, 2.0) == 1.5);
  const double a = 1.0, b = std::nextafter(1.0, 2.0);
  CHECK(detail::midpoint(a, b) < b);
  CHECK(detail::midpoint(a, b) >= a);
}
