#include "nacart/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nacart/rng.hpp"

namespace nacart {

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
}

double c_mia_left(double s, double p) {
  const double denom = p + (1.0 - p) * s;
  const double a = p / 2.0 + (1.0 - p) * s * s / 2.0;
  const double b = (1.0 + s) / 2.0;
  // An empty left cell (p = 0, s = 0) contributes nothing, its continuous limit.
  const double left = denom > 0.0 ? a * a / denom : 0.0;
  return 1.0 / 3.0 - left - (1.0 - p) * (1.0 - s) * b * b;
}

}  // namespace

double cart_root_criterion(double s) {
  check_unit(s, "s");
  return s * (s - 1.0) / 4.0 + 1.0 / 12.0;
}

double c_mia(double s, Side side, double p) {
  check_unit(s, "s");
  check_unit(p, "p");
  return side == Side::Left ? c_mia_left(s, p) : c_mia_left(1.0 - s, p);
}

double argmin_c_mia(double p, Side side, const ArgminOptions& options) {
  if (!(p >= 0.0 && p <= 0.999)) throw ConfigError("argmin_c_mia: p must lie in [0, 0.999]");
  if (options.grid_size < 2) throw ConfigError("argmin_c_mia: grid_size must be >= 2");
  if (!(options.refine_tol > 0.0)) throw ConfigError("argmin_c_mia: refine_tol must be > 0");
  // Work on the Left parametrization and mirror at the end.
  auto f = [p](double s) { return c_mia_left(s, p); };
  const double h = 1.0 / static_cast<double>(options.grid_size);
  std::size_t best_k = 0;
  double best = 0.0;
  bool found = false;
  for (std::size_t k = 0; k <= options.grid_size; ++k) {
    const double s = static_cast<double>(k) * h;
    if (p == 0.0 && s == 0.0) continue;
    const double v = f(s);
    if (!found || v < best) {
      found = true;
      best = v;
      best_k = k;
    }
  }
  double a = best_k == 0 ? 0.0 : static_cast<double>(best_k - 1) * h;
  double b = std::min(1.0, static_cast<double>(best_k + 1) * h);
  if (p == 0.0) a = std::max(a, 1e-12);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > options.refine_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  double s = 0.5 * (a + b);
  // Keep the grid point if refinement did not improve on it (boundary minima).
  const double s_grid = static_cast<double>(best_k) * h;
  if (f(s) > best) s = s_grid;
  return side == Side::Left ? s : 1.0 - s;
}

double min_c_mia(double p) {
  check_unit(p, "p");
  if (p > 0.999) return c_mia_left(1.0, p);
  return c_mia_left(argmin_c_mia(p, Side::Left), p);
}

TheoryPoint risk_closed_forms(double p, double eta) {
  check_unit(p, "p");
  check_unit(eta, "eta");
  TheoryPoint t;
  t.p = p;
  t.eta = eta;
  if (p <= 0.999) t.s_star_mia = argmin_c_mia(p, Side::Left);
  t.risk_mia = p <= eta ? min_c_mia(p) : min_c_mia(eta);
  t.risk_block = std::min(c_mia(0.5, Side::Left, p), c_mia(0.5, Side::Right, p));
  t.risk_block_cf = -11.0 / 48.0 + (3.0 * p + 2.0) / (8.0 * (2.0 * p + 1.0));
  t.risk_prob = -p * p / 16.0 + p / 8.0 + 1.0 / 48.0;
  t.risk_surr = 1.0 / 48.0 + 6.0 * eta * p / 48.0;
  return t;
}

std::vector<TheoryPoint> theory_curves(std::span<const double> p_grid, std::span<const double> eta_set) {
  std::vector<TheoryPoint> out;
  out.reserve(p_grid.size() * eta_set.size());
  for (double eta : eta_set) {
    for (double p : p_grid) out.push_back(risk_closed_forms(p, eta));
  }
  return out;
}

StumpDraw draw_stump_model(std::size_t n, double p, double eta, std::uint64_t seed) {
  check_unit(p, "p");
  check_unit(eta, "eta");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values(2 * n);
  std::vector<std::uint8_t> mask(2 * n, 0);
  StumpDraw out;
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = u(rng);
    const bool w0 = u(rng) < eta;
    const bool m1 = u(rng) < p;
    values[2 * i] = x1;
    values[2 * i + 1] = w0 ? 0.0 : x1;
    mask[2 * i] = m1 ? 1 : 0;
    out.y[i] = x1;
  }
  out.x = make_incomplete(std::move(values), std::move(mask), n, 2);
  return out;
}

McEstimate mc_stump_risk(Strategy strategy, double p, double eta, std::size_t n, std::size_t reps,
                         std::uint64_t seed, bool parallel) {
  TreeHyper hyper;
  hyper.surrogate_training = SurrogateTraining::ObservedOnly;
  return mc_stump_risk(strategy, p, eta, n, reps, seed, hyper, parallel);
}

McEstimate mc_stump_risk(Strategy strategy, double p, double eta, std::size_t n, std::size_t reps,
                         std::uint64_t seed, const TreeHyper& hyper_in, bool parallel) {
  if (reps < 1) throw ConfigError("mc_stump_risk: reps must be >= 1");
  if (n < 2) throw ConfigError("mc_stump_risk: n too small");
  TreeHyper hyper = hyper_in;
  hyper.max_depth = 1;
  hyper.parallel = false;
  std::vector<double> risks(reps);
  const auto nr = static_cast<long>(reps);
#pragma omp parallel for schedule(dynamic) if (parallel && nr > 1)
  for (long r = 0; r < nr; ++r) {
    const auto ru = static_cast<std::uint64_t>(r);
    const auto train = draw_stump_model(n, p, eta, mix_seed(seed, {ru, tag(Stage::TrainData)}));
    const auto test = draw_stump_model(n, p, eta, mix_seed(seed, {ru, tag(Stage::TestData)}));
    const auto tree = fit_tree(train.x, train.y, strategy, hyper, mix_seed(seed, {ru, tag(Stage::Fit)}));
    const auto pred = tree.predict(test.x, mix_seed(seed, {ru, tag(Stage::Predict)}));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (test.y[i] - pred[i]) * (test.y[i] - pred[i]);
    risks[r] = s / static_cast<double>(n);
  }
  McEstimate out;
  out.n = n;
  out.reps = reps;
  double m = 0.0;
  for (double v : risks) m += v;
  m /= static_cast<double>(reps);
  double ss = 0.0;
  for (double v : risks) ss += (v - m) * (v - m);
  out.mean = m;
  out.std_error = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps)) : 0.0;
  return out;
}

}  // namespace nacart
