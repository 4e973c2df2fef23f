#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nacart/split.hpp"
#include "nacart/tree.hpp"

namespace nacart {

/// Population CART criterion at the root for Y = X1, X1 ~ U(0,1), split at s.
double cart_root_criterion(double s);

/// Population MIA criterion for the same model when X1 is missing with
/// probability p and missing rows go to `side`. Side Right mirrors Left at 1 - s.
double c_mia(double s, Side side, double p);

struct ArgminOptions {
  std::size_t grid_size = 10000;
  double refine_tol = 1e-6;
};

/// Minimizer of c_mia over s in [0, 1]: grid scan then golden-section refinement.
/// p must lie in [0, 0.999].
double argmin_c_mia(double p, Side side, const ArgminOptions& options = {});

/// min_s c_mia(s, Left, p); p = 1 gives the constant 1/12.
double min_c_mia(double p);

struct TheoryPoint {
  double p = 0.0;
  double eta = 0.0;
  std::optional<double> s_star_mia;  // absent for p > 0.999
  double risk_mia = 0.0;
  double risk_block = 0.0;     // best side of c_mia at s = 1/2
  double risk_block_cf = 0.0;  // closed form -11/48 + (3p + 2) / (8 (2p + 1))
  double risk_prob = 0.0;
  double risk_surr = 0.0;
};

/// Single-split risks of the four strategies on the two-feature model
/// Y = X1, X2 = X1 1{W=1}, P[W=0] = eta, X1 missing with probability p.
/// The MIA risk switches to the X2 split value min_s c_mia(s, L, eta) when p > eta.
TheoryPoint risk_closed_forms(double p, double eta);

std::vector<TheoryPoint> theory_curves(std::span<const double> p_grid, std::span<const double> eta_set);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::size_t reps = 0;
};

struct StumpDraw {
  IncompleteMatrix x;
  std::vector<double> y;
};

/// n rows of the two-feature model above.
StumpDraw draw_stump_model(std::size_t n, double p, double eta, std::uint64_t seed);

/// Monte-Carlo test risk of a depth-one tree fitted with `strategy` on the
/// model above. Each rep fits on n rows and scores on n fresh rows.
/// Surrogate stumps leave rows lacking X1 out of the leaf means, as in the
/// infinite-sample analysis; pass a hyper with Routed training to compare.
McEstimate mc_stump_risk(Strategy strategy, double p, double eta, std::size_t n, std::size_t reps,
                         std::uint64_t seed, bool parallel = true);

/// Variant with explicit tree settings (max_depth is forced to 1).
McEstimate mc_stump_risk(Strategy strategy, double p, double eta, std::size_t n, std::size_t reps,
                         std::uint64_t seed, const TreeHyper& hyper, bool parallel = true);

}  // namespace nacart
