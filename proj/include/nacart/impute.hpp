#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nacart/core.hpp"
#include "nacart/rng.hpp"

namespace nacart {

// ---------------------------------------------------------------------------
// Constant imputation (fit on train, apply the same alphas everywhere)
// ---------------------------------------------------------------------------

enum class ConstantKind { Mean, OutOfRange, Custom };

struct ConstantImputer {
  std::vector<double> alphas;
  ConstantKind kind = ConstantKind::Mean;
  /// Columns that were fully missing at fit time (filled with 0).
  std::vector<std::size_t> empty_columns;

  bool has_warnings() const { return !empty_columns.empty(); }
};

/// Mean: alpha_j = observed mean. OutOfRange: alpha_j = min_j - max(1, max_j - min_j).
/// Custom is rejected here; build it with make_custom_imputer.
ConstantImputer fit_constant(const IncompleteMatrix& train, ConstantKind kind);
ConstantImputer make_custom_imputer(std::vector<double> alphas);

/// Replaces every missing cell of column j by alpha_j. With `with_mask` the
/// d indicator columns are appended (computed from x's own mask).
IncompleteMatrix transform(const ConstantImputer& imp, const IncompleteMatrix& x,
                           bool with_mask = false);

// ---------------------------------------------------------------------------
// Multivariate Gaussian model
// ---------------------------------------------------------------------------

struct GaussianParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

struct EmOptions {
  int max_iter = 500;
  double tol = 1e-8;  // absolute change of the observed log-likelihood
};

struct EmResult {
  GaussianParams params;
  /// Observed log-likelihood at the initial point followed by one entry per iteration.
  /// A final +inf means the covariance became singular (exactly collinear columns).
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
};

/// Initial point used by fit_gaussian_em: observed column means and the
/// diagonal of observed column variances (+1e-6).
GaussianParams em_initial_params(const IncompleteMatrix& x);

/// One EM iteration from `current`: E-step fills per-row conditional first and
/// second moments of the missing block, M-step takes moment averages (divisor n).
GaussianParams em_step(const GaussianParams& current, const IncompleteMatrix& x);

/// Maximum-likelihood (mu, Sigma) from incomplete rows.
/// Throws DataError if n < 2 or a column has fewer than two observed values.
EmResult fit_gaussian_em(const IncompleteMatrix& train, const EmOptions& options = {});

/// Sum over rows of the log-density of each row's observed sub-vector
/// (constants included). Fully missing rows contribute 0.
double observed_loglik(const GaussianParams& params, const IncompleteMatrix& x);

struct ConditionalGaussian {
  std::vector<std::size_t> missing_idx;
  Eigen::VectorXd mu;     // over missing_idx
  Eigen::MatrixXd sigma;  // over missing_idx
};

/// Law of X_m given X_o = x_o by the Schur complement. `observed_idx` must be
/// strictly increasing; the missing block is its complement in 0..d-1.
ConditionalGaussian conditional_gaussian(const GaussianParams& params,
                                         std::span<const std::size_t> observed_idx,
                                         std::span<const double> observed_vals);

enum class ShrinkTarget {
  Trace,        // 0.99 Sigma + 0.01 tr(Sigma) I
  TraceOverDim  // 0.99 Sigma + 0.01 (tr(Sigma) / d) I
};

Eigen::MatrixXd shrink_covariance(const Eigen::MatrixXd& sigma,
                                  ShrinkTarget target = ShrinkTarget::Trace);

/// Replaces each row's missing block by its conditional mean. Rows with no
/// observed value receive mu.
IncompleteMatrix impute_conditional_mean(const GaussianParams& params, const IncompleteMatrix& x);

/// Fit-on-train Gaussian imputer: EM, then shrinkage, then conditional means.
struct GaussianImputer {
  GaussianParams params;  // after shrinkage
  EmResult em;
};

GaussianImputer fit_gaussian_imputer(const IncompleteMatrix& train, const EmOptions& options = {},
                                     ShrinkTarget target = ShrinkTarget::Trace);
IncompleteMatrix transform(const GaussianImputer& imp, const IncompleteMatrix& x,
                           bool with_mask = false);

// ---------------------------------------------------------------------------
// Conditional multiple imputation at prediction time
// ---------------------------------------------------------------------------

/// Fills the missing coordinates of `row` (flagged in `mask`) with one draw.
using ConditionalSampler =
    std::function<void(Rng& rng, std::span<double> row, std::span<const std::uint8_t> mask)>;

/// Predictor on complete rows.
using RowFunction = std::function<double(std::span<const double>)>;

/// Averages f over K completions drawn from `sampler`. A complete row
/// returns f(row) without sampling.
double multiple_impute_predict(std::span<const double> row, std::span<const std::uint8_t> mask,
                               const ConditionalSampler& sampler, const RowFunction& f,
                               std::size_t k, std::uint64_t seed);

/// Gaussian version: draws X_m | X_o from conditional_gaussian(params, ...).
double multiple_impute_predict(const GaussianParams& params, const RowFunction& f,
                               std::span<const double> row, std::span<const std::uint8_t> mask,
                               std::size_t k, std::uint64_t seed);

}  // namespace nacart
