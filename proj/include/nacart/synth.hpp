#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nacart/core.hpp"

namespace nacart {

enum class ModelId { Quadratic, Linear, Friedman, NonlinearFriedman };

/// Regression model with its covariate design.
///
/// Quadratic, Linear and Friedman draw X ~ N(1_d, rho 11' + (1 - rho) I).
/// NonlinearFriedman draws a hidden U[-3, 0] variable and builds ten noisy
/// transforms of it (noise sd 0.05 per feature); rho is unused there.
struct ModelSpec {
  ModelId model = ModelId::Quadratic;
  std::size_t d = 9;
  double rho = 0.5;
  double noise_sd = 0.1;

  /// Throws ConfigError on an inconsistent (model, d, rho, noise_sd).
  void validate() const;
};

enum class Mechanism { MCAR, QuantileMNAR, Predictive };

struct AmputationSpec {
  Mechanism mechanism = Mechanism::MCAR;
  std::vector<std::size_t> target_columns;  // 0-based
  double p = 0.2;
  double shift = 3.0;  // Predictive only

  void validate(std::size_t d) const;
};

struct LabeledDataset {
  IncompleteMatrix features;
  std::vector<double> y;
  /// Noiseless regression function f*(X) per row.
  std::vector<double> bayes_values;
  /// Hidden uniform driver of NonlinearFriedman; empty for the other models.
  /// Exposed for structural tests only.
  std::vector<double> hidden;
};

/// The linear model's coefficient vector.
std::span<const double> linear_beta();

/// f*(x) for a complete row.
double regression_function(ModelId model, std::span<const double> x);

/// Rows i.i.d. N(1_d, rho 11' + (1 - rho) I), sampled through the Cholesky factor.
IncompleteMatrix gen_gaussian_covariates(std::size_t n, std::size_t d, double rho,
                                         std::uint64_t seed);

LabeledDataset gen_model(const ModelSpec& spec, std::size_t n, std::uint64_t seed);

/// Masks cells according to MCAR or quantile-censoring MNAR. Predictive
/// missingness changes the target and must go through gen_predictive.
IncompleteMatrix ampute(const IncompleteMatrix& x, const AmputationSpec& spec, std::uint64_t seed);

/// Quadratic model with predictive missingness on `column`:
/// M ~ B(p) independent of X, y = x_col^2 + shift * M + eps, x_col masked where M = 1.
LabeledDataset gen_predictive(const ModelSpec& base, std::size_t n, double p, double shift,
                              std::uint64_t seed, std::size_t column = 0);

std::string to_string(ModelId m);
std::string to_string(Mechanism m);
ModelId parse_model(const std::string& s);
Mechanism parse_mechanism(const std::string& s);

}  // namespace nacart
