#include "nacart/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "nacart/rng.hpp"

namespace nacart {
namespace {

constexpr std::array<double, 10> kBeta = {1.0, 2.0, -1.0, 3.0, -0.5, -1.0, 0.3, 1.7, 0.4, -0.3};
constexpr double kHiddenNoiseSd = 0.05;

void fill_nonlinear_features(double h, std::span<double> row) {
  row[0] = h * h;
  row[1] = std::sin(h);
  row[2] = std::tanh(h) * std::exp(h) * std::sin(h);
  row[3] = std::sin(h - 1.0) + std::pow(std::cos(h - 3.0), 3);
  row[4] = std::pow(1.0 - h, 3);
  row[5] = std::sqrt(std::sin(h * h) + 2.0);
  row[6] = h - 3.0;
  row[7] = (1.0 - h) * std::sin(h) * std::cosh(h);
  row[8] = 1.0 / (std::sin(2.0 * h) - 2.0);
  row[9] = std::pow(h, 4);
}

}  // namespace

std::string to_string(ModelId m) {
  switch (m) {
    case ModelId::Quadratic: return "quadratic";
    case ModelId::Linear: return "linear";
    case ModelId::Friedman: return "friedman";
    case ModelId::NonlinearFriedman: return "nonlinear";
  }
  return "?";
}

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::MCAR: return "mcar";
    case Mechanism::QuantileMNAR: return "mnar";
    case Mechanism::Predictive: return "predictive";
  }
  return "?";
}

ModelId parse_model(const std::string& s) {
  if (s == "quadratic") return ModelId::Quadratic;
  if (s == "linear") return ModelId::Linear;
  if (s == "friedman") return ModelId::Friedman;
  if (s == "nonlinear") return ModelId::NonlinearFriedman;
  throw ConfigError("unknown model '" + s + "'");
}

Mechanism parse_mechanism(const std::string& s) {
  if (s == "mcar") return Mechanism::MCAR;
  if (s == "mnar") return Mechanism::QuantileMNAR;
  if (s == "predictive") return Mechanism::Predictive;
  throw ConfigError("unknown missingness pattern '" + s + "'");
}

void ModelSpec::validate() const {
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be >= 0");
  switch (model) {
    case ModelId::Quadratic:
      if (d < 1) throw ConfigError("quadratic model needs d >= 1");
      break;
    case ModelId::Linear:
      if (d != kBeta.size()) throw ConfigError("linear model needs d = 10");
      break;
    case ModelId::Friedman:
      if (d < 5) throw ConfigError("friedman model needs d >= 5");
      break;
    case ModelId::NonlinearFriedman:
      if (d != 10) throw ConfigError("nonlinear model needs d = 10");
      break;
  }
}

void AmputationSpec::validate(std::size_t d) const {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("missing fraction p must lie in [0, 1]");
  for (auto j : target_columns) {
    if (j >= d) throw ConfigError("amputation column " + std::to_string(j + 1) + " out of range");
  }
  if (mechanism == Mechanism::Predictive && target_columns.size() > 1) {
    throw ConfigError("predictive missingness applies to exactly one column");
  }
}

std::span<const double> linear_beta() { return kBeta; }

double regression_function(ModelId model, std::span<const double> x) {
  using std::numbers::pi;
  switch (model) {
    case ModelId::Quadratic:
      return x[0] * x[0];
    case ModelId::Linear: {
      double s = 0.0;
      for (std::size_t j = 0; j < kBeta.size(); ++j) s += kBeta[j] * x[j];
      return s;
    }
    case ModelId::Friedman:
      return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
             10.0 * x[3] + 5.0 * x[4];
    case ModelId::NonlinearFriedman:
      return std::sin(pi * x[0] * x[1]) + 2.0 * (x[2] - 0.5) * (x[2] - 0.5) + x[3] + 0.5 * x[4];
  }
  return 0.0;
}

IncompleteMatrix gen_gaussian_covariates(std::size_t n, std::size_t d, double rho,
                                         std::uint64_t seed) {
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  if (n < 1 || d < 1) throw ConfigError("need n >= 1 and d >= 1");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(d, d, rho);
  sigma.diagonal().setOnes();
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  IncompleteMatrix x(n, d);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[j] = normal(rng);
    const Eigen::VectorXd row = chol * z;
    for (std::size_t j = 0; j < d; ++j) x.set(i, j, 1.0 + row[j]);
  }
  return x;
}

LabeledDataset gen_model(const ModelSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  LabeledDataset ds;
  Rng noise_rng(mix_seed(seed, {tag(Stage::Noise)}));
  std::normal_distribution<double> normal(0.0, 1.0);

  if (spec.model == ModelId::NonlinearFriedman) {
    Rng rng(mix_seed(seed, {tag(Stage::TrainData)}));
    std::uniform_real_distribution<double> hidden(-3.0, 0.0);
    ds.features = IncompleteMatrix(n, spec.d);
    ds.hidden.resize(n);
    std::array<double, 10> row{};
    for (std::size_t i = 0; i < n; ++i) {
      const double h = hidden(rng);
      ds.hidden[i] = h;
      fill_nonlinear_features(h, row);
      for (std::size_t j = 0; j < 10; ++j) ds.features.set(i, j, row[j] + kHiddenNoiseSd * normal(rng));
    }
  } else {
    ds.features = gen_gaussian_covariates(n, spec.d, spec.rho, mix_seed(seed, {tag(Stage::TrainData)}));
  }

  ds.y.resize(n);
  ds.bayes_values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = regression_function(spec.model, ds.features.row_values(i));
    ds.bayes_values[i] = f;
    ds.y[i] = f + spec.noise_sd * normal(noise_rng);
  }
  return ds;
}

IncompleteMatrix ampute(const IncompleteMatrix& x, const AmputationSpec& spec, std::uint64_t seed) {
  spec.validate(x.cols());
  if (spec.mechanism == Mechanism::Predictive) {
    throw ConfigError("predictive missingness rewrites the target; use gen_predictive");
  }
  for (auto j : spec.target_columns) {
    if (x.missing_count(j) != 0) {
      throw DataError("ampute: target column " + std::to_string(j + 1) + " is not complete");
    }
  }
  IncompleteMatrix out = x;
  const std::size_t n = x.rows();

  if (spec.mechanism == Mechanism::MCAR) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto j : spec.target_columns) {
        if (unif(rng) < spec.p) out.set_missing(i, j);
      }
    }
    return out;
  }

  // Censoring: mask values strictly above the order statistic of rank ceil((1 - p) n).
  for (auto j : spec.target_columns) {
    std::vector<double> col = x.column(j);
    std::sort(col.begin(), col.end());
    const double pos = (1.0 - spec.p) * static_cast<double>(n);
    const auto rank = static_cast<std::size_t>(std::max(0.0, std::ceil(pos - 1e-9)));
    for (std::size_t i = 0; i < n; ++i) {
      if (rank == 0 || x.value(i, j) > col[rank - 1]) out.set_missing(i, j);
    }
  }
  return out;
}

LabeledDataset gen_predictive(const ModelSpec& base, std::size_t n, double p, double shift,
                              std::uint64_t seed, std::size_t column) {
  if (base.model != ModelId::Quadratic) throw ConfigError("predictive missingness is defined on the quadratic model");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("missing fraction p must lie in [0, 1]");
  if (column >= base.d) throw ConfigError("predictive column out of range");

  // Same covariate and noise streams as gen_model, so p = 0 reproduces it exactly.
  LabeledDataset ds = gen_model(base, n, seed);
  Rng rng(mix_seed(seed, {tag(Stage::Amputation)}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double xj = ds.features.value(i, column);
    const double m = unif(rng) < p ? 1.0 : 0.0;
    const double f = xj * xj + shift * m;
    ds.y[i] += f - ds.bayes_values[i];
    ds.bayes_values[i] = f;
    if (m != 0.0) ds.features.set_missing(i, column);
  }
  return ds;
}

}  // namespace nacart
