#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nacart/ensemble.hpp"
#include "nacart/impute.hpp"
#include "nacart/synth.hpp"
#include "nacart/theory.hpp"
#include "nacart/tree.hpp"

namespace nacart {

enum class Learner { Tree, Forest, Boost };

/// Registered pipelines. The first four run a tree strategy on the incomplete
/// data; the rest impute first (fitted on train, applied to test) and then grow
/// trees on complete data.
enum class Method {
  Mia,
  Surrogate,
  Prob,
  Block,
  ImputeMean,
  ImputeMeanMask,
  ImputeOor,
  ImputeOorMask,
  ImputeGaussian,
};

std::string to_string(Learner l);
Learner parse_learner(const std::string& s);
std::string to_string(Method m);
Method parse_method(const std::string& s);
std::vector<Method> all_methods();

struct ExperimentConfig {
  ModelSpec model;
  AmputationSpec pattern;
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  std::size_t reps = 100;
  Learner learner = Learner::Tree;
  std::vector<Method> methods;
  std::uint64_t master_seed = 0;
  TreeHyper tree;
  ForestParams forest;
  BoostParams boost;
  int boost_depth = kBoostDepth;
  ShrinkTarget shrink = ShrinkTarget::Trace;  // impute_gaussian covariance shrinkage
  /// Record wall-clock fit/predict times; off writes zeros so output bytes
  /// depend on the seed only.
  bool timings = true;
  /// Worker threads for repetitions; 0 = OpenMP default.
  int threads = 0;

  void validate() const;
};

struct RunRecord {
  std::size_t rep = 0;
  std::string method;
  std::string learner;
  std::string model;
  std::string pattern;
  double p = 0.0;
  double rho = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double r2 = 0.0;
  std::int64_t fit_ms = 0;
  std::int64_t predict_ms = 0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// 1 - SS_res / SS_tot. Throws DataError on a constant target.
double r2_score(std::span<const double> y_true, std::span<const double> y_pred);

/// Per-repetition centering: each record's r2 minus the mean r2 of the
/// methods sharing its rep and configuration. Output is aligned with input.
std::vector<double> relative_scores(std::span<const RunRecord> records);

/// R2 of the Bayes predictor E[f(X) | observed part] under MCAR, computed by
/// multiple imputation with the true regression function and the true
/// Gaussian covariate law on n_large fresh rows.
double estimate_bayes_rate(const ModelSpec& model, const AmputationSpec& pattern, std::size_t n_large,
                           std::size_t k, std::uint64_t seed);

/// Train/test pair of one repetition (features amputed, targets aligned).
struct RepData {
  LabeledDataset train;
  LabeledDataset test;
};
RepData make_rep_data(const ExperimentConfig& config, std::size_t rep);

/// Runs every method on every repetition. Records are ordered by (rep, method
/// order in the config) whatever the thread count.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

enum class MissingOn { X1Only, Both };
std::string to_string(MissingOn m);
MissingOn parse_missing_on(const std::string& s);

struct SelectionRow {
  double p = 0.0;
  std::size_t n = 0;
  MissingOn missing_on = MissingOn::X1Only;
  std::size_t reps = 0;
  std::size_t x1 = 0;    // stumps rooted on X1
  std::size_t x2 = 0;    // stumps rooted on X2
  std::size_t none = 0;  // no admissible split
  double freq_x1() const { return reps ? static_cast<double>(x1) / static_cast<double>(reps) : 0.0; }
};

/// Stump settings for the selection experiment: NodeScaledGain criterion.
TreeHyper selection_hyper();

/// Root-variable selection of CART stumps on Y = 0.25 X1 + e with X1, X2, e
/// independent standard normal and MCAR holes. Stumps use the rpart-style
/// observed criterion.
std::vector<SelectionRow> selection_frequency_experiment(std::span<const double> p_grid,
                                                         std::span<const std::size_t> n_grid, MissingOn missing_on,
                                                         std::size_t reps, std::uint64_t seed,
                                                         const TreeHyper& hyper = selection_hyper());

inline constexpr const char* kBenchHeader =
    "rep,method,learner,model,pattern,p,rho,n_train,n_test,r2,fit_ms,predict_ms";

void emit_csv(std::span<const RunRecord> records, std::ostream& os);
void emit_csv(std::span<const RunRecord> records, const std::string& path);
std::vector<RunRecord> read_records_csv(std::istream& is);
std::vector<RunRecord> read_records_csv(const std::string& path);

/// Monte-Carlo stump risks backing one theory point.
struct TheoryMc {
  McEstimate mia, block, prob, surr;
};

/// Theory table; with `mc` (aligned with `points`) the Monte-Carlo columns are
/// appended: mc_mia,mc_se,mc_block,mc_block_se,mc_prob,mc_prob_se,mc_surr,mc_surr_se.
void emit_theory_csv(std::span<const TheoryPoint> points, std::ostream& os, std::span<const TheoryMc> mc = {});
TheoryMc theory_mc(double p, double eta, std::size_t n, std::size_t reps, std::uint64_t seed);
void emit_selection_csv(std::span<const SelectionRow> rows, std::ostream& os);

}  // namespace nacart
