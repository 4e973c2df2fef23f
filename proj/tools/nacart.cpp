// nacart: command-line front end for simulation, imputation, tree fitting,
// theory tables and benchmarks.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nacart/bench.hpp"
#include "nacart/config.hpp"
#include "nacart/csv.hpp"
#include "nacart/ensemble.hpp"
#include "nacart/impute.hpp"
#include "nacart/svg.hpp"
#include "nacart/synth.hpp"
#include "nacart/theory.hpp"
#include "nacart/tree.hpp"

using namespace nacart;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "-";
  std::string format = "csv";
};

// Writes to a file, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw DataError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<std::size_t> parse_columns(const std::string& s) {
  std::vector<std::size_t> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto v = parse_number(tok);
    if (!v || *v < 1 || *v != std::floor(*v)) throw ConfigError("bad column index '" + tok + "' (1-based)");
    out.push_back(static_cast<std::size_t>(*v) - 1);
  }
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto v = parse_number(tok);
    if (!v) throw ConfigError("bad number '" + tok + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

// "a:b:step" or a comma list.
std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') == std::string::npos) return parse_list(s);
  std::stringstream ss(s);
  std::string a, b, c;
  std::getline(ss, a, ':');
  std::getline(ss, b, ':');
  std::getline(ss, c, ':');
  const auto lo = parse_number(a), hi = parse_number(b), step = parse_number(c);
  if (!lo || !hi || !step || !(*step > 0.0) || *hi < *lo) throw ConfigError("bad grid '" + s + "' (lo:hi:step)");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((*hi - *lo) / *step + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(*lo + static_cast<double>(k) * *step);
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (double v : parse_list(s)) {
    if (v < 1 || v != std::floor(v)) throw ConfigError("bad size in '" + s + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

IncompleteMatrix read_features(const std::string& path) { return read_csv(path).data; }

std::vector<double> read_target_for(const std::string& features, const std::string& target) {
  return read_target(target.empty() ? target_path_for(features) : target);
}

void write_features(const std::string& path, const IncompleteMatrix& x, std::vector<std::string> names = {}) {
  if (names.size() != x.cols()) names = default_names(x.cols());
  CsvTable t{names, x};
  if (path == "-") write_csv(std::cout, t);
  else write_csv(path, t);
}

struct SimulateArgs {
  std::string model = "quadratic";
  std::size_t n = 1000;
  std::size_t d = 9;
  double rho = 0.5;
  double noise_sd = 0.1;
  std::string pattern = "mcar";
  double p = 0.0;
  std::string cols = "1";
  double shift = 3.0;
};

struct AmputeArgs {
  std::string in;
  std::string pattern = "mcar";
  double p = 0.2;
  std::string cols = "1";
};

struct ImputeArgs {
  std::string method = "mean";
  bool mask = false;
  std::string train;
  std::string apply;
  std::string shrink = "trace";
};

struct EmArgs {
  std::string in;
  int max_iter = 500;
  double tol = 1e-8;
};

struct FitArgs {
  std::string strategy = "mia";
  std::string learner = "tree";
  TreeHyper hyper;
  std::size_t trees = 100;
  std::size_t mtry = 0;
  std::size_t rounds = 200;
  double lr = 0.1;
  std::string prob_mode = "stochastic";
  std::string train;
  std::string target;
  std::string dump;
  std::string test;
};

struct TheoryArgs {
  std::string p_grid = "0:0.95:0.05";
  std::string eta = "0.2,0.5,0.8";
  bool mc_check = false;
  std::size_t mc_n = 100000;
  std::size_t mc_reps = 20;
};

struct BenchArgs {
  SimulateArgs sim;
  std::string n_train = "1000";
  std::size_t n_test = 0;
  std::size_t reps = 100;
  std::string learner = "tree";
  std::string methods = "mia,surrogate,prob,block,impute_mean,impute_mean+mask,impute_oor,impute_oor+mask,impute_gaussian";
  std::size_t trees = 100;
  std::size_t mtry = 0;
  std::size_t rounds = 200;
  double lr = 0.1;
  int boost_depth = kBoostDepth;
  std::string timings = "on";
  int threads = 0;
  std::string plot = "box";
  std::string input;
  std::string shrink = "trace";
  TreeHyper hyper;
};

struct SelectArgs {
  std::string p_grid = "0,0.75";
  std::string n_grid = "50";
  std::string missing_on = "x1";
  std::size_t reps = 500;
};

ShrinkTarget parse_shrink(const std::string& s) {
  if (s == "trace") return ShrinkTarget::Trace;
  if (s == "trace-over-dim") return ShrinkTarget::TraceOverDim;
  throw ConfigError("unknown shrink target '" + s + "' (expected trace|trace-over-dim)");
}

void add_tree_options(CLI::App* c, TreeHyper& h) {
  c->add_option("--max-depth", h.max_depth, "Maximum depth");
  c->add_option("--min-leaf", h.min_leaf, "Minimum (weighted) rows per leaf");
  c->add_option("--min-split", h.min_split, "Minimum rows to attempt a split");
  c->add_option("--cp", h.cp, "Minimum split gain as a fraction of the root error (0 = off)");
}

AmputationSpec make_pattern(const std::string& pattern, double p, const std::string& cols, double shift) {
  AmputationSpec a;
  a.mechanism = parse_mechanism(pattern);
  a.p = p;
  a.target_columns = parse_columns(cols);
  a.shift = shift;
  return a;
}

ModelSpec make_model(const SimulateArgs& s) {
  ModelSpec m;
  m.model = parse_model(s.model);
  m.d = s.d;
  m.rho = s.rho;
  m.noise_sd = s.noise_sd;
  return m;
}

int run_simulate(const Globals& g, const SimulateArgs& a) {
  const ModelSpec spec = make_model(a);
  spec.validate();
  const AmputationSpec pat = make_pattern(a.pattern, a.p, a.cols, a.shift);
  pat.validate(spec.d);
  LabeledDataset ds;
  if (pat.mechanism == Mechanism::Predictive) {
    ds = gen_predictive(spec, a.n, pat.p, pat.shift, g.seed, pat.target_columns.empty() ? 0 : pat.target_columns[0]);
  } else {
    ds = gen_model(spec, a.n, g.seed);
    if (pat.p > 0.0) ds.features = ampute(ds.features, pat, mix_seed(g.seed, {tag(Stage::Amputation)}));
  }
  write_features(g.out, ds.features);
  if (g.out != "-") write_target(target_path_for(g.out), ds.y);
  return 0;
}

int run_ampute(const Globals& g, const AmputeArgs& a) {
  if (a.in.empty()) throw ConfigError("ampute: --in is required");
  const CsvTable t = read_csv(a.in);
  const AmputationSpec pat = make_pattern(a.pattern, a.p, a.cols, 3.0);
  pat.validate(t.data.cols());
  const auto out = ampute(t.data, pat, g.seed);
  write_features(g.out, out, t.names);
  if (g.out != "-") {
    std::ifstream y(target_path_for(a.in));
    if (y) write_target(target_path_for(g.out), read_target(target_path_for(a.in)));
  }
  return 0;
}

int run_impute(const Globals& g, const ImputeArgs& a) {
  if (a.train.empty()) throw ConfigError("impute: --train is required");
  const CsvTable train = read_csv(a.train);
  const CsvTable target = a.apply.empty() ? train : read_csv(a.apply);
  if (target.data.cols() != train.data.cols()) throw DataError("impute: train and apply column counts differ");
  IncompleteMatrix out;
  if (a.method == "mean" || a.method == "oor") {
    const auto imp = fit_constant(train.data, a.method == "mean" ? ConstantKind::Mean : ConstantKind::OutOfRange);
    for (auto j : imp.empty_columns)
      std::cerr << "warning: column " << j + 1 << " has no observed value in the training file; filled with 0\n";
    out = transform(imp, target.data, a.mask);
  } else if (a.method == "gaussian") {
    const auto imp = fit_gaussian_imputer(train.data, {}, parse_shrink(a.shrink));
    out = transform(imp, target.data, a.mask);
  } else {
    throw ConfigError("impute: unknown method '" + a.method + "' (expected mean|oor|gaussian)");
  }
  auto names = target.names;
  if (a.mask) {
    for (std::size_t j = 0; j < target.names.size(); ++j) names.push_back("M_" + target.names[j]);
  }
  write_features(g.out, out, names);
  return 0;
}

int run_em(const Globals& g, const EmArgs& a) {
  if (a.in.empty()) throw ConfigError("em: --in is required");
  if (a.max_iter < 1 || !(a.tol > 0.0)) throw ConfigError("em: need max-iter >= 1 and tol > 0");
  const auto x = read_features(a.in);
  const auto res = fit_gaussian_em(x, EmOptions{a.max_iter, a.tol});
  Output out(g.out);
  auto& os = out.stream();
  const auto& mu = res.params.mu;
  const auto& s = res.params.sigma;
  for (Eigen::Index i = 0; i < mu.size(); ++i) os << (i ? " " : "") << format_double(mu[i]);
  os << '\n';
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) os << (j ? " " : "") << format_double(s(i, j));
    os << '\n';
  }
  std::cerr << "em: " << res.iterations << " iterations, " << (res.converged ? "converged" : "not converged")
            << ", loglik " << format_double(res.loglik_trace.back()) << '\n';
  return 0;
}

int run_fit(const Globals& g, FitArgs a) {
  if (a.train.empty()) throw ConfigError("fit: --train is required");
  const Strategy strategy = parse_strategy(a.strategy);
  const Learner learner = parse_learner(a.learner);
  if (a.prob_mode == "expected") a.hyper.prob_prediction = ProbPrediction::Expected;
  else if (a.prob_mode != "stochastic") throw ConfigError("fit: --prob-mode must be stochastic|expected");
  a.hyper.validate();
  const auto x = read_features(a.train);
  const auto y = read_target_for(a.train, a.target);
  if (y.size() != x.rows()) throw DataError("fit: target length differs from feature rows");

  std::optional<IncompleteMatrix> test;
  if (!a.test.empty()) test = read_features(a.test);
  std::vector<double> pred;
  const auto fit_seed = mix_seed(g.seed, {tag(Stage::Fit)});
  const auto pred_seed = mix_seed(g.seed, {tag(Stage::Predict)});
  switch (learner) {
    case Learner::Tree: {
      const auto model = fit_tree(x, y, strategy, a.hyper, fit_seed);
      if (!a.dump.empty()) {
        std::ofstream os(a.dump);
        if (!os) throw DataError("cannot write '" + a.dump + "'");
        os << dump_tree(model);
      }
      if (test) pred = model.predict(*test, pred_seed);
      break;
    }
    case Learner::Forest: {
      ForestParams fp;
      fp.trees = a.trees;
      fp.mtry = a.mtry;
      const auto model = fit_forest(x, y, strategy, a.hyper, fp, fit_seed);
      if (!a.dump.empty()) {
        std::ofstream os(a.dump);
        if (!os) throw DataError("cannot write '" + a.dump + "'");
        for (std::size_t t = 0; t < model.trees.size(); ++t) os << "# tree " << t + 1 << '\n' << dump_tree(model.trees[t]);
      }
      if (test) pred = predict_ensemble(model, *test, pred_seed);
      break;
    }
    case Learner::Boost: {
      BoostParams bp;
      bp.rounds = a.rounds;
      bp.learning_rate = a.lr;
      const auto model = fit_boosting(x, y, strategy, a.hyper, bp, fit_seed);
      if (!a.dump.empty()) {
        std::ofstream os(a.dump);
        if (!os) throw DataError("cannot write '" + a.dump + "'");
        os << "# init " << format_double(model.init_value) << " lr " << format_double(model.learning_rate) << '\n';
        for (std::size_t t = 0; t < model.stages.size(); ++t)
          os << "# stage " << t + 1 << '\n' << dump_tree(model.stages[t]);
      }
      if (test) pred = predict_ensemble(model, *test, pred_seed);
      break;
    }
  }
  if (test) {
    Output out(g.out);
    out.stream() << "prediction\n";
    for (double v : pred) out.stream() << format_double(v) << '\n';
  }
  return 0;
}

int run_theory(const Globals& g, const TheoryArgs& a) {
  const auto grid = parse_grid(a.p_grid);
  const auto etas = parse_list(a.eta);
  const auto points = theory_curves(grid, etas);
  Output out(g.out);
  if (g.format == "svg") {
    emit_theory_svg(points, out.stream());
    return 0;
  }
  std::vector<TheoryMc> mc;
  if (a.mc_check) {
    for (std::size_t i = 0; i < points.size(); ++i)
      mc.push_back(theory_mc(points[i].p, points[i].eta, a.mc_n, a.mc_reps, mix_seed(g.seed, {i})));
  }
  emit_theory_csv(points, out.stream(), mc);
  return 0;
}

int run_bench(const Globals& g, const BenchArgs& a) {
  std::vector<RunRecord> all;
  if (!a.input.empty()) {
    all = read_records_csv(a.input);
  } else {
    ExperimentConfig c;
    c.model = make_model(a.sim);
    c.pattern = make_pattern(a.sim.pattern, a.sim.p, a.sim.cols, a.sim.shift);
    c.reps = a.reps;
    c.learner = parse_learner(a.learner);
    std::stringstream ss(a.methods);
    std::string tok;
    while (std::getline(ss, tok, ',')) c.methods.push_back(parse_method(tok));
    c.master_seed = g.seed;
    c.tree = a.hyper;
    c.forest.trees = a.trees;
    c.forest.mtry = a.mtry;
    c.boost.rounds = a.rounds;
    c.boost.learning_rate = a.lr;
    c.boost_depth = a.boost_depth;
    if (a.timings != "on" && a.timings != "off") throw ConfigError("bench: --timings must be on|off");
    c.timings = a.timings == "on";
    c.threads = a.threads;
    c.shrink = parse_shrink(a.shrink);
    for (auto n : parse_sizes(a.n_train)) {
      c.n_train = n;
      c.n_test = a.n_test ? a.n_test : n;
      auto recs = run_experiment(c);
      all.insert(all.end(), recs.begin(), recs.end());
    }
  }
  Output out(g.out);
  if (g.format == "svg") emit_svg(all, out.stream(), parse_plot_kind(a.plot));
  else emit_csv(all, out.stream());
  return 0;
}

int run_selectfreq(const Globals& g, const SelectArgs& a) {
  const auto p = parse_grid(a.p_grid);
  const auto n = parse_sizes(a.n_grid);
  const auto rows = selection_frequency_experiment(p, n, parse_missing_on(a.missing_on), a.reps, g.seed);
  Output out(g.out);
  emit_selection_csv(rows, out.stream());
  return 0;
}

// Inserts `--key=value` tokens from the config file right after the
// subcommand name so that later command-line flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args,
                                       const std::vector<std::string>& subcommands) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return rest;
  std::vector<std::string> cfg;
  for (const auto& [k, v] : read_config_file(path)) cfg.push_back("--" + k + "=" + v);
  auto it = std::find_if(rest.begin(), rest.end(), [&](const std::string& s) {
    return std::find(subcommands.begin(), subcommands.end(), s) != subcommands.end();
  });
  const auto pos = it == rest.end() ? rest.size() : static_cast<std::size_t>(it - rest.begin()) + 1;
  rest.insert(rest.begin() + static_cast<long>(pos), cfg.begin(), cfg.end());
  return rest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nacart: regression trees with missing values"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output path ('-' = stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "svg"}));
  std::string config_path;
  app.add_option("--config", config_path, "key = value file; command-line flags override it");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a dataset (features CSV plus sibling .y.csv)");
  auto add_sim = [](CLI::App* c, SimulateArgs& s) {
    c->add_option("--model", s.model, "quadratic|linear|friedman|nonlinear");
    c->add_option("--d", s.d, "Dimension");
    c->add_option("--rho", s.rho, "Covariate correlation");
    c->add_option("--noise-sd", s.noise_sd, "Noise standard deviation");
    c->add_option("--pattern", s.pattern, "mcar|mnar|predictive");
    c->add_option("--p", s.p, "Missing fraction");
    c->add_option("--cols", s.cols, "1-based target columns, comma separated");
    c->add_option("--shift", s.shift, "Predictive shift");
  };
  add_sim(c_sim, sim);
  c_sim->add_option("--n", sim.n, "Rows");

  AmputeArgs amp;
  auto* c_amp = app.add_subcommand("ampute", "Insert missing values into a complete CSV");
  c_amp->add_option("--in", amp.in, "Input CSV");
  c_amp->add_option("--pattern", amp.pattern, "mcar|mnar");
  c_amp->add_option("--p", amp.p, "Missing fraction");
  c_amp->add_option("--cols", amp.cols, "1-based target columns");

  ImputeArgs imp;
  auto* c_imp = app.add_subcommand("impute", "Fit an imputer on --train and apply it to --apply");
  c_imp->add_option("--method", imp.method, "mean|oor|gaussian");
  c_imp->add_flag("--mask,!--no-mask", imp.mask, "Append missingness indicators");
  c_imp->add_option("--train", imp.train, "Training CSV");
  c_imp->add_option("--apply", imp.apply, "CSV to impute (default: training file)");
  c_imp->add_option("--shrink", imp.shrink, "Gaussian covariance shrinkage: trace|trace-over-dim");

  EmArgs em;
  auto* c_em = app.add_subcommand("em", "Gaussian EM; prints mu then row-major Sigma");
  c_em->add_option("--in", em.in, "Input CSV");
  c_em->add_option("--max-iter", em.max_iter, "Iteration cap");
  c_em->add_option("--tol", em.tol, "Log-likelihood tolerance");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a tree, forest or boosting model");
  c_fit->add_option("--strategy", fit.strategy, "mia|surrogate|prob|block");
  c_fit->add_option("--learner", fit.learner, "tree|forest|boost");
  add_tree_options(c_fit, fit.hyper);
  c_fit->add_option("--trees", fit.trees, "Forest size");
  c_fit->add_option("--mtry", fit.mtry, "Features per split (0 = ceil(d/3))");
  c_fit->add_option("--rounds", fit.rounds, "Boosting rounds");
  c_fit->add_option("--lr", fit.lr, "Boosting learning rate");
  c_fit->add_option("--prob-mode", fit.prob_mode, "stochastic|expected");
  c_fit->add_option("--train", fit.train, "Training features CSV");
  c_fit->add_option("--target", fit.target, "Target CSV (default: sibling .y.csv)");
  c_fit->add_option("--dump", fit.dump, "Write the tree text dump here");
  c_fit->add_option("--test", fit.test, "Features to predict; predictions go to --out");

  TheoryArgs th;
  auto* c_th = app.add_subcommand("theory", "Closed-form stump risks and split positions");
  c_th->add_option("--p-grid", th.p_grid, "lo:hi:step or list");
  c_th->add_option("--eta", th.eta, "Comma-separated eta values");
  c_th->add_flag("--mc-check", th.mc_check, "Append Monte-Carlo stump risks");
  c_th->add_option("--mc-n", th.mc_n, "Monte-Carlo sample size");
  c_th->add_option("--mc-reps", th.mc_reps, "Monte-Carlo repetitions");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Run an experiment grid");
  add_sim(c_bench, bench.sim);
  c_bench->add_option("--n-train", bench.n_train, "Training size(s), comma separated");
  c_bench->add_option("--n-test", bench.n_test, "Test size (default: n-train)");
  c_bench->add_option("--reps", bench.reps, "Repetitions");
  c_bench->add_option("--learner", bench.learner, "tree|forest|boost");
  c_bench->add_option("--methods", bench.methods, "Comma-separated pipelines");
  add_tree_options(c_bench, bench.hyper);
  c_bench->add_option("--trees", bench.trees, "Forest size");
  c_bench->add_option("--mtry", bench.mtry, "Features per split (0 = ceil(d/3))");
  c_bench->add_option("--rounds", bench.rounds, "Boosting rounds");
  c_bench->add_option("--lr", bench.lr, "Boosting learning rate");
  c_bench->add_option("--boost-depth", bench.boost_depth, "Boosting tree depth");
  c_bench->add_option("--timings", bench.timings, "on|off");
  c_bench->add_option("--threads", bench.threads, "Worker threads (0 = default)");
  c_bench->add_option("--shrink", bench.shrink, "impute_gaussian covariance shrinkage: trace|trace-over-dim");
  c_bench->add_option("--plot", bench.plot, "box|curve (with --format svg)");
  c_bench->add_option("--input", bench.input, "Plot an existing bench CSV instead of running");
  bench.sim.p = 0.2;
  bench.sim.cols = "1,2,3";

  SelectArgs sel;
  auto* c_sel = app.add_subcommand("selectfreq", "Root-variable selection frequency of CART stumps");
  c_sel->add_option("--p-grid", sel.p_grid, "Missing fractions");
  c_sel->add_option("--n-grid", sel.n_grid, "Sample sizes");
  c_sel->add_option("--missing-on", sel.missing_on, "x1|both");
  c_sel->add_option("--reps", sel.reps, "Repetitions");

  try {
    std::vector<std::string> names;
    for (auto* s : app.get_subcommands({})) names.push_back(s->get_name());
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args, names);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*c_sim) return run_simulate(g, sim);
    if (*c_amp) return run_ampute(g, amp);
    if (*c_imp) return run_impute(g, imp);
    if (*c_em) return run_em(g, em);
    if (*c_fit) return run_fit(g, fit);
    if (*c_th) return run_theory(g, th);
    if (*c_bench) return run_bench(g, bench);
    if (*c_sel) return run_selectfreq(g, sel);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
