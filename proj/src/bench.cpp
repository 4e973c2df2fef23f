#include "nacart/bench.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "nacart/csv.hpp"
#include "nacart/impute.hpp"
#include "nacart/rng.hpp"

namespace nacart {

std::string to_string(Learner l) {
  switch (l) {
    case Learner::Tree: return "tree";
    case Learner::Forest: return "forest";
    case Learner::Boost: return "boost";
  }
  return "?";
}

Learner parse_learner(const std::string& s) {
  if (s == "tree") return Learner::Tree;
  if (s == "forest") return Learner::Forest;
  if (s == "boost") return Learner::Boost;
  throw ConfigError("unknown learner '" + s + "' (expected tree|forest|boost)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Mia: return "mia";
    case Method::Surrogate: return "surrogate";
    case Method::Prob: return "prob";
    case Method::Block: return "block";
    case Method::ImputeMean: return "impute_mean";
    case Method::ImputeMeanMask: return "impute_mean+mask";
    case Method::ImputeOor: return "impute_oor";
    case Method::ImputeOorMask: return "impute_oor+mask";
    case Method::ImputeGaussian: return "impute_gaussian";
  }
  return "?";
}

std::vector<Method> all_methods() {
  return {Method::Mia,        Method::Surrogate,      Method::Prob,
          Method::Block,      Method::ImputeMean,     Method::ImputeMeanMask,
          Method::ImputeOor,  Method::ImputeOorMask,  Method::ImputeGaussian};
}

Method parse_method(const std::string& s) {
  for (auto m : all_methods()) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + s + "'");
}

void ExperimentConfig::validate() const {
  model.validate();
  pattern.validate(model.d);
  tree.validate();
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (n_train < 2 || n_test < 2) throw ConfigError("n_train and n_test must be >= 2");
  if (pattern.mechanism == Mechanism::Predictive && model.model != ModelId::Quadratic)
    throw ConfigError("predictive pattern requires the quadratic model");
  if (learner == Learner::Forest && forest.trees < 1) throw ConfigError("forest needs at least one tree");
  if (learner == Learner::Boost && boost.rounds < 1) throw ConfigError("boosting needs at least one round");
  if (boost_depth < 0) throw ConfigError("boost depth must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

double r2_score(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size()) throw DataError("r2: lengths must be equal and nonzero");
  double m = 0.0;
  for (double v : y_true) m += v;
  m /= static_cast<double>(y_true.size());
  double tot = 0.0, res = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    tot += (y_true[i] - m) * (y_true[i] - m);
    res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  }
  if (!(tot > 0.0)) throw DataError("r2: target has zero variance");
  return 1.0 - res / tot;
}

std::vector<double> relative_scores(std::span<const RunRecord> records) {
  using Key = std::tuple<std::size_t, std::string, std::string, std::string, double, double, std::size_t, std::size_t>;
  auto key = [](const RunRecord& r) {
    return Key{r.rep, r.learner, r.model, r.pattern, r.p, r.rho, r.n_train, r.n_test};
  };
  std::vector<std::string> methods;
  for (const auto& r : records) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[key(records[i])].push_back(i);

  std::vector<double> out(records.size());
  for (const auto& [k, idx] : groups) {
    for (const auto& m : methods) {
      const auto c = std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return records[i].method == m; });
      if (c != 1) {
        throw DataError("relative_scores: rep " + std::to_string(std::get<0>(k)) + " has " + std::to_string(c) +
                        " records for method '" + m + "'");
      }
    }
    double mean = 0.0;
    for (auto i : idx) mean += records[i].r2;
    mean /= static_cast<double>(idx.size());
    for (auto i : idx) out[i] = records[i].r2 - mean;
  }
  return out;
}

namespace {

GaussianParams true_gaussian(const ModelSpec& m) {
  GaussianParams g;
  const auto d = static_cast<Eigen::Index>(m.d);
  g.mu = Eigen::VectorXd::Ones(d);
  g.sigma = Eigen::MatrixXd::Constant(d, d, m.rho);
  g.sigma.diagonal().setOnes();
  return g;
}

LabeledDataset draw_split(const ExperimentConfig& c, std::size_t n, std::uint64_t seed) {
  if (c.pattern.mechanism == Mechanism::Predictive) {
    const std::size_t col = c.pattern.target_columns.empty() ? 0 : c.pattern.target_columns.front();
    return gen_predictive(c.model, n, c.pattern.p, c.pattern.shift, seed, col);
  }
  LabeledDataset ds = gen_model(c.model, n, seed);
  ds.features = ampute(ds.features, c.pattern, mix_seed(seed, {tag(Stage::Amputation)}));
  return ds;
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
}

struct Prepared {
  IncompleteMatrix train;
  IncompleteMatrix test;
  Strategy strategy = Strategy::MIA;
};

Prepared prepare(Method m, const IncompleteMatrix& train, const IncompleteMatrix& test, ShrinkTarget shrink) {
  Prepared p;
  switch (m) {
    case Method::Mia:
    case Method::Surrogate:
    case Method::Prob:
    case Method::Block:
      p.train = train;
      p.test = test;
      p.strategy = m == Method::Mia         ? Strategy::MIA
                   : m == Method::Surrogate ? Strategy::Surrogate
                   : m == Method::Prob      ? Strategy::Probabilistic
                                            : Strategy::Block;
      return p;
    case Method::ImputeMean:
    case Method::ImputeMeanMask:
    case Method::ImputeOor:
    case Method::ImputeOorMask: {
      const bool oor = m == Method::ImputeOor || m == Method::ImputeOorMask;
      const bool mask = m == Method::ImputeMeanMask || m == Method::ImputeOorMask;
      const auto imp = fit_constant(train, oor ? ConstantKind::OutOfRange : ConstantKind::Mean);
      p.train = transform(imp, train, mask);
      p.test = transform(imp, test, mask);
      return p;
    }
    case Method::ImputeGaussian: {
      const auto imp = fit_gaussian_imputer(train, {}, shrink);
      p.train = transform(imp, train);
      p.test = transform(imp, test);
      return p;
    }
  }
  return p;
}

RunRecord run_method(const ExperimentConfig& c, std::size_t rep, std::size_t method_index, const RepData& data) {
  const Method m = c.methods[method_index];
  RunRecord rec;
  rec.rep = rep;
  rec.method = to_string(m);
  rec.learner = to_string(c.learner);
  rec.model = to_string(c.model.model);
  rec.pattern = to_string(c.pattern.mechanism);
  rec.p = c.pattern.p;
  rec.rho = c.model.rho;
  rec.n_train = c.n_train;
  rec.n_test = c.n_test;

  const auto fit_seed = mix_seed(c.master_seed, {rep, method_index, tag(Stage::Fit)});
  const auto predict_seed = mix_seed(c.master_seed, {rep, method_index, tag(Stage::Predict)});
  TreeHyper hyper = c.tree;
  hyper.parallel = false;

  auto t0 = std::chrono::steady_clock::now();
  Prepared prep = prepare(m, data.train.features, data.test.features, c.shrink);
  std::vector<double> pred;
  std::int64_t fit_ms = 0;
  auto t1 = t0;
  switch (c.learner) {
    case Learner::Tree: {
      const auto model = fit_tree(prep.train, data.train.y, prep.strategy, hyper, fit_seed);
      fit_ms = elapsed_ms(t0);
      t1 = std::chrono::steady_clock::now();
      pred = model.predict(prep.test, predict_seed);
      break;
    }
    case Learner::Forest: {
      ForestParams fp = c.forest;
      fp.parallel = false;
      const auto model = fit_forest(prep.train, data.train.y, prep.strategy, hyper, fp, fit_seed);
      fit_ms = elapsed_ms(t0);
      t1 = std::chrono::steady_clock::now();
      pred = predict_ensemble(model, prep.test, predict_seed);
      break;
    }
    case Learner::Boost: {
      TreeHyper bh = hyper;
      bh.max_depth = c.boost_depth;
      const auto model = fit_boosting(prep.train, data.train.y, prep.strategy, bh, c.boost, fit_seed);
      fit_ms = elapsed_ms(t0);
      t1 = std::chrono::steady_clock::now();
      pred = predict_ensemble(model, prep.test, predict_seed);
      break;
    }
  }
  const auto predict_ms = elapsed_ms(t1);
  rec.r2 = r2_score(data.test.y, pred);
  if (c.timings) {
    rec.fit_ms = fit_ms;
    rec.predict_ms = predict_ms;
  }
  return rec;
}

}  // namespace

double estimate_bayes_rate(const ModelSpec& model, const AmputationSpec& pattern, std::size_t n_large,
                           std::size_t k, std::uint64_t seed) {
  model.validate();
  pattern.validate(model.d);
  if (model.model == ModelId::NonlinearFriedman)
    throw ConfigError("Bayes rate needs Gaussian covariates; the nonlinear model has none");
  if (pattern.mechanism != Mechanism::MCAR) throw ConfigError("Bayes rate is estimated under MCAR only");
  if (k < 1 || n_large < 2) throw ConfigError("Bayes rate: need k >= 1 and n_large >= 2");

  LabeledDataset ds = gen_model(model, n_large, mix_seed(seed, {tag(Stage::Bayes), tag(Stage::TestData)}));
  ds.features = ampute(ds.features, pattern, mix_seed(seed, {tag(Stage::Bayes), tag(Stage::Amputation)}));
  const GaussianParams g = true_gaussian(model);
  const ModelId id = model.model;
  const RowFunction f = [id](std::span<const double> x) { return regression_function(id, x); };

  std::vector<double> pred(n_large);
  const auto n = static_cast<long>(n_large);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    pred[iu] = multiple_impute_predict(g, f, ds.features.row_values(iu), ds.features.row_mask(iu), k,
                                       mix_seed(seed, {tag(Stage::Bayes), iu}));
  }
  return r2_score(ds.y, pred);
}

RepData make_rep_data(const ExperimentConfig& c, std::size_t rep) {
  RepData d;
  d.train = draw_split(c, c.n_train, mix_seed(c.master_seed, {rep, tag(Stage::TrainData)}));
  d.test = draw_split(c, c.n_test, mix_seed(c.master_seed, {rep, tag(Stage::TestData)}));
  return d;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::size_t nm = config.methods.size();
  std::vector<RunRecord> records(config.reps * nm);
  std::vector<std::string> errors(config.reps);
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
  const auto nr = static_cast<long>(config.reps);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long r = 0; r < nr; ++r) {
    const auto rep = static_cast<std::size_t>(r);
    std::size_t mi = 0;
    try {
      const RepData data = make_rep_data(config, rep);
      for (; mi < nm; ++mi) records[rep * nm + mi] = run_method(config, rep, mi, data);
    } catch (const std::exception& e) {
      errors[rep] = "rep " + std::to_string(rep) +
                    (mi < nm ? ", method " + to_string(config.methods[mi]) : std::string()) + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DataError(e);
  }
  return records;
}

std::string to_string(MissingOn m) { return m == MissingOn::X1Only ? "x1" : "both"; }

MissingOn parse_missing_on(const std::string& s) {
  if (s == "x1") return MissingOn::X1Only;
  if (s == "both") return MissingOn::Both;
  throw ConfigError("unknown missing-on value '" + s + "' (expected x1|both)");
}

TreeHyper selection_hyper() {
  TreeHyper h;
  h.max_depth = 1;
  h.criterion = ObservedCriterion::NodeScaledGain;
  h.parallel = false;
  return h;
}

std::vector<SelectionRow> selection_frequency_experiment(std::span<const double> p_grid,
                                                         std::span<const std::size_t> n_grid, MissingOn missing_on,
                                                         std::size_t reps, std::uint64_t seed,
                                                         const TreeHyper& hyper_in) {
  if (p_grid.empty() || n_grid.empty()) throw ConfigError("selection experiment: grids must be nonempty");
  if (reps < 1) throw ConfigError("selection experiment: reps must be >= 1");
  for (double p : p_grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("selection experiment: p must lie in [0, 1]");
  }
  TreeHyper hyper = hyper_in;
  hyper.max_depth = 1;
  hyper.parallel = false;

  std::vector<SelectionRow> out;
  for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
      const double p = p_grid[pi];
      const std::size_t n = n_grid[ni];
      std::vector<int> root(reps, -1);
      const auto nr = static_cast<long>(reps);
#pragma omp parallel for schedule(dynamic)
      for (long r = 0; r < nr; ++r) {
        const auto ru = static_cast<std::uint64_t>(r);
        Rng rng(mix_seed(seed, {pi, ni, ru, tag(Stage::TrainData)}));
        std::normal_distribution<double> norm(0.0, 1.0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> values(2 * n);
        std::vector<std::uint8_t> mask(2 * n, 0);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
          values[2 * i] = norm(rng);
          values[2 * i + 1] = norm(rng);
          y[i] = 0.25 * values[2 * i] + norm(rng);
        }
        for (std::size_t i = 0; i < n; ++i) {
          if (u(rng) < p) mask[2 * i] = 1;
          if (missing_on == MissingOn::Both && u(rng) < p) mask[2 * i + 1] = 1;
        }
        const auto x = make_incomplete(std::move(values), std::move(mask), n, 2);
        const auto tree = fit_tree(x, y, Strategy::Block, hyper, mix_seed(seed, {pi, ni, ru, tag(Stage::Fit)}));
        const auto f = selected_root_feature(tree);
        root[r] = f ? static_cast<int>(*f) : -1;
      }
      SelectionRow row;
      row.p = p;
      row.n = n;
      row.missing_on = missing_on;
      row.reps = reps;
      for (int f : root) {
        if (f == 0) ++row.x1;
        else if (f == 1) ++row.x2;
        else ++row.none;
      }
      out.push_back(row);
    }
  }
  return out;
}

void emit_csv(std::span<const RunRecord> records, std::ostream& os) {
  os << kBenchHeader << '\n';
  for (const auto& r : records) {
    os << r.rep << ',' << r.method << ',' << r.learner << ',' << r.model << ',' << r.pattern << ','
       << format_shortest(r.p) << ',' << format_shortest(r.rho) << ',' << r.n_train << ',' << r.n_test << ','
       << format_shortest(r.r2) << ',' << r.fit_ms << ',' << r.predict_ms << '\n';
  }
}

void emit_csv(std::span<const RunRecord> records, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  emit_csv(records, os);
  if (!os) throw DataError("write failed for '" + path + "'");
}

namespace {

template <typename T>
T parse_int(const std::string& s, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("bench csv line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

double parse_real(const std::string& s, std::size_t line) {
  const auto v = parse_number(s);
  if (!v) throw DataError("bench csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return *v;
}

}  // namespace

std::vector<RunRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("bench csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kBenchHeader) throw DataError("bench csv: unexpected header '" + line + "'");
  std::vector<RunRecord> out;
  std::size_t ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 12) throw DataError("bench csv line " + std::to_string(ln) + ": expected 12 fields");
    RunRecord r;
    r.rep = parse_int<std::size_t>(f[0], ln);
    r.method = f[1];
    r.learner = f[2];
    r.model = f[3];
    r.pattern = f[4];
    r.p = parse_real(f[5], ln);
    r.rho = parse_real(f[6], ln);
    r.n_train = parse_int<std::size_t>(f[7], ln);
    r.n_test = parse_int<std::size_t>(f[8], ln);
    r.r2 = parse_real(f[9], ln);
    r.fit_ms = parse_int<std::int64_t>(f[10], ln);
    r.predict_ms = parse_int<std::int64_t>(f[11], ln);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RunRecord> read_records_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read '" + path + "'");
  return read_records_csv(is);
}

TheoryMc theory_mc(double p, double eta, std::size_t n, std::size_t reps, std::uint64_t seed) {
  TheoryMc m;
  m.mia = mc_stump_risk(Strategy::MIA, p, eta, n, reps, mix_seed(seed, {0}));
  m.block = mc_stump_risk(Strategy::Block, p, eta, n, reps, mix_seed(seed, {1}));
  m.prob = mc_stump_risk(Strategy::Probabilistic, p, eta, n, reps, mix_seed(seed, {2}));
  m.surr = mc_stump_risk(Strategy::Surrogate, p, eta, n, reps, mix_seed(seed, {3}));
  return m;
}

void emit_theory_csv(std::span<const TheoryPoint> points, std::ostream& os, std::span<const TheoryMc> mc) {
  if (!mc.empty() && mc.size() != points.size()) throw DataError("theory csv: mc rows must align with points");
  os << "p,eta,s_star_L,risk_mia,risk_block,risk_block_cf,risk_prob,risk_surr";
  if (!mc.empty()) os << ",mc_mia,mc_se,mc_block,mc_block_se,mc_prob,mc_prob_se,mc_surr,mc_surr_se";
  os << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& t = points[i];
    os << format_shortest(t.p) << ',' << format_shortest(t.eta) << ','
       << (t.s_star_mia ? format_double(*t.s_star_mia) : std::string("NA")) << ',' << format_double(t.risk_mia)
       << ',' << format_double(t.risk_block) << ',' << format_double(t.risk_block_cf) << ','
       << format_double(t.risk_prob) << ',' << format_double(t.risk_surr);
    if (!mc.empty()) {
      for (const McEstimate* e : {&mc[i].mia, &mc[i].block, &mc[i].prob, &mc[i].surr})
        os << ',' << format_double(e->mean) << ',' << format_double(e->std_error);
    }
    os << '\n';
  }
}

void emit_selection_csv(std::span<const SelectionRow> rows, std::ostream& os) {
  os << "p,n,missing_on,reps,x1,x2,none,freq_x1\n";
  for (const auto& r : rows) {
    os << format_shortest(r.p) << ',' << r.n << ',' << to_string(r.missing_on) << ',' << r.reps << ',' << r.x1
       << ',' << r.x2 << ',' << r.none << ',' << format_shortest(r.freq_x1()) << '\n';
  }
}

}  // namespace nacart
