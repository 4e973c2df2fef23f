#include "nacart/impute.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace nacart {
namespace {

using PatternKey = std::vector<std::uint8_t>;

/// Rows grouped by missingness pattern, in lexicographic pattern order so the
/// reduction order is fixed.
std::map<PatternKey, std::vector<std::size_t>> group_by_pattern(const IncompleteMatrix& x) {
  std::map<PatternKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto m = x.row_mask(i);
    groups[PatternKey(m.begin(), m.end())].push_back(i);
  }
  return groups;
}

struct Split {
  std::vector<Eigen::Index> obs, mis;
};

Split split_pattern(const PatternKey& key) {
  Split s;
  for (std::size_t j = 0; j < key.size(); ++j) {
    (key[j] ? s.mis : s.obs).push_back(static_cast<Eigen::Index>(j));
  }
  return s;
}

Eigen::MatrixXd sub(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& r,
                    const std::vector<Eigen::Index>& c) {
  Eigen::MatrixXd out(r.size(), c.size());
  for (std::size_t a = 0; a < r.size(); ++a)
    for (std::size_t b = 0; b < c.size(); ++b) out(a, b) = m(r[a], c[b]);
  return out;
}

Eigen::VectorXd sub(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& r) {
  Eigen::VectorXd out(r.size());
  for (std::size_t a = 0; a < r.size(); ++a) out[a] = v[r[a]];
  return out;
}

/// Regression of the missing block on the observed block under `params`.
struct BlockRegression {
  Eigen::MatrixXd coef;  // |m| x |o|: Sigma_mo Sigma_oo^-1
  Eigen::MatrixXd cov;   // |m| x |m|: Schur complement
};

BlockRegression regress_block(const GaussianParams& params, const Split& s) {
  BlockRegression br;
  const Eigen::MatrixXd s_mm = sub(params.sigma, s.mis, s.mis);
  if (s.obs.empty()) {
    br.coef = Eigen::MatrixXd::Zero(s.mis.size(), 0);
    br.cov = s_mm;
    return br;
  }
  const Eigen::MatrixXd s_oo = sub(params.sigma, s.obs, s.obs);
  const Eigen::MatrixXd s_om = sub(params.sigma, s.obs, s.mis);
  Eigen::LLT<Eigen::MatrixXd> llt(s_oo);
  if (llt.info() != Eigen::Success) {
    throw DataError("observed covariance block is numerically singular; shrink the covariance first");
  }
  br.coef = llt.solve(s_om).transpose();
  br.cov = s_mm - br.coef * s_om;
  br.cov = 0.5 * (br.cov + br.cov.transpose());
  return br;
}

/// Square-root factor of a PSD matrix, tolerant of exact singularity.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace

ConstantImputer fit_constant(const IncompleteMatrix& train, ConstantKind kind) {
  if (kind == ConstantKind::Custom) throw ConfigError("custom constants are built with make_custom_imputer");
  ConstantImputer imp;
  imp.kind = kind;
  imp.alphas.resize(train.cols());
  for (std::size_t j = 0; j < train.cols(); ++j) {
    const auto st = observed_stats(train, j);
    if (!st) {
      imp.alphas[j] = 0.0;
      imp.empty_columns.push_back(j);
      continue;
    }
    if (kind == ConstantKind::Mean) {
      imp.alphas[j] = st->mean;
    } else {
      imp.alphas[j] = st->min - std::max(1.0, st->max - st->min);
    }
  }
  return imp;
}

ConstantImputer make_custom_imputer(std::vector<double> alphas) {
  for (double a : alphas) {
    if (!std::isfinite(a)) throw ConfigError("custom imputation constants must be finite");
  }
  return ConstantImputer{std::move(alphas), ConstantKind::Custom, {}};
}

IncompleteMatrix transform(const ConstantImputer& imp, const IncompleteMatrix& x, bool with_mask) {
  if (x.cols() != imp.alphas.size()) {
    throw DataError("imputer was fitted on " + std::to_string(imp.alphas.size()) +
                    " columns, got " + std::to_string(x.cols()));
  }
  const std::size_t d = x.cols();
  IncompleteMatrix out(x.rows(), with_mask ? 2 * d : d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const bool miss = x.missing(i, j);
      out.set(i, j, miss ? imp.alphas[j] : x.value(i, j));
      if (with_mask) out.set(i, d + j, miss ? 1.0 : 0.0);
    }
  }
  return out;
}

GaussianParams em_initial_params(const IncompleteMatrix& x) {
  const std::size_t d = x.cols();
  GaussianParams p{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (std::size_t j = 0; j < d; ++j) {
    const auto st = observed_stats(x, j);
    if (!st || st->observed_count < 2) {
      throw DataError("EM needs at least two observed values in column " + std::to_string(j + 1));
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (!x.missing(i, j)) ss += (x.value(i, j) - st->mean) * (x.value(i, j) - st->mean);
    }
    p.mu[j] = st->mean;
    p.sigma(j, j) = ss / static_cast<double>(st->observed_count) + 1e-6;
  }
  return p;
}

GaussianParams em_step(const GaussianParams& current, const IncompleteMatrix& x) {
  const auto d = static_cast<Eigen::Index>(x.cols());
  Eigen::VectorXd t1 = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd t2 = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd z(d);

  for (const auto& [key, rows] : group_by_pattern(x)) {
    const Split s = split_pattern(key);
    BlockRegression br;
    if (!s.mis.empty()) br = regress_block(current, s);
    const Eigen::VectorXd mu_o = sub(current.mu, s.obs);
    const Eigen::VectorXd mu_m = sub(current.mu, s.mis);
    Eigen::VectorXd xo(s.obs.size());

    for (auto i : rows) {
      for (std::size_t a = 0; a < s.obs.size(); ++a) {
        xo[a] = x.value(i, static_cast<std::size_t>(s.obs[a]));
        z[s.obs[a]] = xo[a];
      }
      if (!s.mis.empty()) {
        const Eigen::VectorXd xm = mu_m + br.coef * (xo - mu_o);
        for (std::size_t a = 0; a < s.mis.size(); ++a) z[s.mis[a]] = xm[a];
      }
      t1 += z;
      t2.noalias() += z * z.transpose();
    }
    // conditional covariance of the filled block, once per row of the group
    const double count = static_cast<double>(rows.size());
    for (std::size_t a = 0; a < s.mis.size(); ++a)
      for (std::size_t b = 0; b < s.mis.size(); ++b) t2(s.mis[a], s.mis[b]) += count * br.cov(a, b);
  }

  const double n = static_cast<double>(x.rows());
  GaussianParams next;
  next.mu = t1 / n;
  next.sigma = t2 / n - next.mu * next.mu.transpose();
  next.sigma = 0.5 * (next.sigma + next.sigma.transpose());
  return next;
}

double observed_loglik(const GaussianParams& params, const IncompleteMatrix& x) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double ll = 0.0;
  for (const auto& [key, rows] : group_by_pattern(x)) {
    const Split s = split_pattern(key);
    if (s.obs.empty()) continue;
    const Eigen::MatrixXd s_oo = sub(params.sigma, s.obs, s.obs);
    Eigen::LLT<Eigen::MatrixXd> llt(s_oo);
    if (llt.info() != Eigen::Success) throw DataError("singular marginal covariance in observed_loglik");
    const Eigen::MatrixXd l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const Eigen::VectorXd mu_o = sub(params.mu, s.obs);
    Eigen::VectorXd r(s.obs.size());
    for (auto i : rows) {
      for (std::size_t a = 0; a < s.obs.size(); ++a) {
        r[a] = x.value(i, static_cast<std::size_t>(s.obs[a])) - mu_o[a];
      }
      const Eigen::VectorXd w = llt.matrixL().solve(r);
      ll += -0.5 * (static_cast<double>(s.obs.size()) * log2pi + logdet + w.squaredNorm());
    }
  }
  return ll;
}

EmResult fit_gaussian_em(const IncompleteMatrix& train, const EmOptions& options) {
  if (train.rows() < 2) throw DataError("EM needs at least two rows");
  EmResult res;
  res.params = em_initial_params(train);
  double ll = observed_loglik(res.params, train);
  res.loglik_trace.push_back(ll);
  for (int it = 1; it <= options.max_iter; ++it) {
    GaussianParams next = em_step(res.params, train);
    double ll_next;
    try {
      ll_next = observed_loglik(next, train);
    } catch (const DataError&) {
      // Exactly collinear columns: the likelihood is unbounded along this path.
      res.params = std::move(next);
      res.loglik_trace.push_back(std::numeric_limits<double>::infinity());
      res.iterations = it;
      res.converged = true;
      break;
    }
    res.params = std::move(next);
    res.loglik_trace.push_back(ll_next);
    res.iterations = it;
    const double gain = ll_next - ll;
    ll = ll_next;
    if (gain < options.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

ConditionalGaussian conditional_gaussian(const GaussianParams& params,
                                         std::span<const std::size_t> observed_idx,
                                         std::span<const double> observed_vals) {
  const auto d = static_cast<std::size_t>(params.mu.size());
  if (observed_idx.size() != observed_vals.size()) throw DataError("observed index/value length mismatch");
  PatternKey key(d, 1);
  for (std::size_t a = 0; a < observed_idx.size(); ++a) {
    if (observed_idx[a] >= d || (a > 0 && observed_idx[a] <= observed_idx[a - 1])) {
      throw DataError("observed indices must be strictly increasing and < d");
    }
    key[observed_idx[a]] = 0;
  }
  const Split s = split_pattern(key);
  ConditionalGaussian cg;
  for (auto j : s.mis) cg.missing_idx.push_back(static_cast<std::size_t>(j));
  if (s.mis.empty()) {
    cg.mu = Eigen::VectorXd(0);
    cg.sigma = Eigen::MatrixXd(0, 0);
    return cg;
  }
  const BlockRegression br = regress_block(params, s);
  Eigen::VectorXd r(s.obs.size());
  for (std::size_t a = 0; a < s.obs.size(); ++a) r[a] = observed_vals[a] - params.mu[s.obs[a]];
  cg.mu = sub(params.mu, s.mis) + br.coef * r;
  cg.sigma = br.cov;
  return cg;
}

Eigen::MatrixXd shrink_covariance(const Eigen::MatrixXd& sigma, ShrinkTarget target) {
  const double tr = sigma.trace();
  const double scale = target == ShrinkTarget::Trace ? tr : tr / static_cast<double>(sigma.rows());
  Eigen::MatrixXd out = 0.99 * sigma;
  out.diagonal().array() += 0.01 * scale;
  return out;
}

IncompleteMatrix impute_conditional_mean(const GaussianParams& params, const IncompleteMatrix& x) {
  const std::size_t d = x.cols();
  if (static_cast<std::size_t>(params.mu.size()) != d) throw DataError("parameter dimension differs from data");
  IncompleteMatrix out = x;
  for (const auto& [key, rows] : group_by_pattern(x)) {
    const Split s = split_pattern(key);
    if (s.mis.empty()) continue;
    const BlockRegression br = regress_block(params, s);
    const Eigen::VectorXd mu_o = sub(params.mu, s.obs);
    const Eigen::VectorXd mu_m = sub(params.mu, s.mis);
    Eigen::VectorXd xo(s.obs.size());
    for (auto i : rows) {
      for (std::size_t a = 0; a < s.obs.size(); ++a) xo[a] = x.value(i, static_cast<std::size_t>(s.obs[a]));
      const Eigen::VectorXd xm = mu_m + br.coef * (xo - mu_o);
      for (std::size_t a = 0; a < s.mis.size(); ++a) out.set(i, static_cast<std::size_t>(s.mis[a]), xm[a]);
    }
  }
  return out;
}

GaussianImputer fit_gaussian_imputer(const IncompleteMatrix& train, const EmOptions& options,
                                     ShrinkTarget target) {
  GaussianImputer imp;
  imp.em = fit_gaussian_em(train, options);
  imp.params.mu = imp.em.params.mu;
  imp.params.sigma = shrink_covariance(imp.em.params.sigma, target);
  return imp;
}

IncompleteMatrix transform(const GaussianImputer& imp, const IncompleteMatrix& x, bool with_mask) {
  IncompleteMatrix filled = impute_conditional_mean(imp.params, x);
  if (!with_mask) return filled;
  const std::size_t d = x.cols();
  IncompleteMatrix out(x.rows(), 2 * d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.set(i, j, filled.value(i, j));
      out.set(i, d + j, x.missing(i, j) ? 1.0 : 0.0);
    }
  }
  return out;
}

double multiple_impute_predict(std::span<const double> row, std::span<const std::uint8_t> mask,
                               const ConditionalSampler& sampler, const RowFunction& f,
                               std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("multiple imputation needs K >= 1");
  bool any_missing = false;
  for (auto m : mask) any_missing = any_missing || m != 0;
  if (!any_missing) return f(row);

  Rng rng(seed);
  std::vector<double> work(row.begin(), row.end());
  double sum = 0.0;
  for (std::size_t draw = 0; draw < k; ++draw) {
    sampler(rng, work, mask);
    sum += f(work);
  }
  return sum / static_cast<double>(k);
}

double multiple_impute_predict(const GaussianParams& params, const RowFunction& f,
                               std::span<const double> row, std::span<const std::uint8_t> mask,
                               std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> obs_idx;
  std::vector<double> obs_val;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (!mask[j]) {
      obs_idx.push_back(j);
      obs_val.push_back(row[j]);
    }
  }
  if (obs_idx.size() == row.size()) return f(row);
  const ConditionalGaussian cg = conditional_gaussian(params, obs_idx, obs_val);
  const Eigen::MatrixXd factor = psd_factor(cg.sigma);
  const auto m = static_cast<Eigen::Index>(cg.missing_idx.size());

  ConditionalSampler sampler = [&](Rng& rng, std::span<double> work, std::span<const std::uint8_t>) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(m);
    for (Eigen::Index a = 0; a < m; ++a) z[a] = normal(rng);
    const Eigen::VectorXd draw = cg.mu + factor * z;
    for (Eigen::Index a = 0; a < m; ++a) work[cg.missing_idx[a]] = draw[a];
  };
  return multiple_impute_predict(row, mask, sampler, f, k, seed);
}

}  // namespace nacart
