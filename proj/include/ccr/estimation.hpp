#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <nlohmann/json.hpp>

#include "ccr/compound.hpp"
#include "ccr/model.hpp"
#include "ccr/optimize.hpp"
#include "ccr/parallel.hpp"
#include "ccr/rng.hpp"

namespace ccr {

// ---------------------------------------------------------------------------
// Cached log-likelihood
// ---------------------------------------------------------------------------

/// Portfolio log-likelihood as a function of the constrained parameter vector.
/// Count and severity quantities are cached per block, so perturbing one block
/// only recomputes what depends on it.
class LoglikEvaluator {
 public:
  LoglikEvaluator(const CompoundModel& tmpl, const Dataset& d, unsigned threads = 1)
      : model_(tmpl), data_(d), threads_(threads) {
    model_.resize();
    X_ = Design::build(model_, d);
    layout_ = param_layout(model_);
    nf_ = block_size(layout_, Block::Frequency);
    ns_ = block_size(layout_, Block::Severity);
    const std::size_t R = d.records.size();
    N_.resize(R);
    slice_.resize(R);
    claims_.resize(R);
    vd_.resize(R);
    vl_.resize(R);
    ll_.resize(R);
  }

  const std::vector<ParamInfo>& layout() const { return layout_; }
  const CompoundModel& model() const { return model_; }
  const Dataset& data() const { return data_; }
  int freq_size() const { return nf_; }
  int sev_size() const { return ns_; }

  /// Full log-likelihood; -inf outside the parameter space.
  double operator()(const Eigen::VectorXd& x) {
    if (!prepare(x)) return -kInf;
    try {
      const Copula C(model_.copula);
      const bool trunc = data_.scheme == Scheme::PerPaymentTruncated;
      parallel_for(data_.records.size(), threads_, [&](std::size_t i) {
        if (trunc)
          ll_[i] = loglik_truncated_marginals(N_[i], C, data_.records[i].n, vd_[i], vl_[i], claims_[i]);
        else
          ll_[i] = loglik_observed(C, slice_[i], claims_[i]);
      });
    } catch (const DomainError&) {
      return -kInf;
    } catch (const NumericError&) {
      return -kInf;
    }
    return reduce();
  }

  /// Count-only log-likelihood sum_i log f_N(n_i).
  double count_loglik(const Eigen::VectorXd& x) {
    if (!prepare_freq(x)) return -kInf;
    KahanSum s;
    for (const auto& sl : slice_) s.add(sl.log_f);
    const double v = s.value();
    return std::isnan(v) ? -kInf : v;
  }

 private:
  bool prepare(const Eigen::VectorXd& x) { return prepare_freq(x) && prepare_sev(x); }

  bool prepare_freq(const Eigen::VectorXd& x) {
    const Eigen::VectorXd key = x.head(nf_);
    set_params(model_, x.size() == static_cast<Eigen::Index>(layout_.size()) ? x : full(x));
    if (freq_ok_ && key == freq_key_) return true;
    freq_ok_ = false;
    try {
      for (std::size_t i = 0; i < data_.records.size(); ++i) {
        N_[i] = count_dist(model_.freq, X_, static_cast<Eigen::Index>(i));
        N_[i].validate();
        if (data_.scheme != Scheme::PerPaymentTruncated) slice_[i] = count_slice(N_[i], data_.records[i].n);
      }
    } catch (const DomainError&) {
      return false;
    }
    freq_key_ = key;
    freq_ok_ = true;
    return true;
  }

  bool prepare_sev(const Eigen::VectorXd& x) {
    const Eigen::VectorXd key = x.segment(nf_, ns_);
    if (sev_ok_ && key == sev_key_) return true;
    sev_ok_ = false;
    try {
      for (std::size_t i = 0; i < data_.records.size(); ++i) {
        const auto& r = data_.records[i];
        const auto ii = static_cast<Eigen::Index>(i);
        auto& cm = claims_[i];
        cm.clear();
        if (!X_.claim_level) {
          const SeverityDist Y = severity_dist(model_.sev, X_, ii, -1);
          Y.validate();
          for (const auto& c : r.claims) cm.push_back(claim_marginal(Y, r, c));
          if (data_.scheme == Scheme::PerPaymentTruncated) {
            vd_[i] = r.deductible > 0.0 ? Y.cdf(r.deductible) : Prob::zero();
            vl_[i] = r.limit == kInf ? Prob::one() : Y.cdf(r.limit);
          }
        } else {
          for (std::size_t c = 0; c < r.claims.size(); ++c) {
            const SeverityDist Y = severity_dist(model_.sev, X_, ii, static_cast<long>(c));
            Y.validate();
            cm.push_back(claim_marginal(Y, r, r.claims[c]));
          }
        }
      }
    } catch (const DomainError&) {
      return false;
    }
    sev_key_ = key;
    sev_ok_ = true;
    return true;
  }

  Eigen::VectorXd full(const Eigen::VectorXd& x) const {
    throw ValidationError("parameter vector has " + std::to_string(x.size()) + " entries, expected " +
                          std::to_string(layout_.size()));
  }

  double reduce() const {
    KahanSum s;
    for (double v : ll_) {
      if (std::isnan(v)) return -kInf;
      s.add(v);
    }
    const double v = s.value();
    return std::isnan(v) ? -kInf : v;
  }

  CompoundModel model_;
  const Dataset& data_;
  unsigned threads_;
  Design X_;
  std::vector<ParamInfo> layout_;
  int nf_ = 0, ns_ = 0;
  std::vector<CountDist> N_;
  std::vector<CountSlice> slice_;
  std::vector<std::vector<ClaimMarginal>> claims_;
  std::vector<Prob> vd_, vl_;
  std::vector<double> ll_;
  Eigen::VectorXd freq_key_, sev_key_;
  bool freq_ok_ = false, sev_ok_ = false;
};

// ---------------------------------------------------------------------------
// Fit results
// ---------------------------------------------------------------------------

enum class FitMethod { TwoStage, FullMLE, IndependenceBaseline };

inline std::string_view to_string(FitMethod m) {
  switch (m) {
    case FitMethod::TwoStage: return "two_stage";
    case FitMethod::FullMLE: return "full_mle";
    case FitMethod::IndependenceBaseline: return "independence";
  }
  return "?";
}

struct FitResult {
  FitMethod method = FitMethod::FullMLE;
  CompoundModel model;
  std::vector<ParamInfo> layout;
  Eigen::VectorXd estimates;
  Eigen::VectorXd std_errors;
  double loglik = -kInf;
  double aic = kNaN, bic = kNaN;
  int n_params = 0;
  long n_policies = 0;
  int iterations = 0;
  double grad_norm = kNaN;
  bool converged = false;
  std::string status;
  bool se_reliable = false;
  std::string se_note;
  std::uint64_t data_key = 0;

  /// Estimate by parameter name; NaN if absent.
  double operator[](const std::string& name) const {
    for (std::size_t i = 0; i < layout.size(); ++i)
      if (layout[i].name == name) return estimates[static_cast<Eigen::Index>(i)];
    return kNaN;
  }
  double se(const std::string& name) const {
    for (std::size_t i = 0; i < layout.size(); ++i)
      if (layout[i].name == name) return std_errors[static_cast<Eigen::Index>(i)];
    return kNaN;
  }
};

/// Fingerprint of a dataset, used to refuse comparisons across datasets.
inline std::uint64_t dataset_key(const Dataset& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const int sc = static_cast<int>(d.scheme);
  mix(&sc, sizeof sc);
  for (const auto& r : d.records) {
    mix(r.id.data(), r.id.size());
    mix(&r.n, sizeof r.n);
    for (double x : r.x) mix(&x, sizeof x);
    for (const auto& c : r.claims) mix(&c.amount, sizeof c.amount);
  }
  return h;
}

inline void finish_fit(FitResult& f, const Dataset& d) {
  f.n_params = static_cast<int>(f.layout.size());
  f.n_policies = static_cast<long>(d.records.size());
  f.aic = -2.0 * f.loglik + 2.0 * f.n_params;
  f.bic = -2.0 * f.loglik + f.n_params * std::log(static_cast<double>(f.n_policies));
  f.data_key = dataset_key(d);
}

struct FitOptions {
  OptimOptions optim;
  bool compute_se = true;
  int multistarts = 5;
  std::uint64_t seed = 20240101;
  unsigned threads = 1;
};

// ---------------------------------------------------------------------------
// Starting values
// ---------------------------------------------------------------------------

inline double copula_start(const CopulaSpec& c) {
  const double tau = c.rotation == 0 ? 0.1 : -0.1;
  switch (c.family) {
    case CopulaFamily::Independence: return 0.0;
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT: return 0.0;
    case CopulaFamily::Frank: return c.rotation == 0 ? 0.5 : param_from_tau(c.family, c.rotation, tau);
    default: return param_from_tau(c.family, c.rotation, tau);
  }
}

/// Moment-based starting values for every block.
inline void default_start(CompoundModel& m, const Dataset& d) {
  m.resize();
  double sn = 0.0, sl = 0.0, sl2 = 0.0;
  long k = 0;
  for (const auto& r : d.records) {
    sn += static_cast<double>(r.n);
    for (const auto& c : r.claims) {
      if (c.status == ClaimStatus::BelowDeductible) continue;
      const double y = std::max(1e-8, r.ground_up(c));
      sl += std::log(y);
      sl2 += std::log(y) * std::log(y);
      ++k;
    }
  }
  const double nbar = std::max(1e-3, sn / std::max<std::size_t>(1, d.records.size()));
  auto set_intercept = [](const std::vector<std::string>& terms, Eigen::VectorXd& b, double v) {
    b.setZero();
    for (std::size_t j = 0; j < terms.size(); ++j)
      if (terms[j] == kIntercept) b[static_cast<Eigen::Index>(j)] = v;
  };
  set_intercept(m.freq.terms, m.freq.beta, std::log(nbar));
  m.freq.eta = 1.0;
  if (m.freq.beta_zero.size()) set_intercept(m.freq.zero_terms, m.freq.beta_zero, -2.0);
  if (m.freq.beta_one.size()) set_intercept(m.freq.one_terms, m.freq.beta_one, -2.0);
  const double ml = k ? sl / k : 0.0;
  const double vl = k > 1 ? std::max(1e-4, sl2 / k - ml * ml) : 1.0;
  if (m.sev.kind == SeverityKind::Gamma) {
    m.sev.shape = std::clamp(1.0 / vl, 0.05, 50.0);
    set_intercept(m.sev.terms, m.sev.beta, ml + 0.5 * vl);
  } else {
    m.sev.sigma = std::sqrt(vl) * 0.5;
    m.sev.phi1 = 1.0;
    m.sev.phi2 = 1.0;
    set_intercept(m.sev.terms, m.sev.beta, ml);
  }
  m.copula.theta = copula_start(m.copula);
  if (m.copula.family == CopulaFamily::StudentT && !(m.copula.nu > 0.0)) m.copula.nu = 10.0;
}

// ---------------------------------------------------------------------------
// Optimization over a subset of the parameters
// ---------------------------------------------------------------------------

struct SubsetFit {
  Eigen::VectorXd x;  // constrained, all parameters
  OptimResult opt;
};

/// Maximizes `f` over the entries listed in `free`, in unconstrained space.
template <class F>
SubsetFit optimize_subset(F&& f, const std::vector<ParamInfo>& layout, const Eigen::VectorXd& x0,
                          const std::vector<int>& free, const OptimOptions& opt) {
  const Eigen::VectorXd z0 = unconstrain(layout, x0);
  Eigen::VectorXd w0(static_cast<Eigen::Index>(free.size()));
  for (std::size_t j = 0; j < free.size(); ++j) w0[static_cast<Eigen::Index>(j)] = z0[free[j]];
  auto expand = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd z = z0;
    for (std::size_t j = 0; j < free.size(); ++j) z[free[j]] = w[static_cast<Eigen::Index>(j)];
    return constrain(layout, z);
  };
  Objective obj = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd x = expand(w);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!std::isfinite(x[i])) return -kInf;
    return f(x);
  };
  SubsetFit out;
  out.opt = maximize(obj, w0, opt);
  out.x = expand(out.opt.x);
  return out;
}

inline std::vector<int> block_indices(const std::vector<ParamInfo>& layout, std::initializer_list<Block> blocks) {
  std::vector<int> out;
  for (std::size_t i = 0; i < layout.size(); ++i)
    for (Block b : blocks)
      if (layout[i].block == b) out.push_back(static_cast<int>(i));
  return out;
}

/// Standard errors from the observed information of `f` over `free`, computed
/// in unconstrained space and mapped back by the delta method.
template <class F>
bool observed_information_se(F&& f, const std::vector<ParamInfo>& layout, const Eigen::VectorXd& x,
                             const std::vector<int>& free, Eigen::VectorXd& se) {
  const Eigen::VectorXd z0 = unconstrain(layout, x);
  Eigen::VectorXd w0(static_cast<Eigen::Index>(free.size()));
  for (std::size_t j = 0; j < free.size(); ++j) w0[static_cast<Eigen::Index>(j)] = z0[free[j]];
  Objective obj = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd z = z0;
    for (std::size_t j = 0; j < free.size(); ++j) z[free[j]] = w[static_cast<Eigen::Index>(j)];
    return f(constrain(layout, z));
  };
  const Eigen::MatrixXd H = fd_hessian(obj, w0);
  const Eigen::MatrixXd I = -H;
  bool ok = I.allFinite();
  Eigen::MatrixXd cov;
  if (ok) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(I);
    ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all();
    if (ok) {
      cov = ldlt.solve(Eigen::MatrixXd::Identity(I.rows(), I.cols()));
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(I);
      if (lu.isInvertible()) cov = lu.inverse();
    }
  }
  for (std::size_t j = 0; j < free.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const int i = free[j];
    if (cov.size() == 0 || !(cov(jj, jj) >= 0.0)) {
      se[i] = kNaN;
      ok = false;
      continue;
    }
    se[i] = std::fabs(transform_jacobian(layout[static_cast<std::size_t>(i)].transform, z0[i])) * std::sqrt(cov(jj, jj));
  }
  return ok;
}

inline void require_positive_claims(const Dataset& d) {
  if (d.records.empty()) throw ValidationError("dataset is empty");
  if (d.positive_records() == 0) throw ValidationError("severity unidentifiable: no record has a positive claim count");
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Stage 1: count regression alone. Returns constrained parameters with the
/// frequency block filled in.
inline SubsetFit fit_count_stage(LoglikEvaluator& ev, const Eigen::VectorXd& x0, const OptimOptions& opt) {
  const auto free = block_indices(ev.layout(), {Block::Frequency});
  return optimize_subset([&](const Eigen::VectorXd& x) { return ev.count_loglik(x); }, ev.layout(), x0, free, opt);
}

inline FitResult fit_two_stage(const CompoundModel& tmpl, const Dataset& d, const FitOptions& o = {}) {
  require_positive_claims(d);
  if (d.scheme == Scheme::PerPaymentTruncated)
    throw ValidationError("two-stage estimation needs an observable count margin; use the full MLE for truncated data");
  CompoundModel m = tmpl;
  default_start(m, d);
  LoglikEvaluator ev(m, d, o.threads);
  const auto& L = ev.layout();
  const Eigen::VectorXd x0 = get_params(m);
  auto s1 = fit_count_stage(ev, x0, o.optim);
  const auto free2 = block_indices(L, {Block::Severity, Block::Copula});
  auto s2 = optimize_subset(ev, L, s1.x, free2, o.optim);
  FitResult f;
  f.method = FitMethod::TwoStage;
  f.layout = L;
  f.estimates = s2.x;
  f.loglik = ev(s2.x);
  f.iterations = s1.opt.iterations + s2.opt.iterations;
  f.grad_norm = s2.opt.grad_norm;
  f.converged = s1.opt.converged && s2.opt.converged;
  f.status = "stage 1: " + s1.opt.status + "; stage 2: " + s2.opt.status;
  f.model = ev.model();
  set_params(f.model, f.estimates);
  f.std_errors = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L.size()), kNaN);
  if (o.compute_se) {
    const bool a = observed_information_se([&](const Eigen::VectorXd& x) { return ev.count_loglik(x); }, L,
                                           f.estimates, block_indices(L, {Block::Frequency}), f.std_errors);
    const bool b = observed_information_se(ev, L, f.estimates, free2, f.std_errors);
    f.se_reliable = a && b;
    f.se_note = "stage-conditional: each stage's observed information with the other stage held fixed";
  }
  finish_fit(f, d);
  return f;
}

/// Independence baseline. Under complete or censored data the count and
/// severity parts separate; under truncation they are fitted jointly.
inline FitResult fit_independence(const CompoundModel& tmpl, const Dataset& d, const FitOptions& o = {}) {
  require_positive_claims(d);
  CompoundModel m = tmpl;
  m.copula = CopulaSpec{};
  default_start(m, d);
  LoglikEvaluator ev(m, d, o.threads);
  const auto& L = ev.layout();
  Eigen::VectorXd x = get_params(m);
  FitResult f;
  f.method = FitMethod::IndependenceBaseline;
  f.layout = L;
  if (d.scheme == Scheme::PerPaymentTruncated) {
    auto s1 = optimize_subset(ev, L, x, block_indices(L, {Block::Severity}), o.optim);
    auto s = optimize_subset(ev, L, s1.x, block_indices(L, {Block::Frequency, Block::Severity}), o.optim);
    x = s.x;
    f.iterations = s1.opt.iterations + s.opt.iterations;
    f.grad_norm = s.opt.grad_norm;
    f.converged = s.opt.converged;
    f.status = s.opt.status;
  } else {
    auto s1 = fit_count_stage(ev, x, o.optim);
    auto s2 = optimize_subset(ev, L, s1.x, block_indices(L, {Block::Severity}), o.optim);
    x = s2.x;
    f.iterations = s1.opt.iterations + s2.opt.iterations;
    f.grad_norm = std::hypot(s1.opt.grad_norm, s2.opt.grad_norm);
    f.converged = s1.opt.converged && s2.opt.converged;
    f.status = "count: " + s1.opt.status + "; severity: " + s2.opt.status;
  }
  f.estimates = x;
  f.loglik = ev(x);
  f.model = ev.model();
  set_params(f.model, x);
  f.std_errors = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L.size()), kNaN);
  if (o.compute_se) {
    f.se_reliable = observed_information_se(ev, L, x, block_indices(L, {Block::Frequency, Block::Severity}), f.std_errors);
  }
  finish_fit(f, d);
  return f;
}

/// Marginal estimates from an independence fit, with the copula block fitted
/// on top of them.
inline SubsetFit start_from_independence(LoglikEvaluator& ev, const CompoundModel& start, const FitResult& ind,
                                         const OptimOptions& opt) {
  const auto& L = ev.layout();
  Eigen::VectorXd x0 = get_params(start);
  for (std::size_t i = 0; i < L.size(); ++i) {
    const double v = ind[L[i].name];
    if (L[i].block != Block::Copula && std::isfinite(v)) x0[static_cast<Eigen::Index>(i)] = v;
  }
  return optimize_subset(ev, L, x0, block_indices(L, {Block::Copula}), opt);
}

/// Full maximum likelihood. Starts from `init` when given, else from the
/// two-stage estimates (complete/censored) or the independence fit plus a
/// small dependence (truncated). Falls back to jittered multi-starts when the
/// starting stage or the main run does not converge.
inline FitResult fit_full(const CompoundModel& tmpl, const Dataset& d, const std::optional<Eigen::VectorXd>& init = {},
                          const FitOptions& o = {}) {
  require_positive_claims(d);
  CompoundModel m = tmpl;
  default_start(m, d);
  LoglikEvaluator ev(m, d, o.threads);
  const auto& L = ev.layout();
  Eigen::VectorXd x0;
  bool start_ok = true;
  double start_ll = -kInf;
  if (init) {
    x0 = *init;
  } else if (d.scheme != Scheme::PerPaymentTruncated) {
    FitOptions so = o;
    so.compute_se = false;
    const FitResult ts = fit_two_stage(m, d, so);
    x0 = ts.estimates;
    start_ok = ts.converged;
    start_ll = ts.loglik;
  } else {
    FitOptions so = o;
    so.compute_se = false;
    const FitResult ind = fit_independence(m, d, so);
    auto s2 = start_from_independence(ev, m, ind, o.optim);
    x0 = s2.x;
    start_ok = ind.converged && s2.opt.converged;
  }
  std::vector<int> all(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) all[i] = static_cast<int>(i);
  SubsetFit best = optimize_subset(ev, L, x0, all, o.optim);
  int starts = 1;
  if (!start_ok || !best.opt.converged) {
    Rng rng(o.seed);
    const Eigen::VectorXd z0 = unconstrain(L, x0);
    for (int k = 0; k < o.multistarts; ++k) {
      Eigen::VectorXd z = z0;
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] += 0.2 * norm_quantile(rng.uniform()) * std::max(1.0, 0.25 * std::fabs(z[i]));
      auto s = optimize_subset(ev, L, constrain(L, z), all, o.optim);
      ++starts;
      if (s.opt.value > best.opt.value + 1e-9 || (!best.opt.converged && s.opt.converged && s.opt.value >= best.opt.value - 1e-6))
        best = s;
    }
  }
  FitResult f;
  f.method = FitMethod::FullMLE;
  f.layout = L;
  f.estimates = best.x;
  f.loglik = ev(best.x);
  if (f.loglik < start_ll) {  // never worse than the starting point
    f.estimates = x0;
    f.loglik = start_ll;
  }
  f.iterations = best.opt.iterations;
  f.grad_norm = best.opt.grad_norm;
  f.converged = best.opt.converged;
  f.status = best.opt.status + (starts > 1 ? " (best of " + std::to_string(starts) + " starts)" : "");
  f.model = ev.model();
  set_params(f.model, f.estimates);
  f.std_errors = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L.size()), kNaN);
  if (o.compute_se) {
    f.se_reliable = observed_information_se(ev, L, f.estimates, all, f.std_errors);
    if (!f.se_reliable) f.se_note = "observed information not positive definite; standard errors unreliable";
  }
  finish_fit(f, d);
  return f;
}

// ---------------------------------------------------------------------------
// Model selection
// ---------------------------------------------------------------------------

struct LrtResult {
  double statistic = kNaN;
  int df = 0;
  double p_value = kNaN;
};

inline LrtResult likelihood_ratio_test(const FitResult& full, const FitResult& nested) {
  if (full.data_key != nested.data_key) throw ValidationError("fits were computed on different datasets");
  LrtResult r;
  r.df = full.n_params - nested.n_params;
  if (r.df <= 0) throw ValidationError("nested model must have fewer parameters");
  r.statistic = std::max(0.0, 2.0 * (full.loglik - nested.loglik));
  boost::math::chi_squared_distribution<double> chi(r.df);
  r.p_value = boost::math::cdf(boost::math::complement(chi, r.statistic));
  return r;
}

struct SelectionRow {
  std::string label;
  double loglik, aic, bic;
  int n_params;
  int aic_rank, bic_rank;
};

inline std::vector<SelectionRow> model_selection(const std::vector<std::pair<std::string, const FitResult*>>& fits) {
  std::vector<SelectionRow> rows;
  for (const auto& [label, f] : fits) {
    if (f->data_key != fits.front().second->data_key)
      throw ValidationError("fits were computed on different datasets");
    rows.push_back({label, f->loglik, f->aic, f->bic, f->n_params, 0, 0});
  }
  auto rank = [&](auto key, auto set) {
    std::vector<std::size_t> idx(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return key(rows[a]) < key(rows[b]); });
    for (std::size_t r = 0; r < idx.size(); ++r) set(rows[idx[r]], static_cast<int>(r + 1));
  };
  rank([](const SelectionRow& r) { return r.aic; }, [](SelectionRow& r, int k) { r.aic_rank = k; });
  rank([](const SelectionRow& r) { return r.bic; }, [](SelectionRow& r, int k) { r.bic_rank = k; });
  return rows;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline nlohmann::ordered_json to_json(const FitResult& f) {
  nlohmann::ordered_json j;
  j["method"] = to_string(f.method);
  j["copula"] = f.model.copula.label();
  j["frequency_family"] = to_string(f.model.freq.kind);
  j["severity_family"] = to_string(f.model.sev.kind);
  nlohmann::ordered_json blocks;
  for (Block b : {Block::Frequency, Block::Severity, Block::Copula}) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < f.layout.size(); ++i) {
      if (f.layout[i].block != b) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      arr.push_back({{"name", f.layout[i].name},
                     {"estimate", json_number(f.estimates[ii])},
                     {"std_error", json_number(f.std_errors.size() ? f.std_errors[ii] : kNaN)},
                     {"transform", to_string(f.layout[i].transform)}});
    }
    blocks[std::string(to_string(b))] = arr;
  }
  j["blocks"] = blocks;
  j["loglik"] = json_number(f.loglik);
  j["aic"] = json_number(f.aic);
  j["bic"] = json_number(f.bic);
  j["n_params"] = f.n_params;
  j["n_policies"] = f.n_policies;
  j["convergence"] = {{"iterations", f.iterations},
                      {"gradient_norm", json_number(f.grad_norm)},
                      {"status", f.status},
                      {"converged", f.converged}};
  j["std_errors_reliable"] = f.se_reliable;
  if (!f.se_note.empty()) j["std_error_note"] = f.se_note;
  return j;
}

inline nlohmann::ordered_json to_json(const LrtResult& r) {
  return {{"statistic", json_number(r.statistic)}, {"df", r.df}, {"p_value", json_number(r.p_value)}};
}

}  // namespace ccr
