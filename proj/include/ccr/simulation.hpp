#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "ccr/compound.hpp"
#include "ccr/parallel.hpp"
#include "ccr/rng.hpp"

namespace ccr {

/// The copula of (V, U) when (U, V) has copula `s`.
inline CopulaSpec transposed(CopulaSpec s) {
  if (s.rotation == 90)
    s.rotation = 270;
  else if (s.rotation == 270)
    s.rotation = 90;
  return s;
}

/// y with F_{Y|N}(y | n) = p. Solved for v = F_Y(y) on the normal scale,
/// then mapped through the severity quantile.
inline double conditional_quantile(const CountDist& N, const SeverityDist& Y, const Copula& C, long n, const Prob& p) {
  if (!(p.p > 0.0) || !(p.q > 0.0)) throw DomainError("conditional quantile needs p in (0,1)");
  if (C.independent()) return Y.quantile(p);
  const CountSlice s = count_slice(N, n);
  if (!(s.f > 0.0)) throw DegenerateConditional("f_N(n) = 0 for n = " + std::to_string(n));
  const bool upper = p.p > 0.5;
  auto g = [&](double z) {
    const Prob c = cond_cdf_v(C, s, norm_prob(z));
    return upper ? p.q - c.q : c.p - p.p;
  };
  double lo = norm_quantile(p), hi = lo;
  double step = 1.0;
  for (int i = 0; g(lo) > 0.0; ++i, step *= 2.0) {
    if (i > 10 || lo < -38.0) throw NumericError("conditional quantile: lower bracket not found");
    lo = std::max(-38.5, lo - step);
  }
  step = 1.0;
  for (int i = 0; g(hi) < 0.0; ++i, step *= 2.0) {
    if (i > 10 || hi > 38.0) throw NumericError("conditional quantile: upper bracket not found");
    hi = std::min(38.5, hi + step);
  }
  std::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), it);
  const double z = 0.5 * (r.first + r.second);
  return Y.quantile(norm_prob(z));
}

inline double conditional_quantile(const CountDist& N, const SeverityDist& Y, const Copula& C, long n, double p) {
  return conditional_quantile(N, Y, C, n, Prob::from_p(p));
}

/// Ground-up draw of (N, Y_1..Y_N).
struct GroundUp {
  long n = 0;
  std::vector<double> y;
};

/// Draws N by inversion, then for each claim a latent U uniform on the count
/// slice and V from the conditional law of V given U, which inverts F_{Y|N}
/// claim by claim. `Ct` is the transposed copula.
inline GroundUp draw_ground_up(const CountDist& N, const SeverityDist& Y, const Copula& C, const Copula& Ct,
                               Rng& rng) {
  GroundUp g;
  const double w0 = rng.uniform();
  g.n = N.quantile(Prob{w0, 1.0 - w0});
  if (g.n == 0) return g;
  const CountSlice s = count_slice(N, g.n);
  g.y.reserve(static_cast<std::size_t>(g.n));
  for (long j = 0; j < g.n; ++j) {
    const double w1 = rng.uniform(), w2 = rng.uniform();
    Prob v;
    if (C.independent()) {
      v = Prob::from_p(w2);
    } else {
      Prob u;
      if (s.lo.p > 0.5) {
        const double q = s.lo.q - w1 * s.f;
        u = {1.0 - q, q};
      } else {
        const double p = s.lo.p + w1 * s.f;
        u = {p, 1.0 - p};
      }
      v = Ct.hinv(Prob{w2, 1.0 - w2}, u);
    }
    if (v.p <= 0.0) v = {1e-300, 1.0};
    if (v.q <= 0.0) v = {1.0, 1e-300};
    g.y.push_back(Y.quantile(v));
  }
  return g;
}

/// A simulated policy after coverage modification. Under the censored scheme
/// below-deductible claims appear with amount 0; under the truncated scheme
/// they are dropped.
struct SimDraw {
  std::string policy_id;
  long n = 0;
  std::vector<double> amounts;
  std::vector<ClaimStatus> status;
  double s = 0.0;
};

inline SimDraw apply_coverage(std::string id, const GroundUp& g, double d, double l, Scheme scheme) {
  SimDraw out;
  out.policy_id = std::move(id);
  for (double y : g.y) {
    if (scheme == Scheme::Complete) {
      out.amounts.push_back(y);
      out.status.push_back(ClaimStatus::Interior);
      continue;
    }
    if (y <= d) {
      if (scheme == Scheme::PerLossCensored) {
        out.amounts.push_back(0.0);
        out.status.push_back(ClaimStatus::BelowDeductible);
      }
      continue;
    }
    if (y >= l) {
      out.amounts.push_back(l - d);
      out.status.push_back(ClaimStatus::AtLimit);
    } else {
      out.amounts.push_back(y - d);
      out.status.push_back(ClaimStatus::Interior);
    }
  }
  out.n = static_cast<long>(out.amounts.size());
  for (double a : out.amounts) out.s += a;
  return out;
}

inline SimDraw simulate_policy(const std::string& id, const CountDist& N, const SeverityDist& Y, const Copula& C,
                               double d, double l, Scheme scheme, Rng& rng) {
  const Copula Ct(transposed(C.spec()));
  return apply_coverage(id, draw_ground_up(N, Y, C, Ct, rng), d, l, scheme);
}

// ---------------------------------------------------------------------------
// Tweedie correspondence
// ---------------------------------------------------------------------------

struct PoissonGamma {
  double lambda, shape, scale;
};

/// Poisson-gamma parameters of the Tweedie law with mean mu, power p, dispersion phi.
inline PoissonGamma tweedie_to_compound(double mu, double p, double phi) {
  if (!(p > 1.0 && p < 2.0) || !(mu > 0.0) || !(phi > 0.0)) throw DomainError("Tweedie needs 1<p<2, mu>0, phi>0");
  return {std::pow(mu, 2.0 - p) / (phi * (2.0 - p)), (2.0 - p) / (p - 1.0), phi * (p - 1.0) * std::pow(mu, p - 1.0)};
}

// ---------------------------------------------------------------------------
// Synthetic portfolios
// ---------------------------------------------------------------------------

struct CovariateLaw {
  enum Kind { Uniform, Bernoulli, Normal } kind = Uniform;
  std::string name;
  double a = 0.0;  // lower bound, success probability, or mean
  double b = 1.0;  // upper bound or standard deviation
};

struct SyntheticDesign {
  std::vector<CovariateLaw> covariates;
  CompoundModel truth;
  long size = 500;
  Scheme scheme = Scheme::Complete;
  double deductible = 0.0;
  double limit = kInf;
};

inline std::string policy_id(long i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%06ld", i + 1);
  return buf;
}

inline double draw_covariate(const CovariateLaw& c, Rng& rng) {
  switch (c.kind) {
    case CovariateLaw::Uniform: return c.a + (c.b - c.a) * rng.uniform();
    case CovariateLaw::Bernoulli: return rng.bernoulli(c.a) ? 1.0 : 0.0;
    case CovariateLaw::Normal: return c.a + c.b * norm_quantile(rng.uniform());
  }
  return kNaN;
}

/// Per-policy laws for a fully parameterized model and a dataset's covariates.
struct PolicyLaw {
  CountDist N;
  SeverityDist Y;
};

inline std::vector<PolicyLaw> policy_laws(const CompoundModel& m, const Dataset& d) {
  const Design X = Design::build(m, d);
  if (X.claim_level) throw ValidationError("simulation needs policy-level severity covariates");
  std::vector<PolicyLaw> out;
  out.reserve(d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.push_back({count_dist(m.freq, X, ii), severity_dist(m.sev, X, ii, -1)});
    out.back().N.validate();
    out.back().Y.validate();
  }
  return out;
}

inline constexpr std::uint64_t kCovariateSalt = 0x636f76ULL;

/// Draws a dataset from the design. Covariates and claims of policy i come
/// from substreams keyed by (seed, policy id, rep).
inline Dataset generate_synthetic_dataset(const SyntheticDesign& g, std::uint64_t seed, std::uint64_t rep = 0,
                                          unsigned threads = 1) {
  Dataset d;
  d.scheme = g.scheme;
  for (const auto& c : g.covariates) d.policy_columns.push_back(c.name);
  d.records.resize(static_cast<std::size_t>(g.size));
  for (long i = 0; i < g.size; ++i) {
    auto& r = d.records[static_cast<std::size_t>(i)];
    r.id = policy_id(i);
    r.year = 1;
    r.deductible = g.deductible;
    r.limit = g.limit;
    Rng rx = Rng::stream(seed, hash_id(r.id) ^ kCovariateSalt, rep);
    for (const auto& c : g.covariates) r.x.push_back(draw_covariate(c, rx));
  }
  const auto laws = policy_laws(g.truth, d);
  const Copula C(g.truth.copula);
  const Copula Ct(transposed(g.truth.copula));
  parallel_for(d.records.size(), threads, [&](std::size_t i) {
    auto& r = d.records[i];
    Rng rng = Rng::stream(seed, hash_id(r.id), rep);
    const SimDraw s = apply_coverage(r.id, draw_ground_up(laws[i].N, laws[i].Y, C, Ct, rng), r.deductible,
                                     r.limit, g.scheme);
    r.n = s.n;
    for (std::size_t j = 0; j < s.amounts.size(); ++j) r.claims.push_back({s.amounts[j], s.status[j], {}});
  });
  return d;
}

/// Poisson-gamma regression with a Gaussian copula: log E[N] = -1.5 + 2.5 x1 + x2,
/// log E[Y] = 5 - 2.5 x1 + 5 x2, gamma shape 2, x1 ~ U(0,1), x2 ~ Bernoulli(0.5).
inline SyntheticDesign design_regression(double rho, long size = 500) {
  SyntheticDesign g;
  g.covariates = {{CovariateLaw::Uniform, "x1", 0.0, 1.0}, {CovariateLaw::Bernoulli, "x2", 0.5, 0.0}};
  auto& m = g.truth;
  m.freq.kind = CountKind::Poisson;
  m.freq.terms = {"intercept", "x1", "x2"};
  m.sev.kind = SeverityKind::Gamma;
  m.sev.terms = {"intercept", "x1", "x2"};
  m.copula = rho == 0.0 ? CopulaSpec{} : CopulaSpec{CopulaFamily::Gaussian, 0, rho};
  m.resize();
  m.freq.beta << -1.5, 2.5, 1.0;
  m.sev.beta << 5.0, -2.5, 5.0;
  m.sev.shape = 2.0;
  g.size = size;
  return g;
}

/// The regression design with deductible 50 and limit 10000.
inline SyntheticDesign design_incomplete(double rho, Scheme scheme, long size = 500) {
  SyntheticDesign g = design_regression(rho, size);
  g.scheme = scheme;
  g.deductible = 50.0;
  g.limit = 10000.0;
  return g;
}

/// A portfolio shaped like the property application: zero-one inflated
/// negative binomial counts, GB2 severities, Gaussian copula.
inline SyntheticDesign design_portfolio(double rho, long size = 2000) {
  SyntheticDesign g;
  g.covariates = {{CovariateLaw::Bernoulli, "city", 0.3, 0.0},
                  {CovariateLaw::Bernoulli, "alarm", 0.5, 0.0},
                  {CovariateLaw::Normal, "log_deductible", 0.0, 1.0},
                  {CovariateLaw::Normal, "log_coverage", 0.0, 1.0}};
  auto& m = g.truth;
  m.freq.kind = CountKind::ZOINegBin;
  m.freq.terms = {"intercept", "city", "alarm", "log_deductible", "log_coverage"};
  m.freq.zero_terms = {"intercept", "log_deductible"};
  m.freq.one_terms = {"intercept"};
  m.sev.kind = SeverityKind::GB2;
  m.sev.terms = {"intercept", "city", "log_deductible", "log_coverage"};
  m.copula = rho == 0.0 ? CopulaSpec{} : CopulaSpec{CopulaFamily::Gaussian, 0, rho};
  m.resize();
  m.freq.beta << -0.2, 0.3, 0.3, -0.25, 0.8;
  m.freq.eta = 1.2;
  m.freq.beta_zero << -0.7, 0.5;
  m.freq.beta_one << -2.5;
  m.sev.beta << 8.0, -0.5, 0.2, 0.3;
  m.sev.sigma = 0.8;
  m.sev.phi1 = 1.5;
  m.sev.phi2 = 2.5;
  g.size = size;
  return g;
}

// ---------------------------------------------------------------------------
// Portfolio Monte Carlo
// ---------------------------------------------------------------------------

/// Aggregate losses for R replications of every policy. Row r, column i holds
/// the coverage-modified aggregate of policy i in replication r.
struct PortfolioSample {
  long replications = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> policy_ids;
  std::vector<std::vector<double>> s;  // [policy][replication]

  std::vector<double> portfolio_totals() const {
    std::vector<double> t(static_cast<std::size_t>(replications), 0.0);
    for (const auto& col : s)
      for (std::size_t r = 0; r < col.size(); ++r) t[r] += col[r];
    return t;
  }
};

inline PortfolioSample simulate_portfolio(const CompoundModel& m, const Dataset& d, long R, std::uint64_t seed,
                                          Scheme scheme = Scheme::Complete, unsigned threads = 1) {
  const auto laws = policy_laws(m, d);
  const Copula C(m.copula);
  const Copula Ct(transposed(m.copula));
  PortfolioSample out;
  out.replications = R;
  out.seed = seed;
  out.s.assign(d.records.size(), std::vector<double>(static_cast<std::size_t>(R), 0.0));
  for (const auto& r : d.records) out.policy_ids.push_back(r.id);
  parallel_for(d.records.size(), threads, [&](std::size_t i) {
    const auto& r = d.records[i];
    for (long k = 0; k < R; ++k) {
      Rng rng = Rng::stream(seed, hash_id(r.id), static_cast<std::uint64_t>(k));
      const auto g = draw_ground_up(laws[i].N, laws[i].Y, C, Ct, rng);
      const double dd = scheme == Scheme::Complete ? 0.0 : r.deductible;
      const double ll = scheme == Scheme::Complete ? kInf : r.limit;
      out.s[i][static_cast<std::size_t>(k)] = apply_coverage(r.id, g, dd, ll, scheme).s;
    }
  });
  return out;
}

/// Empirical CDF on `points` quantile-spaced abscissae.
struct EcdfPoint {
  double x, F;
};

inline std::vector<EcdfPoint> ecdf_grid(std::vector<double> xs, int points = 512) {
  std::vector<EcdfPoint> out;
  if (xs.empty()) return out;
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  for (int k = 0; k < points; ++k) {
    const double p = (k + 0.5) / points;
    const std::size_t idx = std::min(n - 1, static_cast<std::size_t>(p * static_cast<double>(n)));
    const double x = xs[idx];
    const auto cnt = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    if (!out.empty() && out.back().x == x) continue;
    out.push_back({x, static_cast<double>(cnt) / static_cast<double>(n)});
  }
  return out;
}

}  // namespace ccr
