#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "ccr/compound.hpp"
#include "ccr/model.hpp"

namespace ccr {

// ---------------------------------------------------------------------------
// Pearson chi-square for counts
// ---------------------------------------------------------------------------

struct ChiSquareCell {
  std::string label;
  double observed = 0.0;
  double expected = 0.0;
};

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = kNaN;
  std::vector<ChiSquareCell> table;
  std::vector<std::string> warnings;
};

/// Statistic from a prepared table; df = cells - 1 - fitted.
inline ChiSquareResult pearson_chisq(std::vector<ChiSquareCell> table, int fitted = 0) {
  ChiSquareResult r;
  KahanSum s;
  for (const auto& c : table) {
    if (c.expected < 5.0)
      r.warnings.push_back("expected count in cell " + c.label + " is below 5; consider merging cells");
    if (c.expected > 0.0)
      s.add((c.observed - c.expected) * (c.observed - c.expected) / c.expected);
    else if (c.observed > 0.0)
      s.add(kInf);
  }
  r.statistic = s.value();
  r.df = std::max(1, static_cast<int>(table.size()) - 1 - fitted);
  r.table = std::move(table);
  boost::math::chi_squared_distribution<double> chi(r.df);
  r.p_value = std::isfinite(r.statistic) ? boost::math::cdf(boost::math::complement(chi, r.statistic)) : 0.0;
  return r;
}

/// Cells {0, 1, ..., K, >= K+1}; expected counts from the fitted count model
/// summed over policies.
inline ChiSquareResult pearson_chisq_counts(const CompoundModel& m, const Dataset& d, int K = 5) {
  if (K < 0) throw ValidationError("K must be nonnegative");
  if (d.scheme == Scheme::PerPaymentTruncated)
    throw ValidationError("count goodness of fit needs ground-up counts; not available for truncated data");
  CompoundModel mm = m;
  mm.resize();
  const Design X = Design::build(mm, d);
  std::vector<ChiSquareCell> t(static_cast<std::size_t>(K + 2));
  for (int k = 0; k <= K; ++k) t[static_cast<std::size_t>(k)].label = std::to_string(k);
  t.back().label = ">=" + std::to_string(K + 1);
  std::vector<KahanSum> e(t.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const CountDist N = count_dist(mm.freq, X, static_cast<Eigen::Index>(i));
    for (int k = 0; k <= K; ++k) e[static_cast<std::size_t>(k)].add(std::exp(N.log_pmf(k)));
    e.back().add(N.cdf(K).q);
    const long n = d.records[i].n;
    t[static_cast<std::size_t>(std::min<long>(n, K + 1))].observed += 1.0;
  }
  for (std::size_t k = 0; k < t.size(); ++k) t[k].expected = e[k].value();
  return pearson_chisq(std::move(t), block_size(param_layout(mm), Block::Frequency));
}

// ---------------------------------------------------------------------------
// Cox-Snell residuals
// ---------------------------------------------------------------------------

struct Residual {
  std::string policy_id;
  long claim = 0;  // position within the policy
  double u = kNaN;
  double z = kNaN;  // normal score
};

inline constexpr double kResidualClamp = 1e-12;

inline Residual make_residual(std::string id, long claim, double u) {
  u = std::clamp(u, kResidualClamp, 1.0 - kResidualClamp);
  return {std::move(id), claim, u, norm_quantile(u)};
}

/// Fitted conditional CDF at each observed claim. Under per-loss censoring only
/// interior claims contribute, renormalized to the coverage window.
inline std::vector<Residual> cox_snell_residuals(const CompoundModel& m, const Dataset& d) {
  if (d.scheme == Scheme::PerPaymentTruncated)
    throw ValidationError("residuals need the ground-up claim count; not available for truncated data");
  CompoundModel mm = m;
  mm.resize();
  const Design X = Design::build(mm, d);
  const Copula C(mm.copula);
  std::vector<Residual> out;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    if (r.n == 0) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    const CountDist N = count_dist(mm.freq, X, ii);
    const CountSlice s = count_slice(N, r.n);
    for (std::size_t c = 0; c < r.claims.size(); ++c) {
      const auto& cl = r.claims[c];
      const SeverityDist Y = severity_dist(mm.sev, X, ii, X.claim_level ? static_cast<long>(c) : -1);
      if (d.scheme == Scheme::Complete) {
        out.push_back(make_residual(r.id, static_cast<long>(c), cond_cdf_v(C, s, Y.cdf(cl.amount)).p));
        continue;
      }
      if (cl.status != ClaimStatus::Interior) continue;
      const double F = cond_cdf_v(C, s, Y.cdf(r.ground_up(cl))).p;
      const double Fd = r.deductible > 0.0 ? cond_cdf_v(C, s, Y.cdf(r.deductible)).p : 0.0;
      const double Fl = r.limit < kInf ? cond_cdf_v(C, s, Y.cdf(r.limit)).p : 1.0;
      if (!(Fl > Fd)) continue;
      out.push_back(make_residual(r.id, static_cast<long>(c), (F - Fd) / (Fl - Fd)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Uniformity tests
// ---------------------------------------------------------------------------

struct TestStat {
  double statistic = kNaN;
  double p_value = kNaN;
};

struct UniformityTests {
  long n = 0;
  TestStat ks, cvm, ad;
};

/// Asymptotic Kolmogorov tail P(K > t).
inline double kolmogorov_tail(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// Asymptotic Cramer-von Mises CDF (Anderson-Darling 1952 series).
inline double cvm_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x > 10.0) return 1.0;
  double s = 0.0;
  for (int j = 0; j < 50; ++j) {
    const double a = (4.0 * j + 1.0) * (4.0 * j + 1.0) / (16.0 * x);
    if (a > 700.0) break;
    const double c = std::exp(std::lgamma(j + 0.5) - std::lgamma(0.5) - std::lgamma(j + 1.0));
    s += c * std::sqrt(4.0 * j + 1.0) * std::exp(-a) * boost::math::cyl_bessel_k(0.25, a);
  }
  return std::clamp(s / (M_PI * std::sqrt(x)), 0.0, 1.0);
}

/// Asymptotic Anderson-Darling CDF (Marsaglia and Marsaglia 2004).
inline double ad_cdf(double z) {
  if (z <= 0.0) return 0.0;
  if (z < 2.0)
    return std::exp(-1.2337141 / z) / std::sqrt(z) *
           (2.00012 + (.247105 - (.0649821 - (.0347962 - (.011672 - .00168691 * z) * z) * z) * z) * z);
  return std::exp(-std::exp(1.0776 - (2.30695 - (.43424 - (.082433 - (.008056 - .0003146 * z) * z) * z) * z) * z));
}

inline UniformityTests uniformity_tests(std::vector<double> u) {
  if (u.size() < 8) throw ValidationError("uniformity tests need at least 8 residuals");
  std::sort(u.begin(), u.end());
  const auto n = u.size();
  const double dn = static_cast<double>(n);
  UniformityTests t;
  t.n = static_cast<long>(n);

  double D = 0.0, W = 1.0 / (12.0 * dn);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(i);
    D = std::max({D, (k + 1.0) / dn - u[i], u[i] - k / dn});
    const double e = u[i] - (2.0 * k + 1.0) / (2.0 * dn);
    W += e * e;
  }
  t.ks.statistic = D;
  t.ks.p_value = kolmogorov_tail((std::sqrt(dn) + 0.12 + 0.11 / std::sqrt(dn)) * D);
  t.cvm.statistic = W;
  const double Wm = (W - 0.4 / dn + 0.6 / (dn * dn)) * (1.0 + 1.0 / dn);
  t.cvm.p_value = 1.0 - cvm_cdf(Wm);

  const bool degenerate = u.front() == u.back() || u.front() <= 0.0 || u.back() >= 1.0;
  if (degenerate) {
    t.ad.statistic = kInf;
    t.ad.p_value = 0.0;
  } else {
    KahanSum s;
    for (std::size_t i = 0; i < n; ++i)
      s.add((2.0 * static_cast<double>(i) + 1.0) * (std::log(u[i]) + std::log1p(-u[n - 1 - i])));
    t.ad.statistic = -dn - s.value() / dn;
    t.ad.p_value = 1.0 - ad_cdf(t.ad.statistic);
  }
  return t;
}

inline UniformityTests uniformity_tests(const std::vector<Residual>& r) {
  std::vector<double> u;
  u.reserve(r.size());
  for (const auto& x : r) u.push_back(x.u);
  return uniformity_tests(std::move(u));
}

// ---------------------------------------------------------------------------
// Normal QQ data
// ---------------------------------------------------------------------------

struct QQPoint {
  double theoretical, sample;
};

inline std::vector<QQPoint> qq_normal_scores(const std::vector<double>& u) {
  std::vector<double> z;
  z.reserve(u.size());
  for (double v : u) z.push_back(norm_quantile(std::clamp(v, kResidualClamp, 1.0 - kResidualClamp)));
  std::sort(z.begin(), z.end());
  std::vector<QQPoint> out;
  const double n = static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out.push_back({norm_quantile((static_cast<double>(i) + 0.5) / n), z[i]});
  return out;
}

inline std::vector<QQPoint> qq_normal_scores(const std::vector<Residual>& r) {
  std::vector<double> u;
  for (const auto& x : r) u.push_back(x.u);
  return qq_normal_scores(u);
}

}  // namespace ccr
