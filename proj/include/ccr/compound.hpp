#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ccr/copulas.hpp"
#include "ccr/data.hpp"
#include "ccr/marginals.hpp"
#include "ccr/model.hpp"

namespace ccr {

/// The interval (F_N(n-1), F_N(n)] occupied by count n on the copula's first axis.
struct CountSlice {
  long n = 0;
  Prob lo;
  Prob hi;
  double log_f = -kInf;
  double f = 0.0;
};

inline CountSlice count_slice(const CountDist& N, long n) {
  CountSlice s;
  s.n = n;
  s.lo = N.cdf(n - 1);
  s.hi = N.cdf(n);
  s.log_f = N.log_pmf(n);
  s.f = std::exp(s.log_f);
  return s;
}

// ---- rectangle differences over the count slice ----

/// h(F_N(n), v) - h(F_N(n-1), v): density of V weighted by P(N = n | V = v).
inline double h_diff(const Copula& C, const CountSlice& s, const Prob& v) {
  if (C.independent()) return s.f;
  const Prob ha = C.h(s.lo, v);
  const Prob hb = C.h(s.hi, v);
  const double d = s.lo.p > 0.5 ? ha.q - hb.q : hb.p - ha.p;
  return std::max(0.0, d);
}

/// P(N = n, V <= v).
inline double cdf_diff(const Copula& C, const CountSlice& s, const Prob& v) {
  if (C.independent()) return s.f * v.p;
  const double d = s.lo.p > 0.5 ? C.quadrant(Quadrant::UL, s.lo, v) - C.quadrant(Quadrant::UL, s.hi, v)
                                : C.quadrant(Quadrant::LL, s.hi, v) - C.quadrant(Quadrant::LL, s.lo, v);
  return std::max(0.0, d);
}

/// P(N = n, V > v).
inline double surv_diff(const Copula& C, const CountSlice& s, const Prob& v) {
  if (C.independent()) return s.f * v.q;
  const double d = s.lo.p > 0.5 ? C.quadrant(Quadrant::UU, s.lo, v) - C.quadrant(Quadrant::UU, s.hi, v)
                                : C.quadrant(Quadrant::LU, s.hi, v) - C.quadrant(Quadrant::LU, s.lo, v);
  return std::max(0.0, d);
}

// ---- conditional law of Y given N = n ----

/// F_{Y|N}(y | n) with its complement, given v = F_Y(y).
inline Prob cond_cdf_v(const Copula& C, const CountSlice& s, const Prob& v) {
  if (!(s.f > 0.0)) throw DegenerateConditional("f_N(n) = 0 for n = " + std::to_string(s.n));
  if (C.independent()) return v;
  const double p = std::min(1.0, cdf_diff(C, s, v) / s.f);
  const double q = std::min(1.0, surv_diff(C, s, v) / s.f);
  return {p, q};
}

/// log f_{Y|N}(y | n) from log f_Y(y) and v = F_Y(y).
inline double cond_log_pdf_v(const Copula& C, const CountSlice& s, double log_fy, const Prob& v) {
  if (!(s.f > 0.0)) throw DegenerateConditional("f_N(n) = 0 for n = " + std::to_string(s.n));
  if (C.independent()) return log_fy;
  return log_fy + std::log(h_diff(C, s, v)) - s.log_f;
}

/// Conditional distribution of a claim amount given the policy's claim count.
class Conditional {
 public:
  Conditional(const CountDist& N, const SeverityDist& Y, const Copula& C, long n)
      : Y_(Y), C_(C), s_(count_slice(N, n)) {
    if (n < 0) throw DomainError("negative claim count");
    if (!(s_.f > 0.0)) throw DegenerateConditional("f_N(n) = 0 for n = " + std::to_string(n));
  }

  Prob cdf(double y) const {
    if (y <= 0.0) return Prob::zero();
    if (y == kInf) return Prob::one();
    return cond_cdf_v(C_, s_, Y_.cdf(y));
  }
  double log_pdf(double y) const {
    if (!(y > 0.0) || y == kInf) return -kInf;
    return cond_log_pdf_v(C_, s_, Y_.log_pdf(y), Y_.cdf(y));
  }
  double pdf(double y) const { return std::exp(log_pdf(y)); }
  const CountSlice& slice() const { return s_; }

 private:
  SeverityDist Y_;
  const Copula& C_;
  CountSlice s_;
};

inline Prob cond_cdf(const CountDist& N, const SeverityDist& Y, const Copula& C, long n, double y) {
  return Conditional(N, Y, C, n).cdf(y);
}

inline double cond_pdf(const CountDist& N, const SeverityDist& Y, const Copula& C, long n, double y) {
  return Conditional(N, Y, C, n).pdf(y);
}

// ---------------------------------------------------------------------------
// Per-record log-likelihood
// ---------------------------------------------------------------------------

/// Marginal severity quantities for one observed claim. For interior claims
/// v = F_Y(y + d) and log_f = log f_Y(y + d); at-limit claims carry F_Y(l);
/// below-deductible claims carry F_Y(d).
struct ClaimMarginal {
  ClaimStatus status = ClaimStatus::Interior;
  double log_f = 0.0;
  Prob v;
};

inline ClaimMarginal claim_marginal(const SeverityDist& Y, const PolicyRecord& r, const ClaimRecord& c) {
  ClaimMarginal m;
  m.status = c.status;
  switch (c.status) {
    case ClaimStatus::Interior: {
      const double y = r.ground_up(c);
      m.log_f = Y.log_pdf(y);
      m.v = Y.cdf(y);
      break;
    }
    case ClaimStatus::AtLimit:
      m.v = r.limit == kInf ? Prob::one() : Y.cdf(r.limit);
      break;
    case ClaimStatus::BelowDeductible:
      m.v = r.deductible > 0.0 ? Y.cdf(r.deductible) : Prob::zero();
      break;
  }
  return m;
}

/// Log-likelihood of one record under the complete or censored scheme, from
/// its count slice and claim marginals. The complete scheme is the case with
/// interior claims only.
inline double loglik_observed(const Copula& C, const CountSlice& s, std::span<const ClaimMarginal> claims) {
  if (s.n == 0 || claims.empty()) return s.log_f;
  if (!(s.f > 0.0)) return -kInf;
  double ll = s.log_f;
  if (C.independent()) {
    for (const auto& m : claims) {
      switch (m.status) {
        case ClaimStatus::Interior: ll += m.log_f; break;
        case ClaimStatus::AtLimit: ll += detail::log_q(m.v); break;
        case ClaimStatus::BelowDeductible: ll += detail::log_p(m.v); break;
      }
    }
    return ll;
  }
  for (const auto& m : claims) {
    switch (m.status) {
      case ClaimStatus::Interior: ll += m.log_f + std::log(h_diff(C, s, m.v)) - s.log_f; break;
      case ClaimStatus::AtLimit: ll += std::log(surv_diff(C, s, m.v)) - s.log_f; break;
      case ClaimStatus::BelowDeductible: ll += std::log(cdf_diff(C, s, m.v)) - s.log_f; break;
    }
  }
  return ll;
}

inline double loglik_complete(const CountDist& N, const SeverityDist& Y, const Copula& C, const PolicyRecord& r) {
  const CountSlice s = count_slice(N, r.n);
  std::vector<ClaimMarginal> ms;
  ms.reserve(r.claims.size());
  for (const auto& c : r.claims) {
    if (c.status != ClaimStatus::Interior) throw ValidationError("complete data holds interior claims only");
    ms.push_back(claim_marginal(Y, r, c));
  }
  return loglik_observed(C, s, ms);
}

inline double loglik_censored(const CountDist& N, const SeverityDist& Y, const Copula& C, const PolicyRecord& r) {
  const CountSlice s = count_slice(N, r.n);
  std::vector<ClaimMarginal> ms;
  ms.reserve(r.claims.size());
  for (const auto& c : r.claims) ms.push_back(claim_marginal(Y, r, c));
  return loglik_observed(C, s, ms);
}

// ---- per-payment truncation ----

inline constexpr long kTruncationCap = 200;
inline constexpr double kTruncationTol = 1e-12;

/// log of f_N(m) binom(m, n) prod_j f(y_j | m) S(l | m)^(n-k) F(d | m)^(m-n).
/// `Law` supplies log_pmf(m), below(m) = log F(d | m), above(m) = log S(l | m),
/// log_dens(j, m) for the j-th interior payment, exhausted(m) = [P(N > m) == 0]
/// and no_deductible() = [F_Y(d) == 0].
template <class Law>
double truncated_term(const Law& law, long n, long k, long m) {
  double lt = law.log_pmf(m);
  if (lt == -kInf) return lt;
  lt += std::lgamma(m + 1.0) - std::lgamma(n + 1.0) - std::lgamma(m - n + 1.0);
  for (long j = 0; j < k && lt > -kInf; ++j) lt += law.log_dens(j, m);
  if (n > k && lt > -kInf) lt += static_cast<double>(n - k) * law.above(m);
  if (m > n && lt > -kInf) lt += static_cast<double>(m - n) * law.below(m);
  return lt;
}

/// Sum of truncated_term over m = n, n+1, ... in log space. Stops once the
/// terms decrease and a geometric bound on the tail is below 1e-12 of the
/// partial sum.
template <class Law>
double truncated_series(const Law& law, long n, long k, long* terms_out = nullptr) {
  double ls = -kInf;
  double prev = kNaN;
  for (long m = n;; ++m) {
    const double lt = truncated_term(law, n, k, m);
    if (std::isnan(lt)) throw NumericError("truncated likelihood term is NaN at m = " + std::to_string(m));
    ls = log_sum_exp(ls, lt);
    if (terms_out) *terms_out = m - n + 1;
    if (law.no_deductible()) break;
    if (lt == -kInf && law.exhausted(m)) break;
    if (m > n && std::isfinite(prev) && lt > -kInf && lt < prev) {
      const double lr = lt - prev;
      if (lt + lr - log1mexp(lr) < ls + std::log(kTruncationTol)) break;
    }
    if (m >= n + kTruncationCap)
      throw NumericError("truncated likelihood series did not converge within " +
                         std::to_string(kTruncationCap) + " terms (n = " + std::to_string(n) + ")");
    prev = lt;
  }
  return ls;
}

/// Continuous copula law for one truncated record.
class TruncatedLaw {
 public:
  TruncatedLaw(const CountDist& N, const Copula& C, Prob vd, Prob vl, std::span<const ClaimMarginal> interior)
      : N_(N), C_(C), vd_(vd), vl_(vl), interior_(interior) {}

  double log_pmf(long m) const {
    slice(m);
    return s_.log_f;
  }
  double log_dens(long j, long m) const {
    const auto& s = slice(m);
    const auto& c = interior_[static_cast<std::size_t>(j)];
    if (C_.independent()) return c.log_f;
    return c.log_f + std::log(h_diff(C_, s, c.v)) - s.log_f;
  }
  double above(long m) const {
    if (vl_.q <= 0.0) return -kInf;
    if (C_.independent()) return detail::log_q(vl_);
    const auto& s = slice(m);
    return std::log(surv_diff(C_, s, vl_)) - s.log_f;
  }
  double below(long m) const {
    if (vd_.p <= 0.0) return -kInf;
    if (C_.independent()) return detail::log_p(vd_);
    const auto& s = slice(m);
    return std::log(cdf_diff(C_, s, vd_)) - s.log_f;
  }
  bool exhausted(long m) const { return slice(m).hi.q <= 0.0; }
  bool no_deductible() const { return vd_.p <= 0.0; }

 private:
  const CountSlice& slice(long m) const {
    if (have_ && s_.n == m) return s_;
    if (have_ && s_.n + 1 == m) {
      s_.n = m;
      s_.lo = s_.hi;
      s_.hi = N_.cdf(m);
      s_.log_f = N_.log_pmf(m);
      s_.f = std::exp(s_.log_f);
    } else {
      s_ = count_slice(N_, m);
      have_ = true;
    }
    return s_;
  }
  const CountDist& N_;
  const Copula& C_;
  Prob vd_, vl_;
  std::span<const ClaimMarginal> interior_;
  mutable CountSlice s_;
  mutable bool have_ = false;
};

/// Per-payment truncated log-likelihood from precomputed marginals. `claims`
/// holds interior and at-limit payments.
inline double loglik_truncated_marginals(const CountDist& N, const Copula& C, long n, Prob vd, Prob vl,
                                         std::span<const ClaimMarginal> claims) {
  std::vector<ClaimMarginal> interior;
  interior.reserve(claims.size());
  for (const auto& c : claims)
    if (c.status == ClaimStatus::Interior) interior.push_back(c);
  const long k = static_cast<long>(interior.size());
  TruncatedLaw law(N, C, vd, vl, interior);
  return truncated_series(law, n, k);
}

inline double loglik_truncated(const CountDist& N, const SeverityDist& Y, const Copula& C, const PolicyRecord& r) {
  std::vector<ClaimMarginal> ms;
  ms.reserve(r.claims.size());
  for (const auto& c : r.claims) {
    if (c.status == ClaimStatus::BelowDeductible)
      throw ValidationError("below-deductible claim in truncated data");
    ms.push_back(claim_marginal(Y, r, c));
  }
  const Prob vd = r.deductible > 0.0 ? Y.cdf(r.deductible) : Prob::zero();
  const Prob vl = r.limit == kInf ? Prob::one() : Y.cdf(r.limit);
  return loglik_truncated_marginals(N, C, r.n, vd, vl, ms);
}

inline double loglik_record(const CountDist& N, const SeverityDist& Y, const Copula& C, const PolicyRecord& r,
                            Scheme scheme) {
  switch (scheme) {
    case Scheme::Complete: return loglik_complete(N, Y, C, r);
    case Scheme::PerLossCensored: return loglik_censored(N, Y, C, r);
    case Scheme::PerPaymentTruncated: return loglik_truncated(N, Y, C, r);
  }
  return kNaN;
}

// ---------------------------------------------------------------------------
// Portfolio log-likelihood
// ---------------------------------------------------------------------------

/// Sum of record log-likelihoods for a fully parameterized model. Invalid
/// parameters give -inf.
inline double portfolio_loglik(const CompoundModel& m, const Design& X, const Dataset& d) {
  try {
    const Copula C(m.copula);
    KahanSum sum;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      const auto& r = d.records[i];
      const auto ii = static_cast<Eigen::Index>(i);
      const CountDist N = count_dist(m.freq, X, ii);
      N.validate();
      double ll;
      if (!X.claim_level) {
        const SeverityDist Y = severity_dist(m.sev, X, ii, -1);
        Y.validate();
        ll = loglik_record(N, Y, C, r, d.scheme);
      } else {
        const CountSlice s = count_slice(N, r.n);
        std::vector<ClaimMarginal> ms;
        for (std::size_t c = 0; c < r.claims.size(); ++c) {
          const SeverityDist Y = severity_dist(m.sev, X, ii, static_cast<long>(c));
          Y.validate();
          ms.push_back(claim_marginal(Y, r, r.claims[c]));
        }
        ll = loglik_observed(C, s, ms);
      }
      if (std::isnan(ll)) return -kInf;
      sum.add(ll);
    }
    const double v = sum.value();
    return std::isnan(v) ? -kInf : v;
  } catch (const DomainError&) {
    return -kInf;
  } catch (const NumericError&) {
    return -kInf;
  }
}

}  // namespace ccr
