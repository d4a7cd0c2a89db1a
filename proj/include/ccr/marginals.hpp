#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "ccr/core.hpp"

namespace ccr {

namespace detail {
using namespace boost::math::policies;
using fast_policy = policy<domain_error<errno_on_error>, overflow_error<errno_on_error>,
                           evaluation_error<errno_on_error>, promote_double<false>>;
}  // namespace detail

// ---------------------------------------------------------------------------
// Count distributions
// ---------------------------------------------------------------------------

enum class CountKind { Poisson, NegBin, ZIPoisson, ZINegBin, ZOIPoisson, ZOINegBin };

inline bool is_negbin(CountKind k) {
  return k == CountKind::NegBin || k == CountKind::ZINegBin || k == CountKind::ZOINegBin;
}
inline int inflation_levels(CountKind k) {
  switch (k) {
    case CountKind::ZIPoisson:
    case CountKind::ZINegBin:
      return 1;
    case CountKind::ZOIPoisson:
    case CountKind::ZOINegBin:
      return 2;
    default:
      return 0;
  }
}

inline std::string_view to_string(CountKind k) {
  switch (k) {
    case CountKind::Poisson: return "poisson";
    case CountKind::NegBin: return "negbin";
    case CountKind::ZIPoisson: return "zip";
    case CountKind::ZINegBin: return "zinb";
    case CountKind::ZOIPoisson: return "zoip";
    case CountKind::ZOINegBin: return "zoinb";
  }
  return "?";
}

inline CountKind count_kind_from_string(std::string_view s) {
  for (auto k : {CountKind::Poisson, CountKind::NegBin, CountKind::ZIPoisson,
                 CountKind::ZINegBin, CountKind::ZOIPoisson, CountKind::ZOINegBin})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown count family: " + std::string(s));
}

/// A fully parameterized count law for one policy.
/// mu is the mean of the base Poisson/NB component, eta the NB dispersion,
/// p0/p1 the point masses added at 0 and 1.
struct CountDist {
  CountKind kind = CountKind::Poisson;
  double mu = 1.0;
  double eta = 1.0;
  double p0 = 0.0;
  double p1 = 0.0;

  void validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("count mean must be positive");
    if (is_negbin(kind) && !(eta > 0.0)) throw DomainError("dispersion eta must be positive");
    if (p0 < 0.0 || p1 < 0.0 || p0 + p1 > 1.0) throw DomainError("inflation weights invalid");
  }

  double base_log_pmf(long n) const {
    if (n < 0) return -kInf;
    const double dn = static_cast<double>(n);
    if (!is_negbin(kind)) return dn * std::log(mu) - mu - std::lgamma(dn + 1.0);
    double lg;
    if (n < 64) {
      lg = 0.0;
      for (long k = 0; k < n; ++k) lg += std::log((eta + k) / (k + 1.0));
    } else {
      lg = std::lgamma(eta + dn) - std::lgamma(eta) - std::lgamma(dn + 1.0);
    }
    return lg - eta * std::log1p(mu / eta) + dn * (std::log(mu) - std::log(eta + mu));
  }

  /// Base CDF and survival from incomplete gamma / beta.
  Prob base_cdf(long n) const {
    if (n < 0) return Prob::zero();
    const double a = static_cast<double>(n) + 1.0;
    detail::fast_policy pol;
    if (!is_negbin(kind))
      return {boost::math::gamma_q(a, mu, pol), boost::math::gamma_p(a, mu, pol)};
    const double x = eta / (eta + mu);
    const double y = mu / (eta + mu);
    if (x <= 0.5)
      return {boost::math::ibeta(eta, a, x, pol), boost::math::ibetac(eta, a, x, pol)};
    return {boost::math::ibetac(a, eta, y, pol), boost::math::ibeta(a, eta, y, pol)};
  }

  double log_pmf(long n) const {
    if (n < 0) return -kInf;
    const double w = 1.0 - p0 - p1;
    const double lb = base_log_pmf(n);
    if (n >= 2 || (p0 == 0.0 && p1 == 0.0)) return w > 0.0 ? std::log(w) + lb : -kInf;
    double extra = n == 0 ? p0 : p1;
    return std::log(extra + w * std::exp(lb));
  }

  double pmf(long n) const { return std::exp(log_pmf(n)); }

  Prob cdf(long n) const {
    if (n < 0) return Prob::zero();
    const double w = 1.0 - p0 - p1;
    Prob b = base_cdf(n);
    if (p0 == 0.0 && p1 == 0.0) return b;
    double q = w * b.q + (n < 1 ? p1 : 0.0);
    double p = p0 + (n >= 1 ? p1 : 0.0) + w * b.p;
    return {p, q};
  }

  double mean() const { return (1.0 - p0 - p1) * mu + p1; }

  double variance() const {
    const double w = 1.0 - p0 - p1;
    const double bvar = is_negbin(kind) ? mu + mu * mu / eta : mu;
    const double m2 = w * (bvar + mu * mu) + p1;
    const double m = mean();
    return m2 - m * m;
  }

  /// Smallest n with F(n) >= u, where u is given with its complement.
  long quantile(const Prob& u) const {
    if (u.p <= 0.0) return 0;
    if (u.q <= 0.0) throw DomainError("count quantile at probability 1");
    const bool upper = u.p > 0.5;
    for (long n = 0; n < 100000000; ++n) {
      Prob f = cdf(n);
      if (upper ? f.q <= u.q : f.p >= u.p) return n;
    }
    throw NumericError("count quantile did not terminate");
  }
};

// ---------------------------------------------------------------------------
// Severity distributions
// ---------------------------------------------------------------------------

enum class SeverityKind { Gamma, GB2 };

inline std::string_view to_string(SeverityKind k) {
  return k == SeverityKind::Gamma ? "gamma" : "gb2";
}
inline SeverityKind severity_kind_from_string(std::string_view s) {
  if (s == "gamma") return SeverityKind::Gamma;
  if (s == "gb2") return SeverityKind::GB2;
  throw ValidationError("unknown severity family: " + std::string(s));
}

/// Gamma(shape, scale) or GB2(loc, sigma, phi1, phi2).
/// For GB2, w = (log y - loc) / sigma.
struct SeverityDist {
  SeverityKind kind = SeverityKind::Gamma;
  double shape = 1.0;
  double scale = 1.0;
  double loc = 0.0;
  double sigma = 1.0;
  double phi1 = 1.0;
  double phi2 = 1.0;

  static SeverityDist gamma(double shape, double scale) {
    SeverityDist d;
    d.kind = SeverityKind::Gamma;
    d.shape = shape;
    d.scale = scale;
    return d;
  }
  static SeverityDist gb2(double loc, double sigma, double phi1, double phi2) {
    SeverityDist d;
    d.kind = SeverityKind::GB2;
    d.loc = loc;
    d.sigma = sigma;
    d.phi1 = phi1;
    d.phi2 = phi2;
    return d;
  }

  void validate() const {
    if (kind == SeverityKind::Gamma) {
      if (!(shape > 0.0) || !(scale > 0.0)) throw DomainError("gamma parameters must be positive");
    } else {
      if (!(sigma > 0.0) || !(phi1 > 0.0) || !(phi2 > 0.0))
        throw DomainError("GB2 parameters must be positive");
    }
  }

  double log_pdf(double y) const {
    if (!(y > 0.0)) return -kInf;
    if (y == kInf) return -kInf;
    if (kind == SeverityKind::Gamma) {
      const double z = y / scale;
      return (shape - 1.0) * std::log(z) - z - std::lgamma(shape) - std::log(scale);
    }
    const double ly = std::log(y);
    const double w = (ly - loc) / sigma;
    const double lbeta = std::lgamma(phi1) + std::lgamma(phi2) - std::lgamma(phi1 + phi2);
    return phi1 * w - ly - std::log(sigma) - lbeta - (phi1 + phi2) * softplus(w);
  }

  double pdf(double y) const { return std::exp(log_pdf(y)); }

  Prob cdf(double y) const {
    if (!(y > 0.0)) return Prob::zero();
    if (y == kInf) return Prob::one();
    detail::fast_policy pol;
    if (kind == SeverityKind::Gamma) {
      const double z = y / scale;
      return {boost::math::gamma_p(shape, z, pol), boost::math::gamma_q(shape, z, pol)};
    }
    const double w = (std::log(y) - loc) / sigma;
    const double z = 1.0 / (1.0 + std::exp(-w));
    const double zc = 1.0 / (1.0 + std::exp(w));
    if (z <= 0.5)
      return {boost::math::ibeta(phi1, phi2, z, pol), boost::math::ibetac(phi1, phi2, z, pol)};
    return {boost::math::ibetac(phi2, phi1, zc, pol), boost::math::ibeta(phi2, phi1, zc, pol)};
  }

  double quantile(const Prob& u) const {
    if (u.p <= 0.0) return 0.0;
    if (u.q <= 0.0) return kInf;
    detail::fast_policy pol;
    if (kind == SeverityKind::Gamma) {
      double z = u.p <= 0.5 ? boost::math::gamma_p_inv(shape, u.p, pol)
                            : boost::math::gamma_q_inv(shape, u.q, pol);
      return z * scale;
    }
    double lz, lzc;
    if (u.p <= 0.5) {
      double z = boost::math::ibeta_inv(phi1, phi2, u.p, pol);
      lz = std::log(z);
      lzc = std::log1p(-z);
    } else {
      double zc = boost::math::ibeta_inv(phi2, phi1, u.q, pol);
      lz = std::log1p(-zc);
      lzc = std::log(zc);
    }
    return std::exp(loc + sigma * (lz - lzc));
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("severity quantile needs p in (0,1)");
    return quantile(Prob::from_p(p));
  }

  /// Raw moment E[Y^k]; infinite when it does not exist.
  double raw_moment(int k) const {
    if (kind == SeverityKind::Gamma) {
      double m = 1.0;
      for (int j = 0; j < k; ++j) m *= (shape + j) * scale;
      return m;
    }
    const double ks = k * sigma;
    if (ks >= phi2) return kInf;
    return std::exp(k * loc + std::lgamma(phi1 + ks) + std::lgamma(phi2 - ks) -
                    std::lgamma(phi1) - std::lgamma(phi2));
  }

  double mean() const { return raw_moment(1); }
  double variance() const {
    const double m = mean();
    return raw_moment(2) - m * m;
  }
};

}  // namespace ccr
