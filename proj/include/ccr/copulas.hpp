#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "ccr/core.hpp"
#include "ccr/marginals.hpp"
#include "ccr/rng.hpp"

namespace ccr {

enum class CopulaFamily { Independence, Gaussian, StudentT, Clayton, Gumbel, Frank, Joe };

inline std::string_view to_string(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::Independence: return "independence";
    case CopulaFamily::Gaussian: return "gaussian";
    case CopulaFamily::StudentT: return "t";
    case CopulaFamily::Clayton: return "clayton";
    case CopulaFamily::Gumbel: return "gumbel";
    case CopulaFamily::Frank: return "frank";
    case CopulaFamily::Joe: return "joe";
  }
  return "?";
}

inline CopulaFamily copula_family_from_string(std::string_view s) {
  for (auto f : {CopulaFamily::Independence, CopulaFamily::Gaussian, CopulaFamily::StudentT,
                 CopulaFamily::Clayton, CopulaFamily::Gumbel, CopulaFamily::Frank,
                 CopulaFamily::Joe})
    if (to_string(f) == s) return f;
  if (s == "normal") return CopulaFamily::Gaussian;
  if (s == "student" || s == "student_t") return CopulaFamily::StudentT;
  throw ValidationError("unknown copula family: " + std::string(s));
}

inline bool is_archimedean(CopulaFamily f) {
  return f == CopulaFamily::Clayton || f == CopulaFamily::Gumbel || f == CopulaFamily::Frank ||
         f == CopulaFamily::Joe;
}

/// Number of association parameters (t carries rho and nu).
inline int copula_param_count(CopulaFamily f) {
  if (f == CopulaFamily::Independence) return 0;
  if (f == CopulaFamily::StudentT) return 2;
  return 1;
}

struct CopulaSpec {
  CopulaFamily family = CopulaFamily::Independence;
  int rotation = 0;    ///< 0, 90 or 270
  double theta = 0.0;  ///< rho for elliptical families
  double nu = 4.0;     ///< Student-t degrees of freedom

  std::string label() const {
    std::string s(to_string(family));
    if (rotation != 0) s += std::to_string(rotation);
    return s;
  }
};

/// Which quadrant probability to evaluate: first letter refers to U, second
/// to V; L means "<=", U means ">".
enum class Quadrant { LL, UL, LU, UU };

namespace detail {

inline double log_p(const Prob& x) { return x.p > 0.5 ? std::log1p(-x.q) : std::log(x.p); }
inline double log_q(const Prob& x) { return x.q > 0.5 ? std::log1p(-x.p) : std::log(x.q); }

// Bivariate normal upper orthant P(X > dh, Y > dk) with correlation r.
// Genz (2004) double-precision algorithm.
inline double bvnu(double dh, double dk, double r) {
  constexpr double tp = 2.0 * std::numbers::pi;
  if (dh == kInf || dk == kInf) return 0.0;
  if (dh == -kInf) return dk == -kInf ? 1.0 : norm_cdf(-dk);
  if (dk == -kInf) return norm_cdf(-dh);
  if (r == 0.0) return norm_cdf(-dh) * norm_cdf(-dk);

  static constexpr double w6[3] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
  static constexpr double x6[3] = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
  static constexpr double w12[6] = {0.04717533638651177, 0.1069393259953183,
                                    0.1600783285433464,  0.2031674267230659,
                                    0.2334925365383547,  0.2491470458134029};
  static constexpr double x12[6] = {0.9815606342467191, 0.9041172563704750,
                                    0.7699026741943050, 0.5873179542866171,
                                    0.3678314989981802, 0.1252334085114692};
  static constexpr double w20[10] = {
      0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
      0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
      0.1491729864726037,  0.1527533871307259};
  static constexpr double x20[10] = {
      0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
      0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
      0.2277858511416451, 0.07652652113349733};

  const double* w;
  const double* x;
  int lg;
  const double ar = std::fabs(r);
  if (ar < 0.3) {
    w = w6, x = x6, lg = 3;
  } else if (ar < 0.75) {
    w = w12, x = x12, lg = 6;
  } else {
    w = w20, x = x20, lg = 10;
  }

  double h = dh, k = dk, hk = h * k, bvn = 0.0;
  if (ar < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    for (int i = 0; i < lg; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sgn * x[i]));
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = 1.0 - r * r;
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 80.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0)
        bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
      if (hk > -100.0) {
        const double b = std::sqrt(bs);
        const double sp = std::sqrt(tp) * norm_cdf(-b / a);
        bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
      }
      a /= 2.0;
      double acc = 0.0;
      for (int i = 0; i < lg; ++i) {
        for (double sgn : {-1.0, 1.0}) {
          double xs = a * (1.0 + sgn * x[i]);
          xs *= xs;
          const double asr2 = -(bs / xs + hk) / 2.0;
          if (asr2 > -100.0) {
            const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
            const double rs = std::sqrt(1.0 - xs);
            const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
            acc += w[i] * std::exp(asr2) * (sp - ep);
          }
        }
      }
      bvn = (a * acc - bvn) / tp;
    }
    if (r > 0.0) {
      bvn += norm_cdf(-std::max(h, k));
    } else if (h >= k) {
      bvn = -bvn;
    } else {
      const double L = h < 0.0 ? norm_cdf(k) - norm_cdf(h) : norm_cdf(-h) - norm_cdf(-k);
      bvn = L - bvn;
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

/// Solve f(x) = 0 on [lo, hi] for increasing f; Newton steps guarded by
/// bisection. fd returns (f, f').
template <class F>
double newton_bisect(F fd, double lo, double hi, double x0, double tol = 1e-14,
                     int max_iter = 200) {
  double x = std::clamp(x0, lo, hi);
  for (int it = 0; it < max_iter; ++it) {
    auto [f, d] = fd(x);
    if (f == 0.0) return x;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    double nx = x - f / d;
    if (!(nx > lo && nx < hi) || !std::isfinite(nx)) nx = 0.5 * (lo + hi);
    if (std::fabs(nx - x) <= tol * std::max(1.0, std::fabs(x)) || hi - lo <= tol) return nx;
    x = nx;
  }
  return x;
}

}  // namespace detail

/// A copula ready for evaluation. Every probability argument is passed as a
/// Prob so values close to 1 keep their complements.
class Copula {
 public:
  Copula() = default;
  explicit Copula(const CopulaSpec& s) : spec_(s) {
    validate();
    if (s.family == CopulaFamily::Gaussian || s.family == CopulaFamily::StudentT) {
      rho_ = s.theta;
      sr_ = std::sqrt((1.0 - rho_) * (1.0 + rho_));
    }
    if (s.family == CopulaFamily::StudentT) {
      t_nu_ = boost::math::students_t_distribution<double, detail::fast_policy>(s.nu);
      t_nu1_ = boost::math::students_t_distribution<double, detail::fast_policy>(s.nu + 1.0);
      lt_const_ = std::lgamma((s.nu + 1.0) / 2.0) - std::lgamma(s.nu / 2.0) -
                  0.5 * std::log(s.nu * std::numbers::pi);
    }
    if (s.family == CopulaFamily::Frank) {
      if (std::fabs(s.theta) < 1e-10) indep_ = true;
      lc_ = frank_la(1.0);
    }
    if (s.family == CopulaFamily::Independence) indep_ = true;
  }

  const CopulaSpec& spec() const { return spec_; }
  bool independent() const { return indep_; }

  void validate() const {
    const auto& s = spec_;
    if (s.rotation != 0 && s.rotation != 90 && s.rotation != 270)
      throw DomainError("rotation must be 0, 90 or 270");
    if (s.rotation != 0 && !is_archimedean(s.family))
      throw DomainError("rotations apply to Archimedean families only");
    switch (s.family) {
      case CopulaFamily::Independence:
        break;
      case CopulaFamily::Gaussian:
      case CopulaFamily::StudentT:
        if (!(std::fabs(s.theta) < 1.0)) throw DomainError("correlation must lie in (-1,1)");
        if (s.family == CopulaFamily::StudentT && !(s.nu > 0.0))
          throw DomainError("t copula needs nu > 0");
        break;
      case CopulaFamily::Clayton:
        if (!(s.theta > 0.0) || !std::isfinite(s.theta)) throw DomainError("Clayton needs theta > 0");
        break;
      case CopulaFamily::Gumbel:
      case CopulaFamily::Joe:
        if (!(s.theta >= 1.0) || !std::isfinite(s.theta)) throw DomainError("theta must be >= 1");
        break;
      case CopulaFamily::Frank:
        if (!std::isfinite(s.theta)) throw DomainError("Frank theta must be finite");
        break;
    }
  }

  // ---- public API with rotation applied ----

  double quadrant(Quadrant q, const Prob& u, const Prob& v) const {
    switch (spec_.rotation) {
      case 90: {
        // U' = 1 - U
        static constexpr Quadrant m[4] = {Quadrant::UL, Quadrant::LL, Quadrant::UU, Quadrant::LU};
        return base_quadrant(m[static_cast<int>(q)], u.flip(), v);
      }
      case 270: {
        static constexpr Quadrant m[4] = {Quadrant::LU, Quadrant::UU, Quadrant::LL, Quadrant::UL};
        return base_quadrant(m[static_cast<int>(q)], u, v.flip());
      }
      default:
        return base_quadrant(q, u, v);
    }
  }

  double cdf(const Prob& u, const Prob& v) const { return quadrant(Quadrant::LL, u, v); }
  double cdf(double u, double v) const { return cdf(Prob::from_p(u), Prob::from_p(v)); }

  /// h(u,v) = dC/dv = P(U <= u | V = v), with its complement.
  Prob h(const Prob& u, const Prob& v) const {
    switch (spec_.rotation) {
      case 90:
        return base_h(u.flip(), v).flip();
      case 270:
        return base_h(u, v.flip());
      default:
        return base_h(u, v);
    }
  }
  double hfunc(double u, double v) const { return h(Prob::from_p(u), Prob::from_p(v)).p; }

  /// Inverse of h in its first argument.
  Prob hinv(const Prob& w, const Prob& v) const {
    switch (spec_.rotation) {
      case 90:
        return base_hinv(w.flip(), v).flip();
      case 270:
        return base_hinv(w, v.flip());
      default:
        return base_hinv(w, v);
    }
  }
  double hinv(double w, double v) const { return hinv(Prob::from_p(w), Prob::from_p(v)).p; }

  double log_density(const Prob& u, const Prob& v) const {
    switch (spec_.rotation) {
      case 90:
        return base_log_density(u.flip(), v);
      case 270:
        return base_log_density(u, v.flip());
      default:
        return base_log_density(u, v);
    }
  }
  double density(double u, double v) const {
    return std::exp(log_density(Prob::from_p(u), Prob::from_p(v)));
  }

  /// Draw (u, v): v uniform, then u from the conditional law given v.
  std::pair<double, double> sample(Rng& rng) const {
    const double v = rng.uniform();
    const double w = rng.uniform();
    return {hinv(w, v), v};
  }

 private:
  // ---- unrotated families ----

  double base_quadrant(Quadrant q, const Prob& u, const Prob& v) const {
    // exact boundaries
    if (u.p <= 0.0 || u.q <= 0.0 || v.p <= 0.0 || v.q <= 0.0 || indep_) {
      const double pu = q == Quadrant::LL || q == Quadrant::LU ? u.p : u.q;
      const double pv = q == Quadrant::LL || q == Quadrant::UL ? v.p : v.q;
      return pu * pv;
    }
    switch (spec_.family) {
      case CopulaFamily::Gaussian: {
        const double x = norm_quantile(u), y = norm_quantile(v);
        switch (q) {
          case Quadrant::LL: return detail::bvnu(-x, -y, rho_);
          case Quadrant::UL: return detail::bvnu(x, -y, -rho_);
          case Quadrant::LU: return detail::bvnu(-x, y, -rho_);
          case Quadrant::UU: return detail::bvnu(x, y, rho_);
        }
        break;
      }
      case CopulaFamily::StudentT:
        return t_quadrant(q, u, v);
      case CopulaFamily::Frank:
        switch (q) {
          case Quadrant::LL: return frank_cdf(u, v);
          case Quadrant::UL: return frank_comp(u, v);
          case Quadrant::LU: return frank_comp(v, u);
          case Quadrant::UU: return frank_cdf(u.flip(), v.flip());
        }
        break;
      default: {
        // exchangeable Archimedean: C and P(U>u, V<=v) in closed form
        switch (q) {
          case Quadrant::LL: return arch_cdf(u, v);
          case Quadrant::UL: return arch_comp(u, v);
          case Quadrant::LU: return arch_comp(v, u);
          case Quadrant::UU:
            return u.q <= v.q ? std::max(0.0, u.q - arch_comp(u, v))
                              : std::max(0.0, v.q - arch_comp(v, u));
        }
      }
    }
    return kNaN;
  }

  Prob base_h(const Prob& u, Prob v) const {
    if (u.p <= 0.0) return Prob::zero();
    if (u.q <= 0.0) return Prob::one();
    if (indep_) return u;
    if (v.p <= 0.0) v = {1e-300, 1.0};
    if (v.q <= 0.0) v = {1.0, 1e-300};
    const double th = spec_.theta;
    switch (spec_.family) {
      case CopulaFamily::Gaussian: {
        const double z = (norm_quantile(u) - rho_ * norm_quantile(v)) / sr_;
        return norm_prob(z);
      }
      case CopulaFamily::StudentT: {
        const double z = t_hz(t_quantile(u), t_quantile(v));
        return t1_prob(z);
      }
      case CopulaFamily::Clayton: {
        const double sp = clayton_sp(u, v);
        const double e = -(1.0 + th) / th * sp;
        return {std::exp(e), -std::expm1(e)};
      }
      case CopulaFamily::Gumbel: {
        const double x = -detail::log_p(u), y = -detail::log_p(v);
        const double l1r = softplus(th * (std::log(x) - std::log(y)));
        const double g = y * std::expm1(l1r / th);
        const double lh = -g - (th - 1.0) / th * l1r;
        return {std::exp(lh), -std::expm1(lh)};
      }
      case CopulaFamily::Frank: {
        const double ld = frank_log_d(u, v);
        return {std::exp(-th * v.p + frank_la(u.p) - ld), std::exp(-th * u.p + frank_la(u.q) - ld)};
      }
      case CopulaFamily::Joe: {
        const double lub = detail::log_q(u), lvb = detail::log_q(v);
        const double om_u = -std::expm1(th * lub);  // 1 - ubar^theta
        const double ls = th * lub + std::log(-std::expm1(th * lvb)) - th * lvb;
        const double lh = std::log(om_u) + (1.0 - th) / th * softplus(ls);
        return {std::exp(lh), -std::expm1(lh)};
      }
      default:
        break;
    }
    return u;
  }

  double base_log_density(const Prob& u, const Prob& v) const {
    if (indep_) return 0.0;
    if (u.p <= 0.0 || u.q <= 0.0 || v.p <= 0.0 || v.q <= 0.0) return kNaN;
    const double th = spec_.theta;
    switch (spec_.family) {
      case CopulaFamily::Gaussian: {
        const double x = norm_quantile(u), y = norm_quantile(v);
        const double r2 = rho_ * rho_;
        return -(r2 * (x * x + y * y) - 2.0 * rho_ * x * y) / (2.0 * sr_ * sr_) -
               std::log(sr_);
      }
      case CopulaFamily::StudentT: {
        const double nu = spec_.nu;
        const double x = t_quantile(u), y = t_quantile(v);
        const double q = (x * x - 2.0 * rho_ * x * y + y * y) / (nu * sr_ * sr_);
        const double lf2 = std::lgamma((nu + 2.0) / 2.0) - std::lgamma(nu / 2.0) -
                           std::log(nu * std::numbers::pi) - std::log(sr_) -
                           (nu + 2.0) / 2.0 * std::log1p(q);
        return lf2 - t_log_pdf(x) - t_log_pdf(y);
      }
      case CopulaFamily::Clayton: {
        const double a = -th * detail::log_p(u), b = -th * detail::log_p(v);
        const double lS = b + clayton_sp(u, v);
        return std::log1p(th) + (1.0 + th) / th * (a + b) - (2.0 + 1.0 / th) * lS;
      }
      case CopulaFamily::Gumbel: {
        const double x = -detail::log_p(u), y = -detail::log_p(v);
        const double l1r = softplus(th * (std::log(x) - std::log(y)));
        const double m = y * std::exp(l1r / th);
        return -m + x + y + (th - 1.0) * (std::log(x) + std::log(y)) +
               (1.0 - 2.0 * th) * std::log(m) + std::log(m + th - 1.0);
      }
      case CopulaFamily::Frank:
        return std::log(std::fabs(th)) + lc_ - th * (u.p + v.p) - 2.0 * frank_log_d(u, v);
      case CopulaFamily::Joe: {
        const double lub = detail::log_q(u), lvb = detail::log_q(v);
        const double lS = std::log1p(-std::expm1(th * lub) * std::expm1(th * lvb));
        const double S = std::exp(lS);
        return (1.0 / th - 2.0) * lS + (th - 1.0) * (lub + lvb) + std::log(th - 1.0 + S);
      }
      default:
        break;
    }
    return 0.0;
  }

  Prob base_hinv(const Prob& w, Prob v) const {
    if (w.p <= 0.0) return Prob::zero();
    if (w.q <= 0.0) return Prob::one();
    if (indep_) return w;
    if (v.p <= 0.0) v = {1e-300, 1.0};
    if (v.q <= 0.0) v = {1.0, 1e-300};
    const double th = spec_.theta;
    switch (spec_.family) {
      case CopulaFamily::Gaussian: {
        const double x = rho_ * norm_quantile(v) + sr_ * norm_quantile(w);
        return norm_prob(x);
      }
      case CopulaFamily::StudentT: {
        const double nu = spec_.nu;
        const double y = t_quantile(v);
        const double sc = std::hypot(std::sqrt(nu), y) * sr_ / std::sqrt(nu + 1.0);
        const double z = w.p <= 0.5 ? boost::math::quantile(t_nu1_, w.p)
                                    : -boost::math::quantile(t_nu1_, w.q);
        const double x = rho_ * y + sc * z;
        return t_prob(x);
      }
      case CopulaFamily::Clayton: {
        const double k = (1.0 + th) / th;
        const double b = -th * detail::log_p(v);
        const double sp = -detail::log_p(w) / k;
        const double lt = log_expm1(sp);
        const double a = softplus(lt + b);
        return {std::exp(-a / th), -std::expm1(-a / th)};
      }
      case CopulaFamily::Gumbel: {
        // solve for delta = m - y >= 0
        const double y = -detail::log_p(v);
        const double lw = detail::log_p(w);
        auto fd = [&](double d) {
          return std::pair{d + (th - 1.0) * std::log1p(d / y) + lw, 1.0 + (th - 1.0) / (y + d)};
        };
        double hi = -lw + 1.0;
        const double d = detail::newton_bisect(fd, 0.0, hi, 0.0, 1e-15);
        const double lx = std::log(y) + log_expm1(th * std::log1p(d / y)) / th;
        const double x = std::exp(lx);
        return {std::exp(-x), -std::expm1(-x)};
      }
      case CopulaFamily::Frank: {
        // e^{-theta u} = (w e^{-theta} + (1-w) e^{-theta v}) / (w + (1-w) e^{-theta v})
        const double lw = detail::log_p(w), lwb = detail::log_q(w);
        const double num = log_sum_exp(lw - th, lwb - th * v.p);
        const double den = log_sum_exp(lw, lwb - th * v.p);
        const double u = std::clamp(-(num - den) / th, 0.0, 1.0);
        return {u, 1.0 - u};
      }
      case CopulaFamily::Joe: {
        // x = 1 - ubar^theta in [0,1]; h = x (1 + (1-x) k)^((1-theta)/theta)
        const double lvb = detail::log_q(v);
        const double lk = std::log(-std::expm1(th * lvb)) - th * lvb;
        const double k = std::exp(lk);
        const double e = (1.0 - th) / th;
        const double lw = detail::log_p(w);
        auto fd = [&](double x) {
          const double base = 1.0 + (1.0 - x) * k;
          const double f = std::log(x) + e * std::log(base) - lw;
          const double d = 1.0 / x - e * k / base;
          return std::pair{f, d};
        };
        const double x = detail::newton_bisect(fd, 0.0, 1.0, w.p, 1e-16);
        const double lub = std::log1p(-x) / th;
        return {-std::expm1(lub), std::exp(lub)};
      }
      default:
        break;
    }
    return w;
  }

  // ---- Archimedean closed forms (exchangeable, unrotated) ----

  // log1p(t) for Clayton with t = e^{-b} expm1(a)
  double clayton_sp(const Prob& u, const Prob& v) const {
    const double th = spec_.theta;
    const double a = -th * detail::log_p(u), b = -th * detail::log_p(v);
    if (a == 0.0) return 0.0;
    return softplus(log_expm1(a) - b);
  }

  double arch_cdf(const Prob& u, const Prob& v) const {
    const double th = spec_.theta;
    switch (spec_.family) {
      case CopulaFamily::Clayton:
        return v.p * std::exp(-clayton_sp(u, v) / th);
      case CopulaFamily::Gumbel: {
        const double x = -detail::log_p(u), y = -detail::log_p(v);
        const double g = y * std::expm1(softplus(th * (std::log(x) - std::log(y))) / th);
        return v.p * std::exp(-g);
      }
      case CopulaFamily::Joe: {
        const double lub = detail::log_q(u), lvb = detail::log_q(v);
        const double lS = std::log1p(-std::expm1(th * lub) * std::expm1(th * lvb));
        return -std::expm1(lS / th);
      }
      default:
        return kNaN;
    }
  }

  // P(U > u, V <= v)
  double arch_comp(const Prob& u, const Prob& v) const {
    const double th = spec_.theta;
    switch (spec_.family) {
      case CopulaFamily::Clayton:
        return -v.p * std::expm1(-clayton_sp(u, v) / th);
      case CopulaFamily::Gumbel: {
        const double x = -detail::log_p(u), y = -detail::log_p(v);
        const double g = y * std::expm1(softplus(th * (std::log(x) - std::log(y))) / th);
        return -v.p * std::expm1(-g);
      }
      case CopulaFamily::Joe: {
        const double lub = detail::log_q(u), lvb = detail::log_q(v);
        const double ls = th * lub + std::log(-std::expm1(th * lvb)) - th * lvb;
        return v.q * std::expm1(softplus(ls) / th);
      }
      default:
        return kNaN;
    }
  }

  // log |expm1(-theta x)|
  double frank_la(double x) const {
    const double t = spec_.theta * x;
    if (t == 0.0) return -kInf;
    return t > 0.0 ? log1mexp(-t) : log_expm1(-t);
  }

  // log |c + ab| with a = expm1(-theta u), b = expm1(-theta v), c = expm1(-theta),
  // written as a sum of same-signed terms
  double frank_log_d(const Prob& u, const Prob& v) const {
    const double th = spec_.theta;
    return log_sum_exp(-th * u.p + frank_la(v.p), -th * v.p + frank_la(v.q));
  }

  double frank_cdf(const Prob& u, const Prob& v) const {
    const double th = spec_.theta;
    const double lr = frank_la(u.p) + frank_la(v.p) - lc_;
    double c;
    if (lr < std::log(0.5))
      c = -std::log1p(-std::copysign(std::exp(lr), th)) / th;
    else
      c = -(frank_log_d(u, v) - lc_) / th;
    return std::clamp(c, 0.0, std::min(u.p, v.p));
  }

  // P(U > u, V <= v) using radial symmetry when u is near 1
  double frank_comp(const Prob& u, const Prob& v) const {
    if (u.p > 0.5) return std::max(0.0, u.q - frank_cdf(u.flip(), v.flip()));
    return std::max(0.0, v.p - frank_cdf(u, v));
  }

  // ---- Student t helpers ----

  double t_quantile(const Prob& u) const {
    return u.p <= 0.5 ? boost::math::quantile(t_nu_, u.p) : -boost::math::quantile(t_nu_, u.q);
  }
  Prob t_prob(double x) const {
    return {boost::math::cdf(t_nu_, x), boost::math::cdf(t_nu_, -x)};
  }
  Prob t1_prob(double z) const {
    return {boost::math::cdf(t_nu1_, z), boost::math::cdf(t_nu1_, -z)};
  }
  double t_log_pdf(double x) const {
    return lt_const_ - (spec_.nu + 1.0) / 2.0 * std::log1p(x * x / spec_.nu);
  }
  double t_hz(double x, double y) const {
    const double nu = spec_.nu;
    const double k = sr_ / std::sqrt(nu + 1.0);
    if (!std::isfinite(y)) return (y > 0 ? -rho_ : rho_) / k;
    return (x - rho_ * y) / (std::hypot(std::sqrt(nu), y) * k);
  }

  // P(U ? u, V ? v) as an integral of the conditional law over the smaller
  // side in v.
  double t_quadrant(Quadrant q, const Prob& u, const Prob& v) const {
    const double x = t_quantile(u), y = t_quantile(v);
    const bool u_low = q == Quadrant::LL || q == Quadrant::LU;
    const bool v_low = q == Quadrant::LL || q == Quadrant::UL;
    auto integrand = [&](double s) {
      const double z = t_hz(x, s);
      const double c = boost::math::cdf(t_nu1_, u_low ? z : -z);
      return c * std::exp(t_log_pdf(s));
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double pu = u_low ? u.p : u.q;
    // integrate over V <= v or V > v, whichever has the smaller mass
    if (v_low == (v.p <= 0.5)) {
      double r = v_low ? GK::integrate(integrand, -kInf, y, 15, 1e-13)
                       : GK::integrate(integrand, y, kInf, 15, 1e-13);
      return std::clamp(r, 0.0, std::min(pu, v_low ? v.p : v.q));
    }
    double other = v_low ? GK::integrate(integrand, y, kInf, 15, 1e-13)
                         : GK::integrate(integrand, -kInf, y, 15, 1e-13);
    return std::clamp(pu - other, 0.0, std::min(pu, v_low ? v.p : v.q));
  }

  CopulaSpec spec_{};
  bool indep_ = false;
  double rho_ = 0.0;
  double sr_ = 1.0;
  double lc_ = 0.0;
  double lt_const_ = 0.0;
  boost::math::students_t_distribution<double, detail::fast_policy> t_nu_{4.0};
  boost::math::students_t_distribution<double, detail::fast_policy> t_nu1_{5.0};
};

// ---------------------------------------------------------------------------
// Kendall's tau
// ---------------------------------------------------------------------------

namespace detail {

/// Debye function D1(x) = (1/x) int_0^x t / (e^t - 1) dt, x > 0.
inline double debye1(double x) {
  auto f = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, x, 15, 1e-14) /
         x;
}

inline double frank_tau(double th) {
  const double a = std::fabs(th);
  double t;
  if (a < 0.1) {
    const double a2 = a * a;
    t = a / 9.0 - a * a2 / 900.0 + a * a2 * a2 / 52920.0;
  } else {
    t = 1.0 - 4.0 / a * (1.0 - debye1(a));
  }
  return th < 0.0 ? -t : t;
}

inline double joe_tau_raw(double th) {
  using boost::math::digamma;
  return 1.0 + 2.0 / (2.0 - th) * (digamma(2.0) - digamma(2.0 / th + 1.0));
}

inline double joe_tau(double th) {
  constexpr double e = 1e-5;
  if (std::fabs(th - 2.0) < e) {
    const double lo = joe_tau_raw(2.0 - e), hi = joe_tau_raw(2.0 + e);
    return lo + (hi - lo) * (th - (2.0 - e)) / (2.0 * e);
  }
  return joe_tau_raw(th);
}

}  // namespace detail

inline double tau_from_param(const CopulaSpec& s) {
  double t = 0.0;
  switch (s.family) {
    case CopulaFamily::Independence:
      return 0.0;
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
      return 2.0 / std::numbers::pi * std::asin(s.theta);
    case CopulaFamily::Clayton:
      t = s.theta / (s.theta + 2.0);
      break;
    case CopulaFamily::Gumbel:
      t = 1.0 - 1.0 / s.theta;
      break;
    case CopulaFamily::Frank:
      t = detail::frank_tau(s.theta);
      break;
    case CopulaFamily::Joe:
      t = detail::joe_tau(s.theta);
      break;
  }
  return s.rotation == 0 ? t : -t;
}

/// Parameter of the given family and rotation that produces Kendall's tau.
inline double param_from_tau(CopulaFamily f, int rotation, double tau) {
  if (!(std::fabs(tau) < 1.0)) throw DomainError("tau must lie in (-1,1)");
  const double t = rotation == 0 ? tau : -tau;
  auto solve = [&](auto fn, double lo, double hi) {
    std::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve([&](double th) { return fn(th) - t; }, lo, hi,
                                               boost::math::tools::eps_tolerance<double>(50), it);
    return 0.5 * (r.first + r.second);
  };
  switch (f) {
    case CopulaFamily::Independence:
      return 0.0;
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
      return std::sin(std::numbers::pi * tau / 2.0);
    case CopulaFamily::Clayton:
      if (t <= 0.0) throw DomainError("Clayton needs positive tau");
      return 2.0 * t / (1.0 - t);
    case CopulaFamily::Gumbel:
      if (t < 0.0) throw DomainError("Gumbel needs nonnegative tau");
      return 1.0 / (1.0 - t);
    case CopulaFamily::Frank: {
      if (t == 0.0) return 0.0;
      const double at = std::fabs(t);
      double hi = 1.0;
      while (detail::frank_tau(hi) < at) hi *= 2.0;
      std::uintmax_t it = 200;
      auto r = boost::math::tools::toms748_solve(
          [&](double th) { return detail::frank_tau(th) - at; }, 0.0, hi,
          boost::math::tools::eps_tolerance<double>(50), it);
      const double th = 0.5 * (r.first + r.second);
      return t < 0.0 ? -th : th;
    }
    case CopulaFamily::Joe: {
      if (t < 0.0) throw DomainError("Joe needs nonnegative tau");
      if (t == 0.0) return 1.0;
      double hi = 2.0;
      while (detail::joe_tau(hi) < t) hi *= 2.0;
      return solve([](double th) { return detail::joe_tau(th); }, 1.0, hi);
    }
  }
  return 0.0;
}

}  // namespace ccr
