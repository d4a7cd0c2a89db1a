#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

namespace ccr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DegenerateConditional : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Probability carried together with its complement, so that both tails keep
/// full relative precision.
struct Prob {
  double p = 0.0;
  double q = 1.0;

  static Prob from_p(double p) { return {p, 1.0 - p}; }
  static Prob from_q(double q) { return {1.0 - q, q}; }
  static Prob zero() { return {0.0, 1.0}; }
  static Prob one() { return {1.0, 0.0}; }
  Prob flip() const { return {q, p}; }
};

// ---- scalar helpers ----

/// log(1 + e^x)
inline double softplus(double x) {
  if (x > 35.0) return x + std::exp(-x);
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

/// log(e^x - 1), x > 0
inline double log_expm1(double x) {
  if (x > 35.0) return x + std::log1p(-std::exp(-x));
  return std::log(std::expm1(x));
}

/// log(1 - e^x), x <= 0
inline double log1mexp(double x) {
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

inline double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Neumaier compensated summation.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

// ---- standard normal ----

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline Prob norm_prob(double x) {
  return {norm_cdf(x), norm_cdf(-x)};
}

inline double norm_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Quantile using whichever tail is more accurate.
inline double norm_quantile(const Prob& pr) {
  if (pr.p <= 0.0) return -kInf;
  if (pr.q <= 0.0) return kInf;
  return pr.p < 0.5 ? norm_quantile(pr.p) : -norm_quantile(pr.q);
}

inline double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace ccr
