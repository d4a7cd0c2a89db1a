#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccr/copulas.hpp"
#include "ccr/data.hpp"
#include "ccr/marginals.hpp"

namespace ccr {

inline constexpr std::string_view kIntercept = "intercept";

/// Count regression: log link for the base mean, logit links for the
/// inflation weights.
struct CountModel {
  CountKind kind = CountKind::Poisson;
  std::vector<std::string> terms{std::string(kIntercept)};
  std::vector<std::string> zero_terms{std::string(kIntercept)};
  std::vector<std::string> one_terms{std::string(kIntercept)};
  Eigen::VectorXd beta;
  Eigen::VectorXd beta_zero;
  Eigen::VectorXd beta_one;
  double eta = 1.0;

  void resize() {
    beta.conservativeResize(terms.size());
    const int lv = inflation_levels(kind);
    beta_zero.conservativeResize(lv >= 1 ? zero_terms.size() : 0);
    beta_one.conservativeResize(lv == 2 ? one_terms.size() : 0);
  }
};

/// Severity regression. For Gamma the mean alpha * scale is exp(x'beta); for
/// GB2 x'beta is the location of log y.
struct SeverityModel {
  SeverityKind kind = SeverityKind::Gamma;
  std::vector<std::string> terms{std::string(kIntercept)};
  Eigen::VectorXd beta;
  double shape = 1.0;
  double sigma = 1.0;
  double phi1 = 1.0;
  double phi2 = 1.0;

  void resize() { beta.conservativeResize(terms.size()); }

  SeverityDist dist(double eta_lin) const {
    if (kind == SeverityKind::Gamma) return SeverityDist::gamma(shape, std::exp(eta_lin) / shape);
    return SeverityDist::gb2(eta_lin, sigma, phi1, phi2);
  }
};

struct CompoundModel {
  CountModel freq;
  SeverityModel sev;
  CopulaSpec copula;

  void resize() {
    freq.resize();
    sev.resize();
  }
};

// ---------------------------------------------------------------------------
// Parameter layout and transforms
// ---------------------------------------------------------------------------

enum class Transform { Identity, Log, LogMinusOne, AtanhScaled };

inline std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::Identity: return "identity";
    case Transform::Log: return "log";
    case Transform::LogMinusOne: return "log(x-1)";
    case Transform::AtanhScaled: return "atanh";
  }
  return "?";
}

enum class Block { Frequency, Severity, Copula };

inline std::string_view to_string(Block b) {
  switch (b) {
    case Block::Frequency: return "frequency";
    case Block::Severity: return "severity";
    case Block::Copula: return "copula";
  }
  return "?";
}

inline constexpr double kRhoScale = 1.0 - 1e-9;

inline double to_unconstrained(Transform t, double x) {
  switch (t) {
    case Transform::Identity: return x;
    case Transform::Log: return std::log(x);
    case Transform::LogMinusOne: return std::log(x - 1.0);
    case Transform::AtanhScaled: return std::atanh(x / kRhoScale);
  }
  return x;
}

inline double from_unconstrained(Transform t, double z) {
  switch (t) {
    case Transform::Identity: return z;
    case Transform::Log: return std::exp(z);
    case Transform::LogMinusOne: return 1.0 + std::exp(z);
    case Transform::AtanhScaled: return kRhoScale * std::tanh(z);
  }
  return z;
}

/// d(constrained)/d(unconstrained), for the delta method.
inline double transform_jacobian(Transform t, double z) {
  switch (t) {
    case Transform::Identity: return 1.0;
    case Transform::Log:
    case Transform::LogMinusOne: return std::exp(z);
    case Transform::AtanhScaled: {
      const double th = std::tanh(z);
      return kRhoScale * (1.0 - th * th);
    }
  }
  return 1.0;
}

struct ParamInfo {
  std::string name;
  Block block;
  Transform transform;
};

inline Transform copula_transform(const CopulaSpec& c) {
  switch (c.family) {
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT: return Transform::AtanhScaled;
    case CopulaFamily::Clayton: return Transform::Log;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe: return Transform::LogMinusOne;
    case CopulaFamily::Frank: return c.rotation == 0 ? Transform::Identity : Transform::Log;
    default: return Transform::Identity;
  }
}

inline std::vector<ParamInfo> param_layout(const CompoundModel& m) {
  std::vector<ParamInfo> out;
  for (const auto& t : m.freq.terms) out.push_back({"freq." + t, Block::Frequency, Transform::Identity});
  if (is_negbin(m.freq.kind)) out.push_back({"freq.eta", Block::Frequency, Transform::Log});
  const int lv = inflation_levels(m.freq.kind);
  if (lv >= 1)
    for (const auto& t : m.freq.zero_terms)
      out.push_back({"zero." + t, Block::Frequency, Transform::Identity});
  if (lv == 2)
    for (const auto& t : m.freq.one_terms)
      out.push_back({"one." + t, Block::Frequency, Transform::Identity});
  for (const auto& t : m.sev.terms) out.push_back({"sev." + t, Block::Severity, Transform::Identity});
  if (m.sev.kind == SeverityKind::Gamma) {
    out.push_back({"sev.shape", Block::Severity, Transform::Log});
  } else {
    out.push_back({"sev.sigma", Block::Severity, Transform::Log});
    out.push_back({"sev.phi1", Block::Severity, Transform::Log});
    out.push_back({"sev.phi2", Block::Severity, Transform::Log});
  }
  switch (m.copula.family) {
    case CopulaFamily::Independence:
      break;
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
      out.push_back({"copula.rho", Block::Copula, Transform::AtanhScaled});
      if (m.copula.family == CopulaFamily::StudentT)
        out.push_back({"copula.nu", Block::Copula, Transform::Log});
      break;
    default:
      out.push_back({"copula.theta", Block::Copula, copula_transform(m.copula)});
  }
  return out;
}

/// Constrained parameter values in layout order.
inline Eigen::VectorXd get_params(const CompoundModel& m) {
  std::vector<double> v;
  for (int i = 0; i < m.freq.beta.size(); ++i) v.push_back(m.freq.beta[i]);
  if (is_negbin(m.freq.kind)) v.push_back(m.freq.eta);
  for (int i = 0; i < m.freq.beta_zero.size(); ++i) v.push_back(m.freq.beta_zero[i]);
  for (int i = 0; i < m.freq.beta_one.size(); ++i) v.push_back(m.freq.beta_one[i]);
  for (int i = 0; i < m.sev.beta.size(); ++i) v.push_back(m.sev.beta[i]);
  if (m.sev.kind == SeverityKind::Gamma) {
    v.push_back(m.sev.shape);
  } else {
    v.push_back(m.sev.sigma);
    v.push_back(m.sev.phi1);
    v.push_back(m.sev.phi2);
  }
  if (m.copula.family != CopulaFamily::Independence) v.push_back(m.copula.theta);
  if (m.copula.family == CopulaFamily::StudentT) v.push_back(m.copula.nu);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline void set_params(CompoundModel& m, const Eigen::VectorXd& v) {
  m.resize();
  Eigen::Index k = 0;
  for (int i = 0; i < m.freq.beta.size(); ++i) m.freq.beta[i] = v[k++];
  if (is_negbin(m.freq.kind)) m.freq.eta = v[k++];
  for (int i = 0; i < m.freq.beta_zero.size(); ++i) m.freq.beta_zero[i] = v[k++];
  for (int i = 0; i < m.freq.beta_one.size(); ++i) m.freq.beta_one[i] = v[k++];
  for (int i = 0; i < m.sev.beta.size(); ++i) m.sev.beta[i] = v[k++];
  if (m.sev.kind == SeverityKind::Gamma) {
    m.sev.shape = v[k++];
  } else {
    m.sev.sigma = v[k++];
    m.sev.phi1 = v[k++];
    m.sev.phi2 = v[k++];
  }
  if (m.copula.family != CopulaFamily::Independence) m.copula.theta = v[k++];
  if (m.copula.family == CopulaFamily::StudentT) m.copula.nu = v[k++];
  if (k != v.size()) throw ValidationError("parameter vector length mismatch");
}

inline Eigen::VectorXd unconstrain(const std::vector<ParamInfo>& info, const Eigen::VectorXd& x) {
  Eigen::VectorXd z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) z[i] = to_unconstrained(info[i].transform, x[i]);
  return z;
}

inline Eigen::VectorXd constrain(const std::vector<ParamInfo>& info, const Eigen::VectorXd& z) {
  Eigen::VectorXd x(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) x[i] = from_unconstrained(info[i].transform, z[i]);
  return x;
}

/// Count of free parameters in each block.
inline int block_size(const std::vector<ParamInfo>& info, Block b) {
  return static_cast<int>(std::count_if(info.begin(), info.end(), [&](auto& p) { return p.block == b; }));
}

// ---------------------------------------------------------------------------
// Design matrices
// ---------------------------------------------------------------------------

/// Where a term's value comes from.
struct TermSource {
  enum Kind { Constant, Policy, Claim } kind = Constant;
  int column = -1;
};

inline TermSource resolve_term(const std::string& t, const Dataset& d, bool allow_claim) {
  if (t == kIntercept || t == "(intercept)" || t == "1") return {TermSource::Constant, -1};
  auto pc = std::find(d.policy_columns.begin(), d.policy_columns.end(), t);
  auto cc = std::find(d.claim_columns.begin(), d.claim_columns.end(), t);
  if (pc != d.policy_columns.end() && cc != d.claim_columns.end())
    throw ValidationError("covariate '" + t + "' is ambiguous (policy and claim column)");
  if (pc != d.policy_columns.end())
    return {TermSource::Policy, static_cast<int>(pc - d.policy_columns.begin())};
  if (cc != d.claim_columns.end()) {
    if (!allow_claim) throw ValidationError("claim-level covariate '" + t + "' not allowed here");
    return {TermSource::Claim, static_cast<int>(cc - d.claim_columns.begin())};
  }
  throw ValidationError("unknown covariate '" + t + "'");
}

inline double term_value(const TermSource& s, const PolicyRecord& r, const ClaimRecord* c) {
  switch (s.kind) {
    case TermSource::Constant: return 1.0;
    case TermSource::Policy: return r.x[s.column];
    case TermSource::Claim: return c ? c->x[s.column] : kNaN;
  }
  return kNaN;
}

/// Design rows for every record and claim. Severity rows are per policy
/// unless a claim-level term is present.
struct Design {
  Eigen::MatrixXd freq, zero, one;
  Eigen::MatrixXd sev_policy;
  std::vector<Eigen::MatrixXd> sev_claim;  // empty when no claim-level term
  bool claim_level = false;

  static Design build(const CompoundModel& m, const Dataset& d) {
    Design out;
    const auto nrec = static_cast<Eigen::Index>(d.records.size());
    auto fill = [&](const std::vector<std::string>& terms, Eigen::MatrixXd& X) {
      std::vector<TermSource> src;
      for (const auto& t : terms) src.push_back(resolve_term(t, d, false));
      X.resize(nrec, static_cast<Eigen::Index>(terms.size()));
      for (Eigen::Index i = 0; i < nrec; ++i)
        for (std::size_t j = 0; j < src.size(); ++j)
          X(i, static_cast<Eigen::Index>(j)) = term_value(src[j], d.records[i], nullptr);
    };
    fill(m.freq.terms, out.freq);
    const int lv = inflation_levels(m.freq.kind);
    if (lv >= 1) fill(m.freq.zero_terms, out.zero);
    if (lv == 2) fill(m.freq.one_terms, out.one);

    std::vector<TermSource> src;
    for (const auto& t : m.sev.terms) {
      src.push_back(resolve_term(t, d, true));
      if (src.back().kind == TermSource::Claim) out.claim_level = true;
    }
    if (out.claim_level && d.scheme == Scheme::PerPaymentTruncated)
      throw ValidationError(
          "claim-level severity covariates are not available for unobserved claims under the "
          "truncated scheme");
    const auto ps = static_cast<Eigen::Index>(src.size());
    if (!out.claim_level) {
      out.sev_policy.resize(nrec, ps);
      for (Eigen::Index i = 0; i < nrec; ++i)
        for (Eigen::Index j = 0; j < ps; ++j)
          out.sev_policy(i, j) = term_value(src[j], d.records[i], nullptr);
    } else {
      out.sev_claim.resize(d.records.size());
      for (Eigen::Index i = 0; i < nrec; ++i) {
        const auto& r = d.records[i];
        auto& X = out.sev_claim[i];
        X.resize(static_cast<Eigen::Index>(r.claims.size()), ps);
        for (std::size_t c = 0; c < r.claims.size(); ++c)
          for (Eigen::Index j = 0; j < ps; ++j)
            X(static_cast<Eigen::Index>(c), j) = term_value(src[j], r, &r.claims[c]);
      }
    }
    return out;
  }
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Count law for record i.
inline CountDist count_dist(const CountModel& f, const Design& X, Eigen::Index i) {
  CountDist d;
  d.kind = f.kind;
  d.mu = std::exp(X.freq.row(i).dot(f.beta));
  d.eta = f.eta;
  const int lv = inflation_levels(f.kind);
  if (lv == 1) {
    d.p0 = logistic(X.zero.row(i).dot(f.beta_zero));
  } else if (lv == 2) {
    const double a0 = X.zero.row(i).dot(f.beta_zero), a1 = X.one.row(i).dot(f.beta_one);
    const double mx = std::max({0.0, a0, a1});
    const double e0 = std::exp(a0 - mx), e1 = std::exp(a1 - mx), eb = std::exp(-mx);
    const double den = eb + e0 + e1;
    d.p0 = e0 / den;
    d.p1 = e1 / den;
  }
  return d;
}

/// Severity law for claim c of record i (c < 0 selects the policy-level law).
inline SeverityDist severity_dist(const SeverityModel& s, const Design& X, Eigen::Index i, long c) {
  if (!X.claim_level) return s.dist(X.sev_policy.row(i).dot(s.beta));
  if (c < 0) throw ValidationError("policy-level severity requested with claim-level covariates");
  return s.dist(X.sev_claim[i].row(c).dot(s.beta));
}

}  // namespace ccr
