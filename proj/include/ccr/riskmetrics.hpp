#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ccr/simulation.hpp"

namespace ccr {

// ---------------------------------------------------------------------------
// Moments of the aggregate loss
// ---------------------------------------------------------------------------

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = kNaN;  // Monte Carlo standard error of the mean
};

/// E[S] = E[N]E[Y], Var[S] = E[N]Var[Y] + Var[N]E[Y]^2; independence only.
inline Moments moments_analytic(const CountDist& N, const SeverityDist& Y, const Copula& C) {
  if (!C.independent()) throw ValidationError("analytic moments need the independence copula; use Monte Carlo");
  const double en = N.mean(), vn = N.variance();
  Moments m;
  if (en == 0.0 && vn == 0.0) return m;
  const double ey = Y.mean(), vy = Y.variance();
  m.mean = en * ey;
  m.variance = en * vy + vn * ey * ey;
  m.mean_se = 0.0;
  return m;
}

inline Moments sample_moments(const std::vector<double>& s) {
  if (s.empty()) throw ValidationError("empty sample");
  KahanSum a;
  for (double v : s) a.add(v);
  Moments m;
  const double n = static_cast<double>(s.size());
  m.mean = a.value() / n;
  KahanSum b;
  for (double v : s) b.add((v - m.mean) * (v - m.mean));
  m.variance = s.size() > 1 ? b.value() / (n - 1.0) : 0.0;
  m.mean_se = std::sqrt(m.variance / n);
  return m;
}

/// Monte Carlo moments of ground-up S from `draws` (at least 1e4) seeded draws.
inline Moments moments_mc(const CountDist& N, const SeverityDist& Y, const Copula& C, long draws, std::uint64_t seed,
                          std::uint64_t key = 0) {
  if (draws < 10000) throw ValidationError("Monte Carlo moments need at least 10000 draws");
  const Copula Ct(transposed(C.spec()));
  std::vector<double> s(static_cast<std::size_t>(draws));
  for (long k = 0; k < draws; ++k) {
    Rng rng = Rng::stream(seed, key, static_cast<std::uint64_t>(k));
    const auto g = draw_ground_up(N, Y, C, Ct, rng);
    double t = 0.0;
    for (double y : g.y) t += y;
    s[static_cast<std::size_t>(k)] = t;
  }
  return sample_moments(s);
}

// ---------------------------------------------------------------------------
// Value at risk
// ---------------------------------------------------------------------------

/// Lower empirical quantile: the ceil(alpha * n)-th order statistic.
inline double var_quantile(std::vector<double> sample, double alpha) {
  if (sample.empty()) throw ValidationError("VaR of an empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("VaR level must lie in (0,1)");
  const auto n = sample.size();
  auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-12));
  k = std::clamp<std::size_t>(k, 1, n);
  std::nth_element(sample.begin(), sample.begin() + static_cast<long>(k - 1), sample.end());
  return sample[k - 1];
}

// ---------------------------------------------------------------------------
// Ordered Lorenz curve and Gini index
// ---------------------------------------------------------------------------

struct LorenzPoint {
  double premium_share, loss_share;
};

struct LorenzCurve {
  std::vector<LorenzPoint> points;  // from (0,0) to (1,1)
  double gini = kNaN;
};

/// Orders policies by score (ties by id), accumulates premium and loss shares,
/// and returns twice the area between the diagonal and the curve.
inline LorenzCurve lorenz_gini(const std::vector<double>& scores, const std::vector<double>& premiums,
                               const std::vector<double>& losses, const std::vector<std::string>& ids = {}) {
  const std::size_t n = scores.size();
  if (premiums.size() != n || losses.size() != n || (!ids.empty() && ids.size() != n))
    throw ValidationError("scores, premiums and losses must have the same length");
  std::vector<std::size_t> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return !ids.empty() && ids[a] < ids[b];
  });
  double tp = 0.0, tl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += premiums[i];
    tl += losses[i];
  }
  if (!(tp > 0.0) || !(tl > 0.0)) throw ValidationError("total premium and total loss must be positive");
  LorenzCurve c;
  c.points.reserve(n + 1);
  c.points.push_back({0.0, 0.0});
  double cp = 0.0, cl = 0.0, area = 0.0;
  for (std::size_t i : ord) {
    const LorenzPoint prev = c.points.back();
    cp += premiums[i];
    cl += losses[i];
    const LorenzPoint p{cp / tp, cl / tl};
    area += 0.5 * (p.premium_share - prev.premium_share) * (p.loss_share + prev.loss_share);
    c.points.push_back(p);
  }
  c.points.back() = {1.0, 1.0};
  c.gini = 1.0 - 2.0 * area;
  return c;
}

struct GiniEstimate {
  double gini = kNaN;
  double std_error = kNaN;
};

/// Gini index with a nonparametric bootstrap standard error over policies.
inline GiniEstimate gini_bootstrap(const std::vector<double>& scores, const std::vector<double>& premiums,
                                   const std::vector<double>& losses, const std::vector<std::string>& ids,
                                   int resamples = 500, std::uint64_t seed = 1) {
  GiniEstimate e;
  e.gini = lorenz_gini(scores, premiums, losses, ids).gini;
  const std::size_t n = scores.size();
  std::vector<double> s(n), p(n), l(n), g;
  std::vector<std::string> id(n);
  g.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    Rng rng = Rng::stream(seed, 0x67696e69ULL, static_cast<std::uint64_t>(b));
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(rng.below(n));
      s[i] = scores[j];
      p[i] = premiums[j];
      l[i] = losses[j];
      id[i] = ids.empty() ? std::string() : ids[j];
    }
    try {
      g.push_back(lorenz_gini(s, p, l, ids.empty() ? std::vector<std::string>{} : id).gini);
    } catch (const ValidationError&) {
      // resample without any loss
    }
  }
  if (g.size() > 1) e.std_error = std::sqrt(sample_moments(g).variance);
  return e;
}

// ---------------------------------------------------------------------------
// CRPS
// ---------------------------------------------------------------------------

/// E|X - x| - E|X - X'| / 2 over the empirical distribution of the sample.
inline double crps(std::vector<double> sample, double x) {
  if (sample.empty()) throw ValidationError("CRPS of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double M = static_cast<double>(sample.size());
  KahanSum a, b;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    a.add(std::fabs(sample[i] - x));
    b.add((2.0 * static_cast<double>(i + 1) - M - 1.0) * sample[i]);
  }
  const double v = a.value() / M - b.value() / (M * M);
  return std::max(0.0, v);
}

// ---------------------------------------------------------------------------
// Per-policy risk scores
// ---------------------------------------------------------------------------

struct RiskScore {
  std::string policy_id;
  double mean = 0.0;
  double variance = 0.0;
  double cv = kNaN;  // sqrt(variance) / mean
};

inline RiskScore risk_score(std::string id, const std::vector<double>& s) {
  const Moments m = sample_moments(s);
  RiskScore r{std::move(id), m.mean, m.variance, kNaN};
  if (m.mean > 0.0) r.cv = std::sqrt(m.variance) / m.mean;
  return r;
}

inline std::vector<RiskScore> risk_scores(const PortfolioSample& ps) {
  std::vector<RiskScore> out;
  out.reserve(ps.s.size());
  for (std::size_t i = 0; i < ps.s.size(); ++i) out.push_back(risk_score(ps.policy_ids[i], ps.s[i]));
  return out;
}

}  // namespace ccr
