#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ccr/diagnostics.hpp"
#include "ccr/estimation.hpp"
#include "ccr/riskmetrics.hpp"
#include "ccr/simulation.hpp"
#include "test_support.hpp"

using namespace ccr;
using namespace ccr::testing;
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

namespace {

std::vector<double> aggregate_draws(const CountDist& N, const SeverityDist& Y, const CopulaSpec& spec, long R,
                                    std::uint64_t seed) {
  const Copula C(spec);
  std::vector<double> s(static_cast<std::size_t>(R));
  for (long k = 0; k < R; ++k) {
    Rng rng = Rng::stream(seed, 1, static_cast<std::uint64_t>(k));
    s[static_cast<std::size_t>(k)] = simulate_policy("p", N, Y, C, 0.0, kInf, Scheme::Complete, rng).s;
  }
  return s;
}

/// Kendall tau-a for pairs with ties allowed in `a` only.
double tau_a(std::vector<std::pair<double, double>> xy) {
  const auto n = static_cast<long>(xy.size());
  std::sort(xy.begin(), xy.end());
  long n1 = 0;
  for (long i = 0; i < n;) {
    long j = i;
    while (j < n && xy[static_cast<std::size_t>(j)].first == xy[static_cast<std::size_t>(i)].first) ++j;
    n1 += (j - i) * (j - i - 1) / 2;
    i = j;
  }
  std::vector<double> b(xy.size()), tmp(xy.size());
  for (std::size_t i = 0; i < xy.size(); ++i) b[i] = xy[i].second;
  long inv = 0;
  for (std::size_t w = 1; w < b.size(); w *= 2) {
    for (std::size_t lo = 0; lo < b.size(); lo += 2 * w) {
      const std::size_t mid = std::min(lo + w, b.size()), hi = std::min(lo + 2 * w, b.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (b[i] <= b[j]) {
          tmp[k++] = b[i++];
        } else {
          inv += static_cast<long>(mid - i);
          tmp[k++] = b[j++];
        }
      }
      while (i < mid) tmp[k++] = b[i++];
      while (j < hi) tmp[k++] = b[j++];
    }
    std::swap(b, tmp);
  }
  const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double conc = n0 - static_cast<double>(n1) - static_cast<double>(inv);
  return (conc - static_cast<double>(inv)) / n0;
}

/// Exact tau-a of (N, V) given N >= 1.
double tau_a_oracle(const CountDist& N, const Copula& C) {
  const Prob F0 = N.cdf(0);
  const double z = F0.q;
  double eF = 0.0, eH = 0.0;
  for (long n = 1; n < 400; ++n) {
    const CountSlice s = count_slice(N, n);
    const double p = s.f / z;
    eF += p * (s.lo.p - F0.p) / z;
    if (n >= 2) {
      auto g = [&](double v) {
        const Prob pv = Prob::from_p(v);
        const double H = (C.cdf(s.lo, pv) - C.cdf(F0, pv)) / z;
        return H * h_diff(C, s, pv) / z;
      };
      eH += GK::integrate(g, 0.0, 1.0, 15, 1e-13);
    }
    if (s.hi.q < 1e-14) break;
  }
  return 2.0 * (2.0 * eH - eF);
}

}  // namespace

TEST(Tweedie, MappingGivesPoissonGamma) {
  const auto pg = tweedie_to_compound(1000.0, 4.0 / 3.0, 150.0);
  EXPECT_NEAR(pg.lambda, 1.0, 1e-12);
  EXPECT_NEAR(pg.shape, 2.0, 1e-12);
  EXPECT_NEAR(pg.scale, 500.0, 1e-9);
  EXPECT_THROW(tweedie_to_compound(1000.0, 2.0, 150.0), DomainError);
}

TEST(SimulatePolicy, IndependenceMomentsMatchTweedie) {
  const CountDist N{CountKind::Poisson, 1.0};
  const auto Y = SeverityDist::gamma(2.0, 500.0);
  const auto s = aggregate_draws(N, Y, CopulaSpec{}, 100000, 42);
  const Moments m = sample_moments(s);
  EXPECT_LT(std::fabs(m.mean - 1000.0), 3.0 * m.mean_se);
  double m4 = 0.0;
  for (double v : s) m4 += std::pow(v - m.mean, 4);
  m4 /= static_cast<double>(s.size());
  const double var_se = std::sqrt((m4 - m.variance * m.variance) / static_cast<double>(s.size()));
  EXPECT_LT(std::fabs(m.variance - 150.0 * std::pow(1000.0, 4.0 / 3.0)), 3.0 * var_se);
  const double p0 = static_cast<double>(std::count(s.begin(), s.end(), 0.0)) / static_cast<double>(s.size());
  EXPECT_LT(std::fabs(p0 - std::exp(-1.0)), 3.0 * std::sqrt(std::exp(-1.0) * (1 - std::exp(-1.0)) / 1e5));
}

TEST(SimulatePolicy, TailOrderedByDependence) {
  const CountDist N{CountKind::Poisson, 1.0};
  const auto Y = SeverityDist::gamma(2.0, 500.0);
  double prev = -1.0;
  for (double tau : {-0.5, 0.0, 0.5}) {
    CopulaSpec c{CopulaFamily::Gaussian, 0, param_from_tau(CopulaFamily::Gaussian, 0, tau)};
    if (tau == 0.0) c = CopulaSpec{};
    const double q = var_quantile(aggregate_draws(N, Y, c, 100000, 7), 0.99);
    EXPECT_GT(q, prev) << "tau " << tau;
    prev = q;
  }
}

TEST(SimulatePolicy, CountPmfGoodnessOfFit) {
  const CountDist N{CountKind::ZINegBin, 2.0, 1.5, 0.2};
  const Copula C({CopulaFamily::Clayton, 90, 1.5}), Ct(transposed(C.spec()));
  const auto Y = SeverityDist::gamma(2.0, 100.0);
  const int K = 8;
  std::vector<ChiSquareCell> cells(K + 2);
  const long R = 100000;
  for (long k = 0; k < R; ++k) {
    Rng rng = Rng::stream(3, 9, static_cast<std::uint64_t>(k));
    const long n = draw_ground_up(N, Y, C, Ct, rng).n;
    cells[static_cast<std::size_t>(std::min<long>(n, K + 1))].observed += 1.0;
  }
  for (int k = 0; k <= K; ++k) cells[static_cast<std::size_t>(k)].expected = R * std::exp(N.log_pmf(k));
  cells.back().expected = R * N.cdf(K).q;
  const auto r = pearson_chisq(cells);
  EXPECT_GT(r.p_value, 0.01) << r.statistic;
}

TEST(SimulatePolicy, ClaimsFollowConditionalCdf) {
  const CountDist N{CountKind::Poisson, 2.0};
  const auto Y = SeverityDist::gamma(2.0, 500.0);
  for (const CopulaSpec& spec : {CopulaSpec{CopulaFamily::Gaussian, 0, -0.6}, CopulaSpec{CopulaFamily::Joe, 270, 2.0}}) {
    const Copula C(spec), Ct(transposed(spec));
    const long n = 2;
    Conditional cond(N, Y, C, n);
    std::vector<double> u;
    for (long k = 0; u.size() < 100000; ++k) {
      Rng rng = Rng::stream(11, 5, static_cast<std::uint64_t>(k));
      const auto g = draw_ground_up(N, Y, C, Ct, rng);
      if (g.n != n) continue;
      for (double y : g.y) u.push_back(cond.cdf(y).p);
    }
    EXPECT_LT(uniformity_tests(u).ks.statistic, 0.01) << spec.label();
  }
}

TEST(SimulatePolicy, KendallTauOfCountAndClaim) {
  const CountDist N{CountKind::Poisson, 3.0};
  const auto Y = SeverityDist::gamma(2.0, 500.0);
  for (const CopulaSpec& spec : {CopulaSpec{CopulaFamily::Gaussian, 0, 0.5}, CopulaSpec{CopulaFamily::Clayton, 90, 2.0}}) {
    const Copula C(spec), Ct(transposed(spec));
    const double oracle = tau_a_oracle(N, C);
    // The latent pair carries tau_from_param; ties in N pull tau-a toward 0.
    EXPECT_LT(std::fabs(oracle), std::fabs(tau_from_param(spec)));
    std::vector<double> batch;
    std::vector<std::pair<double, double>> xy;
    for (long k = 0; k < 100000; ++k) {
      Rng rng = Rng::stream(21, 2, static_cast<std::uint64_t>(k));
      const auto g = draw_ground_up(N, Y, C, Ct, rng);
      if (g.n == 0) continue;
      xy.emplace_back(static_cast<double>(g.n), g.y.front());
      if (xy.size() == 5000) {
        batch.push_back(tau_a(xy));
        xy.clear();
      }
    }
    const Moments m = sample_moments(batch);
    EXPECT_LT(std::fabs(m.mean - oracle), 3.0 * m.mean_se) << spec.label() << " oracle " << oracle;
  }
}

TEST(ConditionalQuantile, IndependenceIsMarginalQuantile) {
  const CountDist N{CountKind::NegBin, 2.0, 1.3};
  const auto Y = SeverityDist::gb2(6.0, 0.7, 2.0, 3.0);
  const Copula C(CopulaSpec{});
  for (double p : {0.01, 0.3, 0.5, 0.97})
    EXPECT_DOUBLE_EQ(conditional_quantile(N, Y, C, 2, p), Y.quantile(Prob::from_p(p)));
}

TEST(ConditionalQuantile, RoundTrip) {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_model(rng);
    const Copula C(m.C);
    for (long n : {1L, 2L, 4L}) {
      if (!(std::exp(m.N.log_pmf(n)) > 1e-8)) continue;
      for (double p : {0.025, 0.5, 0.975}) {
        const double y = conditional_quantile(m.N, m.Y, C, n, p);
        EXPECT_NEAR(cond_cdf(m.N, m.Y, C, n, y).p, p, 1e-8) << m.C.label() << " n=" << n;
      }
    }
  }
}

TEST(ConditionalQuantile, DecreasingInCountUnderNegativeDependence) {
  const CountDist N{CountKind::Poisson, 2.0};
  const auto Y = SeverityDist::gamma(2.0, 500.0);
  const Copula C({CopulaFamily::Gaussian, 0, -0.5});
  double prev = kInf;
  for (long n = 1; n <= 5; ++n) {
    const double q = conditional_quantile(N, Y, C, n, 0.5);
    EXPECT_LT(q, prev) << n;
    prev = q;
  }
}

TEST(ConditionalQuantile, RejectsBadInput) {
  const CountDist N{CountKind::ZOIPoisson, 0.0, 1.0, 0.5, 0.5};
  const auto Y = SeverityDist::gamma(2.0, 500.0);
  const Copula C({CopulaFamily::Gaussian, 0, 0.3});
  EXPECT_THROW(conditional_quantile(N, Y, C, 2, 0.5), DegenerateConditional);
  EXPECT_THROW(conditional_quantile(CountDist{CountKind::Poisson, 1.0}, Y, C, 1, 1.0), DomainError);
}

TEST(Coverage, SchemesModifyClaims) {
  GroundUp g{3, {20.0, 500.0, 20000.0}};
  const auto c = apply_coverage("p", g, 50.0, 10000.0, Scheme::PerLossCensored);
  ASSERT_EQ(c.n, 3);
  EXPECT_EQ(c.amounts, (std::vector<double>{0.0, 450.0, 9950.0}));
  EXPECT_EQ(c.status[0], ClaimStatus::BelowDeductible);
  EXPECT_EQ(c.status[2], ClaimStatus::AtLimit);
  const auto t = apply_coverage("p", g, 50.0, 10000.0, Scheme::PerPaymentTruncated);
  ASSERT_EQ(t.n, 2);
  EXPECT_DOUBLE_EQ(t.s, 450.0 + 9950.0);
  const auto u = apply_coverage("p", g, 0.0, kInf, Scheme::Complete);
  EXPECT_DOUBLE_EQ(u.s, 20520.0);
  EXPECT_EQ(apply_coverage("p", GroundUp{}, 0.0, kInf, Scheme::Complete).s, 0.0);
}

TEST(Coverage, CompleteAggregateZeroIffNoClaims) {
  const CountDist N{CountKind::Poisson, 1.5};
  const auto Y = SeverityDist::gamma(1.0, 10.0);
  const Copula C({CopulaFamily::Frank, 0, 3.0});
  for (long k = 0; k < 5000; ++k) {
    Rng rng = Rng::stream(5, 5, static_cast<std::uint64_t>(k));
    const auto d = simulate_policy("p", N, Y, C, 0.0, kInf, Scheme::Complete, rng);
    EXPECT_EQ(d.s == 0.0, d.n == 0);
    EXPECT_EQ(static_cast<long>(d.amounts.size()), d.n);
  }
}

TEST(Synthetic, TruncatedHasNoBelowDeductibleClaims) {
  const auto d = generate_synthetic_dataset(design_incomplete(0.5, Scheme::PerPaymentTruncated, 400), 3);
  for (const auto& r : d.records)
    for (const auto& c : r.claims) EXPECT_NE(c.status, ClaimStatus::BelowDeductible);
  EXPECT_NO_THROW(validate_dataset(d));
  const auto e = generate_synthetic_dataset(design_incomplete(0.5, Scheme::PerLossCensored, 400), 3);
  long below = 0;
  for (const auto& r : e.records)
    for (const auto& c : r.claims) below += c.status == ClaimStatus::BelowDeductible;
  EXPECT_GT(below, 0);
}

TEST(Synthetic, FixedSeedIsReproducible) {
  const auto g = design_regression(0.5, 300);
  EXPECT_EQ(dataset_key(generate_synthetic_dataset(g, 9)), dataset_key(generate_synthetic_dataset(g, 9)));
  EXPECT_EQ(dataset_key(generate_synthetic_dataset(g, 9, 0, 1)), dataset_key(generate_synthetic_dataset(g, 9, 0, 3)));
  EXPECT_NE(dataset_key(generate_synthetic_dataset(g, 9)), dataset_key(generate_synthetic_dataset(g, 10)));
}

TEST(Synthetic, CountsMatchRegressionMean) {
  const auto g = design_regression(0.5, 5000);
  const auto d = generate_synthetic_dataset(g, 17);
  double obs = 0.0, mu = 0.0;
  for (const auto& r : d.records) {
    obs += static_cast<double>(r.n);
    mu += std::exp(-1.5 + 2.5 * r.x[0] + 1.0 * r.x[1]);
  }
  EXPECT_LT(std::fabs(obs - mu), 3.0 * std::sqrt(mu));
}

TEST(Portfolio, PolicyStreamsIndependentOfOrderAndThreads) {
  const auto g = design_portfolio(-0.3, 60);
  Dataset d = generate_synthetic_dataset(g, 4);
  const auto a = simulate_portfolio(g.truth, d, 50, 99, Scheme::Complete, 1);
  const auto b = simulate_portfolio(g.truth, d, 50, 99, Scheme::Complete, 3);
  EXPECT_EQ(a.s, b.s);
  std::reverse(d.records.begin(), d.records.end());
  const auto c = simulate_portfolio(g.truth, d, 50, 99, Scheme::Complete, 2);
  for (std::size_t i = 0; i < a.s.size(); ++i) EXPECT_EQ(a.s[i], c.s[a.s.size() - 1 - i]);
}

TEST(Ecdf, GridIsMonotone) {
  std::vector<double> xs;
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) xs.push_back(rng.uniform() < 0.3 ? 0.0 : -std::log(rng.uniform()));
  const auto grid = ecdf_grid(xs, 512);
  ASSERT_FALSE(grid.empty());
  EXPECT_LE(grid.size(), 512u);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_GT(grid[i].x, grid[i - 1].x);
    EXPECT_GE(grid[i].F, grid[i - 1].F);
  }
}
