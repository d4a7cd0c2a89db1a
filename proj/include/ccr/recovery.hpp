#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccr/estimation.hpp"
#include "ccr/parallel.hpp"
#include "ccr/simulation.hpp"

namespace ccr {

struct RecoveryRow {
  std::string name;
  double truth = kNaN;
  double mean = kNaN;
  double rel_bias = kNaN;  // (mean - truth) / truth
  double rmse = kNaN;
  long used = 0;
};

struct RecoveryMethod {
  FitMethod method;
  std::vector<RecoveryRow> rows;
  long failures = 0;
  long nonconverged = 0;
  std::vector<Eigen::VectorXd> estimates;  // per replication; empty on failure
};

struct RecoveryReport {
  SyntheticDesign design;
  long replications = 0;
  std::uint64_t seed = 0;
  std::vector<RecoveryMethod> methods;

  const RecoveryMethod& at(FitMethod m) const {
    for (const auto& r : methods)
      if (r.method == m) return r;
    throw ValidationError("method not present in recovery report");
  }
  const RecoveryRow& row(FitMethod m, const std::string& name) const {
    for (const auto& r : at(m).rows)
      if (r.name == name) return r;
    throw ValidationError("parameter " + name + " not present in recovery report");
  }
};

inline FitResult fit_by_method(FitMethod m, const CompoundModel& tmpl, const Dataset& d, const FitOptions& o) {
  switch (m) {
    case FitMethod::TwoStage: return fit_two_stage(tmpl, d, o);
    case FitMethod::FullMLE: return fit_full(tmpl, d, std::nullopt, o);
    case FitMethod::IndependenceBaseline: return fit_independence(tmpl, d, o);
  }
  throw ValidationError("unknown method");
}

/// Repeated simulate-and-fit study. Replications run in parallel; each uses its
/// own seed stream, so results do not depend on the worker count.
inline RecoveryReport run_recovery(const SyntheticDesign& g, long replications, std::uint64_t seed,
                                   const std::vector<FitMethod>& methods, unsigned threads = 1,
                                   FitOptions o = {}) {
  o.compute_se = false;
  o.threads = 1;
  const auto R = static_cast<std::size_t>(replications);
  std::vector<std::vector<FitResult>> fits(R);
  std::vector<std::vector<char>> ok(R, std::vector<char>(methods.size(), 0));
  parallel_for(R, resolve_threads(threads), [&](std::size_t r) {
    const Dataset d = generate_synthetic_dataset(g, seed, r);
    fits[r].resize(methods.size());
    FitOptions ro = o;
    ro.seed = seed ^ (0x9e3779b97f4a7c15ULL * (r + 1));
    // Earlier fits seed the full MLE: two-stage estimates, or for truncated
    // data the independence fit. Methods are run in the order given.
    std::optional<Eigen::VectorXd> start;
    for (std::size_t k = 0; k < methods.size(); ++k) {
      try {
        if (methods[k] == FitMethod::FullMLE && start)
          fits[r][k] = fit_full(g.truth, d, start, ro);
        else
          fits[r][k] = fit_by_method(methods[k], g.truth, d, ro);
        ok[r][k] = std::isfinite(fits[r][k].loglik);
        const auto& f = fits[r][k];
        if (!ok[r][k] || !f.converged) continue;
        if (methods[k] == FitMethod::TwoStage && d.scheme != Scheme::PerPaymentTruncated) {
          start = f.estimates;
        } else if (methods[k] == FitMethod::IndependenceBaseline && d.scheme == Scheme::PerPaymentTruncated) {
          CompoundModel m = g.truth;
          default_start(m, d);
          LoglikEvaluator ev(m, d);
          auto s = start_from_independence(ev, m, f, ro.optim);
          if (s.opt.converged) start = s.x;
        }
      } catch (const std::exception&) {
        ok[r][k] = 0;
      }
    }
  });

  RecoveryReport rep;
  rep.design = g;
  rep.replications = replications;
  rep.seed = seed;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    RecoveryMethod rm;
    rm.method = methods[k];
    CompoundModel truth = g.truth;
    if (methods[k] == FitMethod::IndependenceBaseline) truth.copula = CopulaSpec{};
    truth.resize();
    const auto layout = param_layout(truth);
    const Eigen::VectorXd t = get_params(truth);
    const auto P = static_cast<Eigen::Index>(layout.size());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(P), sq = Eigen::VectorXd::Zero(P);
    long used = 0;
    rm.estimates.resize(R);
    for (std::size_t r = 0; r < R; ++r) {
      if (!ok[r][k]) {
        ++rm.failures;
        continue;
      }
      const auto& f = fits[r][k];
      if (!f.converged) ++rm.nonconverged;
      rm.estimates[r] = f.estimates;
      sum += f.estimates;
      sq += (f.estimates - t).array().square().matrix();
      ++used;
    }
    for (Eigen::Index i = 0; i < P; ++i) {
      RecoveryRow row;
      row.name = layout[static_cast<std::size_t>(i)].name;
      row.truth = t[i];
      row.used = used;
      if (used > 0) {
        row.mean = sum[i] / used;
        row.rel_bias = t[i] != 0.0 ? (row.mean - t[i]) / t[i] : kNaN;
        row.rmse = std::sqrt(sq[i] / used);
      }
      rm.rows.push_back(row);
    }
    rep.methods.push_back(std::move(rm));
  }
  return rep;
}

inline nlohmann::ordered_json to_json(const RecoveryReport& r) {
  nlohmann::ordered_json j;
  j["replications"] = r.replications;
  j["seed"] = r.seed;
  j["size"] = r.design.size;
  j["scheme"] = to_string(r.design.scheme);
  j["copula"] = r.design.truth.copula.label();
  nlohmann::ordered_json ms = nlohmann::ordered_json::array();
  for (const auto& m : r.methods) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : m.rows)
      rows.push_back({{"name", row.name},
                      {"true", json_number(row.truth)},
                      {"mean", json_number(row.mean)},
                      {"relative_bias", json_number(row.rel_bias)},
                      {"rmse", json_number(row.rmse)}});
    ms.push_back({{"method", to_string(m.method)},
                  {"failures", m.failures},
                  {"not_converged", m.nonconverged},
                  {"parameters", rows}});
  }
  j["methods"] = ms;
  return j;
}

}  // namespace ccr
