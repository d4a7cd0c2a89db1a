#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/math/distributions/binomial.hpp>
#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "ccr/diagnostics.hpp"
#include "ccr/estimation.hpp"
#include "ccr/io.hpp"
#include "ccr/recovery.hpp"
#include "ccr/riskmetrics.hpp"
#include "ccr/simulation.hpp"

namespace ccr::cli {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kSpecVersion = 1;

/// Error carrying a process exit code and a category for the JSON report.
struct CliError : std::runtime_error {
  int code;
  std::string kind;
  ojson details;
  CliError(int c, std::string k, const std::string& msg, ojson det = {})
      : std::runtime_error(msg), code(c), kind(std::move(k)), details(std::move(det)) {}
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  Scheme scheme = Scheme::Complete;
  CompoundModel model;
  std::map<std::string, double> parameters;  // named values in the parameter layout
  std::uint64_t seed = 1;
  unsigned threads = 0;
  YAML::Node root;

  YAML::Node section(const std::string& name) const { return root[name] ? root[name] : YAML::Node(); }
};

template <class T>
T get_or(const YAML::Node& n, const std::string& key, T def) {
  if (!n || !n.IsMap() || !n[key]) return def;
  try {
    return n[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError("config: bad value for '" + key + "'");
  }
}

inline std::vector<std::string> string_list(const YAML::Node& n, const std::string& key,
                                            std::vector<std::string> def) {
  if (!n || !n[key]) return def;
  if (!n[key].IsSequence()) throw ValidationError("config: '" + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& v : n[key]) out.push_back(v.as<std::string>());
  return out;
}

inline std::vector<double> number_list(const YAML::Node& n, const std::string& key, std::vector<double> def) {
  if (!n || !n[key]) return def;
  if (!n[key].IsSequence()) throw ValidationError("config: '" + key + "' must be a list");
  std::vector<double> out;
  for (const auto& v : n[key]) out.push_back(v.as<double>());
  return out;
}

inline CompoundModel parse_model(const YAML::Node& m) {
  if (!m || !m.IsMap()) throw ValidationError("config: missing 'model' section");
  CompoundModel out;
  const auto f = m["frequency"];
  if (!f) throw ValidationError("config: missing model.frequency");
  out.freq.kind = count_kind_from_string(get_or<std::string>(f, "family", "poisson"));
  out.freq.terms = string_list(f, "terms", out.freq.terms);
  out.freq.zero_terms = string_list(f, "zero_terms", out.freq.zero_terms);
  out.freq.one_terms = string_list(f, "one_terms", out.freq.one_terms);
  const auto s = m["severity"];
  if (!s) throw ValidationError("config: missing model.severity");
  out.sev.kind = severity_kind_from_string(get_or<std::string>(s, "family", "gamma"));
  out.sev.terms = string_list(s, "terms", out.sev.terms);
  const auto c = m["copula"];
  if (c) {
    out.copula.family = copula_family_from_string(get_or<std::string>(c, "family", "independence"));
    out.copula.rotation = get_or<int>(c, "rotation", 0);
    if (out.copula.rotation != 0 && out.copula.rotation != 90 && out.copula.rotation != 270)
      throw ValidationError("config: copula rotation must be 0, 90 or 270");
    if (out.copula.rotation != 0 && !is_archimedean(out.copula.family))
      throw ValidationError("config: only Archimedean copulas take a rotation");
  }
  out.resize();
  return out;
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  try {
    cfg.root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (!cfg.root.IsMap()) throw ValidationError("config: top level must be a mapping");
  if (!cfg.root["spec_version"]) throw ValidationError("config: missing spec_version");
  const int v = get_or<int>(cfg.root, "spec_version", 0);
  if (v != kSpecVersion)
    throw ValidationError("config: unsupported spec_version " + std::to_string(v) + " (expected " +
                          std::to_string(kSpecVersion) + ")");
  cfg.scheme = scheme_from_string(get_or<std::string>(cfg.root, "scheme", "complete"));
  if (cfg.root["model"]) cfg.model = parse_model(cfg.root["model"]);
  cfg.seed = get_or<std::uint64_t>(cfg.root, "seed", 1);
  cfg.threads = get_or<unsigned>(cfg.root, "threads", 0);
  if (const auto p = cfg.root["parameters"]) {
    if (!p.IsMap()) throw ValidationError("config: 'parameters' must be a mapping");
    for (const auto& kv : p) cfg.parameters[kv.first.as<std::string>()] = kv.second.as<double>();
  }
  return cfg;
}

/// Applies named parameter values; every layout entry must be given.
inline CompoundModel with_parameters(CompoundModel m, const std::map<std::string, double>& p) {
  m.resize();
  const auto L = param_layout(m);
  Eigen::VectorXd x(static_cast<Eigen::Index>(L.size()));
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < L.size(); ++i) {
    auto it = p.find(L[i].name);
    if (it == p.end())
      missing.push_back(L[i].name);
    else
      x[static_cast<Eigen::Index>(i)] = it->second;
  }
  if (!missing.empty()) {
    std::string msg = "config: missing parameters:";
    for (const auto& s : missing) msg += " " + s;
    throw ValidationError(msg);
  }
  for (const auto& [k, v] : p) {
    bool known = false;
    for (const auto& info : L) known = known || info.name == k;
    if (!known) throw ValidationError("config: parameter '" + k + "' is not in the model layout");
  }
  set_params(m, x);
  return m;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

struct Context {
  RunConfig cfg;
  std::string policies, claims;
  fs::path out;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::vector<std::string> written;
};

inline std::ofstream open_out(Context& ctx, const std::string& name) {
  fs::create_directories(ctx.out);
  const fs::path p = ctx.out / name;
  std::ofstream os(p, std::ios::binary);
  if (!os) throw CliError(2, "io", "cannot write " + p.string());
  ctx.written.push_back(p.string());
  return os;
}

inline void write_json(Context& ctx, const std::string& name, const ojson& j) {
  auto os = open_out(ctx, name);
  os << j.dump(2) << "\n";
}

inline Dataset load(const Context& ctx) {
  if (ctx.policies.empty()) throw ValidationError("--policies is required for this command");
  if (ctx.claims.empty()) throw ValidationError("--claims is required for this command");
  return load_dataset(ctx.policies, ctx.claims, ctx.cfg.scheme);
}

inline FitOptions fit_options(const Context& ctx) {
  FitOptions o;
  const auto f = ctx.cfg.section("fit");
  o.multistarts = get_or<int>(f, "multistarts", o.multistarts);
  o.optim.max_iter = get_or<int>(f, "max_iterations", o.optim.max_iter);
  o.seed = ctx.seed;
  o.threads = ctx.threads;
  return o;
}

/// Model with parameters from the config, or the full MLE on the data.
inline CompoundModel resolved_model(const Context& ctx, const Dataset& d, std::optional<FitResult>* fit = nullptr) {
  if (!ctx.cfg.parameters.empty()) return with_parameters(ctx.cfg.model, ctx.cfg.parameters);
  FitOptions o = fit_options(ctx);
  o.compute_se = false;
  FitResult f = fit_full(ctx.cfg.model, d, std::nullopt, o);
  if (!f.converged)
    throw CliError(4, "convergence", "full maximum likelihood did not converge", {{"fit", to_json(f)}});
  if (fit) *fit = f;
  return f.model;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_fit(Context& ctx) {
  const Dataset d = load(ctx);
  const FitOptions o = fit_options(ctx);
  ojson j;
  j["spec_version"] = kSpecVersion;
  j["command"] = "fit";
  j["scheme"] = to_string(d.scheme);
  j["n_policies"] = d.records.size();
  j["n_claims"] = d.total_claims();
  ojson fits;
  std::optional<FitResult> ts;
  if (d.scheme != Scheme::PerPaymentTruncated) {
    ts = fit_two_stage(ctx.cfg.model, d, o);
    fits["two_stage"] = to_json(*ts);
  }
  const FitResult full = ts ? fit_full(ctx.cfg.model, d, ts->estimates, o) : fit_full(ctx.cfg.model, d, std::nullopt, o);
  fits["full_mle"] = to_json(full);
  const FitResult ind = fit_independence(ctx.cfg.model, d, o);
  fits["independence"] = to_json(ind);
  j["fits"] = fits;
  if (full.n_params > ind.n_params) {
    const LrtResult lrt = likelihood_ratio_test(full, ind);
    j["lrt"] = to_json(lrt);
    j["lrt"]["full"] = full.model.copula.label();
    j["lrt"]["nested"] = "independence";
  }
  ojson sel = ojson::array();
  for (const auto& r : model_selection({{full.model.copula.label(), &full}, {"independence", &ind}}))
    sel.push_back({{"model", r.label},
                   {"loglik", json_number(r.loglik)},
                   {"aic", json_number(r.aic)},
                   {"bic", json_number(r.bic)},
                   {"n_params", r.n_params},
                   {"aic_rank", r.aic_rank},
                   {"bic_rank", r.bic_rank}});
  j["model_selection"] = sel;
  write_json(ctx, "fit.json", j);
  if (!full.converged || !ind.converged || (ts && !ts->converged))
    throw CliError(4, "convergence", "optimizer did not converge; see fit.json", j);
  return 0;
}

/// Policies for simulation: the policy file when given, else one policy with
/// no covariates.
inline Dataset simulation_portfolio(const Context& ctx) {
  if (!ctx.policies.empty()) {
    if (ctx.claims.empty()) {
      CsvTable pol = read_csv(ctx.policies);
      const int k = pol.column("n_claims");
      if (k >= 0)
        for (auto& row : pol.rows) row[static_cast<std::size_t>(k)] = "0";
      return build_dataset(pol, parse_csv("policy_id,year,amount,at_limit\n"), ctx.cfg.scheme, ctx.policies,
                           "claims");
    }
    return load(ctx);
  }
  Dataset d;
  d.scheme = ctx.cfg.scheme;
  PolicyRecord r;
  r.id = policy_id(0);
  d.records.push_back(r);
  return d;
}

inline int cmd_simulate(Context& ctx) {
  const auto sec = ctx.cfg.section("simulate");
  const long R = get_or<long>(sec, "replications", 10000);
  if (R <= 0) throw ValidationError("simulate.replications must be positive");
  const int points = get_or<int>(sec, "ecdf_points", 512);
  const auto levels = number_list(sec, "var_levels", {0.9, 0.95, 0.99});
  const bool write_draws = get_or<bool>(sec, "write_draws", true);
  Dataset d = simulation_portfolio(ctx);
  for (auto& r : d.records) r.n = 0, r.claims.clear();
  const Scheme scheme = ctx.cfg.scheme;
  const CompoundModel base = with_parameters(ctx.cfg.model, ctx.cfg.parameters);

  struct Run {
    std::string label;
    CompoundModel model;
  };
  std::vector<Run> runs;
  if (sec && sec["kendall_tau"]) {
    if (base.copula.family == CopulaFamily::Independence || base.copula.family == CopulaFamily::StudentT)
      throw ValidationError("simulate.kendall_tau needs a one-parameter copula family");
    for (double tau : number_list(sec, "kendall_tau", {})) {
      CompoundModel m = base;
      if (tau == 0.0) {
        m.copula = CopulaSpec{};
      } else {
        int rot = base.copula.rotation;
        if (is_archimedean(m.copula.family) && m.copula.family != CopulaFamily::Frank) rot = tau < 0.0 ? 90 : 0;
        m.copula.rotation = rot;
        m.copula.theta = param_from_tau(m.copula.family, rot, tau);
      }
      runs.push_back({"tau_" + format_number(tau), m});
    }
  } else {
    runs.push_back({"model", base});
  }

  const auto laws_ds = d;
  ojson summary;
  summary["spec_version"] = kSpecVersion;
  summary["command"] = "simulate";
  summary["replications"] = R;
  summary["seed"] = ctx.seed;
  summary["scheme"] = to_string(scheme);
  ojson runs_json = ojson::array();
  auto var_os = open_out(ctx, "var.csv");
  CsvWriter var_csv(var_os);
  var_csv.row("run", "alpha", "value", "ci_lower", "ci_upper");
  for (const auto& run : runs) {
    const auto laws = policy_laws(run.model, laws_ds);
    const Copula C(run.model.copula);
    const Copula Ct(transposed(run.model.copula));
    std::vector<std::vector<SimDraw>> draws(d.records.size(), std::vector<SimDraw>(static_cast<std::size_t>(R)));
    parallel_for(d.records.size(), ctx.threads, [&](std::size_t i) {
      const auto& r = d.records[i];
      for (long k = 0; k < R; ++k) {
        Rng rng = Rng::stream(ctx.seed, hash_id(r.id), static_cast<std::uint64_t>(k));
        const auto g = draw_ground_up(laws[i].N, laws[i].Y, C, Ct, rng);
        const double dd = scheme == Scheme::Complete ? 0.0 : r.deductible;
        const double ll = scheme == Scheme::Complete ? kInf : r.limit;
        draws[i][static_cast<std::size_t>(k)] = apply_coverage(r.id, g, dd, ll, scheme);
      }
    });
    std::vector<double> totals(static_cast<std::size_t>(R), 0.0);
    if (write_draws) {
      auto os = open_out(ctx, "aggregate_" + run.label + ".csv");
      CsvWriter w(os);
      w.row("replication", "policy_id", "n", "s");
      for (long k = 0; k < R; ++k)
        for (std::size_t i = 0; i < d.records.size(); ++i) {
          const auto& s = draws[i][static_cast<std::size_t>(k)];
          w.row(k + 1, s.policy_id, s.n, s.s);
        }
    }
    for (std::size_t i = 0; i < d.records.size(); ++i)
      for (long k = 0; k < R; ++k) totals[static_cast<std::size_t>(k)] += draws[i][static_cast<std::size_t>(k)].s;
    {
      auto os = open_out(ctx, "ecdf_" + run.label + ".csv");
      CsvWriter w(os);
      w.row("s", "F");
      for (const auto& p : ecdf_grid(totals, points)) w.row(p.x, p.F);
    }
    std::vector<double> sorted = totals;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    ojson vars = ojson::array();
    for (double a : levels) {
      const double v = var_quantile(totals, a);
      const double half = 1.959963984540054 * std::sqrt(n * a * (1.0 - a));
      auto at = [&](double k) {
        const auto idx = static_cast<std::size_t>(std::clamp(k, 1.0, n)) - 1;
        return sorted[idx];
      };
      const double lo = at(std::floor(n * a - half)), hi = at(std::ceil(n * a + half));
      var_csv.row(run.label, a, v, lo, hi);
      vars.push_back({{"alpha", a}, {"value", v}, {"ci_lower", lo}, {"ci_upper", hi}});
    }
    const Moments m = sample_moments(totals);
    runs_json.push_back({{"run", run.label},
                         {"copula", run.model.copula.label()},
                         {"copula_parameter", json_number(run.model.copula.theta)},
                         {"mean", m.mean},
                         {"variance", m.variance},
                         {"mean_se", m.mean_se},
                         {"var", vars}});
  }
  summary["runs"] = runs_json;
  write_json(ctx, "simulate.json", summary);
  return 0;
}

inline int cmd_diagnose(Context& ctx) {
  const Dataset d = load(ctx);
  const auto sec = ctx.cfg.section("diagnose");
  const int K = get_or<int>(sec, "chisq_max_count", 5);
  std::optional<FitResult> fit;
  const CompoundModel m = resolved_model(ctx, d, &fit);
  const auto res = cox_snell_residuals(m, d);
  {
    auto os = open_out(ctx, "residuals.csv");
    CsvWriter w(os);
    w.row("policy_id", "claim", "u", "normal_score");
    for (const auto& r : res) w.row(r.policy_id, r.claim + 1, r.u, r.z);
  }
  {
    auto os = open_out(ctx, "qq.csv");
    CsvWriter w(os);
    w.row("theoretical", "sample");
    for (const auto& p : qq_normal_scores(res)) w.row(p.theoretical, p.sample);
  }
  ojson j;
  j["spec_version"] = kSpecVersion;
  j["command"] = "diagnose";
  j["copula"] = m.copula.label();
  j["n_residuals"] = res.size();
  if (res.size() >= 8) {
    const auto t = uniformity_tests(res);
    auto stat = [](const TestStat& s) { return ojson{{"statistic", json_number(s.statistic)}, {"p_value", json_number(s.p_value)}}; };
    j["uniformity"] = {{"kolmogorov_smirnov", stat(t.ks)}, {"cramer_von_mises", stat(t.cvm)}, {"anderson_darling", stat(t.ad)}};
  } else {
    j["uniformity"] = nullptr;
    j["warnings"].push_back("fewer than 8 residuals; uniformity tests skipped");
  }
  if (d.scheme != Scheme::PerPaymentTruncated) {
    const auto c = pearson_chisq_counts(m, d, K);
    ojson tab = ojson::array();
    for (const auto& cell : c.table) tab.push_back({{"count", cell.label}, {"observed", cell.observed}, {"expected", cell.expected}});
    j["count_chisq"] = {{"statistic", json_number(c.statistic)}, {"df", c.df}, {"p_value", json_number(c.p_value)}, {"table", tab}};
    for (const auto& w : c.warnings) j["warnings"].push_back(w);
  }
  if (fit) j["fit"] = to_json(*fit);
  write_json(ctx, "diagnostics.json", j);
  return 0;
}

struct PolicyForecast {
  std::vector<std::vector<double>> s;  // [policy][draw]
};

inline PolicyForecast forecast(const CompoundModel& m, const Dataset& d, long R, std::uint64_t seed, unsigned threads) {
  PolicyForecast f;
  const PortfolioSample ps = simulate_portfolio(m, d, R, seed, d.scheme, threads);
  f.s = ps.s;
  return f;
}

inline double realized_loss(const PolicyRecord& r) {
  double s = 0.0;
  for (const auto& c : r.claims) s += c.amount;
  return s;
}

inline int cmd_score(Context& ctx) {
  const Dataset d = load(ctx);
  const auto sec = ctx.cfg.section("score");
  const long R = get_or<long>(sec, "replications", 1000);
  const int B = get_or<int>(sec, "bootstrap", 500);
  std::optional<FitResult> fit;
  const CompoundModel mc = resolved_model(ctx, d, &fit);
  FitOptions o = fit_options(ctx);
  o.compute_se = false;
  CompoundModel mi;
  if (ctx.cfg.parameters.empty()) {
    mi = fit_independence(ctx.cfg.model, d, o).model;
  } else {
    mi = mc;
    mi.copula = CopulaSpec{};
  }
  const auto fc = forecast(mc, d, R, ctx.seed, ctx.threads);
  const auto fi = forecast(mi, d, R, ctx.seed, ctx.threads);
  auto os = open_out(ctx, "crps.csv");
  CsvWriter w(os);
  w.row("policy_id", "year", "realized", "crps_copula", "crps_independence");
  long pos = 0, wins = 0;
  std::vector<double> loss, pc, pi;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    const double y = realized_loss(r);
    const double a = crps(fc.s[i], y), b = crps(fi.s[i], y);
    w.row(r.id, r.year, y, a, b);
    if (r.n > 0) {
      ++pos;
      wins += a < b;
    }
    loss.push_back(y);
    pc.push_back(sample_moments(fc.s[i]).mean);
    pi.push_back(sample_moments(fi.s[i]).mean);
    ids.push_back(r.id);
  }
  ojson j;
  j["spec_version"] = kSpecVersion;
  j["command"] = "score";
  j["replications"] = R;
  j["positive_claim_policies"] = pos;
  j["copula_better"] = wins;
  j["copula_better_share"] = pos ? static_cast<double>(wins) / pos : kNaN;
  if (pos > 0) {
    boost::math::binomial_distribution<double> bin(static_cast<double>(pos), 0.5);
    j["binomial_p_value"] = wins > 0 ? boost::math::cdf(boost::math::complement(bin, static_cast<double>(wins - 1))) : 1.0;
  }
  auto gos = open_out(ctx, "gini.csv");
  CsvWriter gw(gos);
  gw.row("model", "gini", "std_error");
  ojson gj = ojson::array();
  for (const auto& [label, prem] : {std::pair<std::string, const std::vector<double>*>{"copula", &pc}, {"independence", &pi}}) {
    const auto g = gini_bootstrap(*prem, *prem, loss, ids, B, ctx.seed);
    gw.row(label, g.gini, g.std_error);
    gj.push_back({{"model", label}, {"gini", json_number(g.gini)}, {"std_error", json_number(g.std_error)}});
  }
  j["gini"] = gj;
  write_json(ctx, "score.json", j);
  return 0;
}

inline int cmd_riskrank(Context& ctx) {
  const Dataset d = load(ctx);
  const auto sec = ctx.cfg.section("riskrank");
  const long R = get_or<long>(sec, "replications", 10000);
  const int B = get_or<int>(sec, "bootstrap", 500);
  const CompoundModel m = resolved_model(ctx, d);
  const PortfolioSample ps = simulate_portfolio(m, d, R, ctx.seed, d.scheme, ctx.threads);
  const auto scores = risk_scores(ps);
  std::vector<double> cv, prem, loss;
  std::vector<std::string> ids;
  {
    auto os = open_out(ctx, "riskscores.csv");
    CsvWriter w(os);
    w.row("policy_id", "year", "mean", "variance", "cv", "realized");
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const auto& s = scores[i];
      const double y = realized_loss(d.records[i]);
      w.row(s.policy_id, d.records[i].year, s.mean, s.variance, s.cv, y);
      cv.push_back(std::isfinite(s.cv) ? s.cv : kInf);
      prem.push_back(s.mean);
      loss.push_back(y);
      ids.push_back(s.policy_id);
    }
  }
  const auto curve = lorenz_gini(cv, prem, loss, ids);
  {
    auto os = open_out(ctx, "lorenz.csv");
    CsvWriter w(os);
    w.row("premium_share", "loss_share");
    for (const auto& p : curve.points) w.row(p.premium_share, p.loss_share);
  }
  const auto g = gini_bootstrap(cv, prem, loss, ids, B, ctx.seed);
  ojson j;
  j["spec_version"] = kSpecVersion;
  j["command"] = "riskrank";
  j["replications"] = R;
  j["copula"] = m.copula.label();
  j["gini"] = json_number(g.gini);
  j["gini_std_error"] = json_number(g.std_error);
  write_json(ctx, "riskrank.json", j);
  return 0;
}

inline SyntheticDesign recovery_design(const YAML::Node& sec, Scheme scheme) {
  const std::string kind = get_or<std::string>(sec, "design", "regression");
  const double rho = get_or<double>(sec, "rho", 0.5);
  const long size = get_or<long>(sec, "size", kind == "portfolio" ? 2000 : 500);
  if (kind == "regression") {
    if (scheme != Scheme::Complete) return design_incomplete(rho, scheme, size);
    return design_regression(rho, size);
  }
  if (kind == "portfolio") {
    SyntheticDesign g = design_portfolio(rho, size);
    g.scheme = scheme;
    return g;
  }
  throw ValidationError("recover.design must be 'regression' or 'portfolio'");
}

inline FitMethod method_from_string(const std::string& s) {
  if (s == "two_stage") return FitMethod::TwoStage;
  if (s == "full_mle") return FitMethod::FullMLE;
  if (s == "independence") return FitMethod::IndependenceBaseline;
  throw ValidationError("unknown fit method: " + s);
}

inline int cmd_recover(Context& ctx) {
  const auto sec = ctx.cfg.section("recover");
  const SyntheticDesign g = recovery_design(sec, ctx.cfg.scheme);
  const long R = get_or<long>(sec, "replications", 250);
  std::vector<std::string> def{"two_stage", "full_mle", "independence"};
  if (g.scheme == Scheme::PerPaymentTruncated) def = {"independence", "full_mle"};
  std::vector<FitMethod> methods;
  for (const auto& s : string_list(sec, "methods", def)) methods.push_back(method_from_string(s));
  FitOptions o = fit_options(ctx);
  const RecoveryReport rep = run_recovery(g, R, ctx.seed, methods, ctx.threads, o);
  ojson j{{"spec_version", kSpecVersion}, {"command", "recover"}};
  j.update(to_json(rep));
  write_json(ctx, "recovery.json", j);
  auto os = open_out(ctx, "recovery.csv");
  CsvWriter w(os);
  w.row("method", "parameter", "true", "mean", "relative_bias", "rmse");
  for (const auto& m : rep.methods)
    for (const auto& r : m.rows) w.row(std::string(to_string(m.method)), r.name, r.truth, r.mean, r.rel_bias, r.rmse);
  return 0;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline ojson error_json(const std::string& kind, const std::string& msg, const ojson& details = {}) {
  ojson e{{"error", {{"type", kind}, {"message", msg}}}};
  if (!details.is_null()) e["error"]["details"] = details;
  return e;
}

/// Runs the command line; errors are reported as one JSON object on `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Copula-linked frequency-severity models for insurance claims"};
  app.require_subcommand(1);
  std::string config, policies, claims, outdir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  const std::vector<std::string> names{"fit", "simulate", "diagnose", "score", "riskrank", "recover"};
  const std::vector<std::string> help{
      "fit the two-stage, full and independence models",
      "simulate aggregate losses",
      "residual and count diagnostics",
      "CRPS and Gini scoring against the independence model",
      "per-policy risk scores and the ordered Lorenz curve",
      "simulate-and-refit recovery study"};
  for (std::size_t i = 0; i < names.size(); ++i) app.add_subcommand(names[i], help[i])->fallthrough();
  app.add_option("--config", config, "YAML run configuration")->required();
  app.add_option("--policies", policies, "policy CSV");
  app.add_option("--claims", claims, "claims CSV");
  app.add_option("--out", outdir, "output directory");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (CCR_THREADS overrides)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what()).dump() << "\n";
    return 2;
  }
  std::string cmd;
  for (auto* s : app.get_subcommands()) cmd = s->get_name();
  try {
    Context ctx;
    ctx.cfg = parse_config(read_file(config));
    ctx.policies = policies;
    ctx.claims = claims;
    ctx.out = outdir;
    ctx.seed = seed ? *seed : ctx.cfg.seed;
    ctx.threads = resolve_threads(threads ? threads : ctx.cfg.threads);
    const YAML::Node& root = ctx.cfg.root;
    if (cmd != "recover" && !root["model"])
      throw ValidationError("config: missing 'model' section");
    int rc = 0;
    if (cmd == "fit") rc = cmd_fit(ctx);
    else if (cmd == "simulate") rc = cmd_simulate(ctx);
    else if (cmd == "diagnose") rc = cmd_diagnose(ctx);
    else if (cmd == "score") rc = cmd_score(ctx);
    else if (cmd == "riskrank") rc = cmd_riskrank(ctx);
    else if (cmd == "recover") rc = cmd_recover(ctx);
    ojson done{{"command", cmd}, {"outputs", ctx.written}};
    out << done.dump() << "\n";
    return rc;
  } catch (const CliError& e) {
    err << error_json(e.kind, e.what(), e.details).dump() << "\n";
    return e.code;
  } catch (const ValidationError& e) {
    err << error_json("validation", e.what()).dump() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << error_json("domain", e.what()).dump() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << error_json("numeric", e.what()).dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what()).dump() << "\n";
    return 1;
  }
}

}  // namespace ccr::cli
