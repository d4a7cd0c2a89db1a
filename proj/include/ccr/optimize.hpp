#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccr/core.hpp"

namespace ccr {

struct OptimOptions {
  double ftol = 1e-8;  // |change in objective| between iterations
  double gtol = 1e-5;  // gradient 2-norm
  int max_iter = 2000;
  double fd_step = 1e-5;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = -kInf;
  int iterations = 0;
  long evaluations = 0;
  double grad_norm = kNaN;
  bool converged = false;
  std::string status;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central-difference gradient with step h * max(1, |x_i|).
inline Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x, double h, long* evals = nullptr) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double hi = h * std::max(1.0, std::fabs(x[i]));
    xp[i] = x[i] + hi;
    const double fp = f(xp);
    xp[i] = x[i] - hi;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * hi);
  }
  if (evals) *evals += 2 * x.size();
  return g;
}

/// Nelder-Mead maximization.
inline OptimResult nelder_mead_maximize(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opt,
                                        double scale = 0.1) {
  const Eigen::Index p = x0.size();
  std::vector<Eigen::VectorXd> S(static_cast<std::size_t>(p + 1), x0);
  std::vector<double> F(static_cast<std::size_t>(p + 1));
  OptimResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? -kInf : v;
  };
  for (Eigen::Index i = 0; i < p; ++i) S[static_cast<std::size_t>(i + 1)][i] += scale * std::max(1.0, std::fabs(x0[i]));
  for (std::size_t i = 0; i < S.size(); ++i) F[i] = eval(S[i]);
  std::vector<std::size_t> idx(S.size());
  int it = 0;
  for (; it < opt.max_iter * 5; ++it) {
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return F[a] > F[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];
    if (std::isfinite(F[best]) && std::fabs(F[best] - F[worst]) < opt.ftol) break;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) c += S[idx[i]];
    c /= static_cast<double>(p);
    const Eigen::VectorXd xr = c + (c - S[worst]);
    const double fr = eval(xr);
    if (fr > F[best]) {
      const Eigen::VectorXd xe = c + 2.0 * (c - S[worst]);
      const double fe = eval(xe);
      if (fe > fr) {
        S[worst] = xe;
        F[worst] = fe;
      } else {
        S[worst] = xr;
        F[worst] = fr;
      }
    } else if (fr > F[second]) {
      S[worst] = xr;
      F[worst] = fr;
    } else {
      const bool outside = fr > F[worst];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (S[worst] - c));
      const double fc = eval(xc);
      if (fc > (outside ? fr : F[worst])) {
        S[worst] = xc;
        F[worst] = fc;
      } else {
        for (std::size_t i = 0; i < S.size(); ++i) {
          if (i == best) continue;
          S[i] = S[best] + 0.5 * (S[i] - S[best]);
          F[i] = eval(S[i]);
        }
      }
    }
  }
  const auto b = static_cast<std::size_t>(std::max_element(F.begin(), F.end()) - F.begin());
  res.x = S[b];
  res.value = F[b];
  res.iterations = it;
  res.converged = it < opt.max_iter * 5 && std::isfinite(res.value);
  res.status = res.converged ? "converged (simplex)" : "simplex iteration limit";
  return res;
}

/// Quasi-Newton (BFGS) maximization with finite-difference gradients and a
/// backtracking line search; switches to Nelder-Mead when the line search fails.
inline OptimResult maximize(const Objective& f, const Eigen::VectorXd& x0, const OptimOptions& opt = {}) {
  const Eigen::Index p = x0.size();
  OptimResult res;
  res.x = x0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? -kInf : v;
  };
  if (p == 0) {
    res.value = eval(x0);
    res.converged = std::isfinite(res.value);
    res.grad_norm = 0.0;
    res.status = "no free parameters";
    return res;
  }
  double fx = eval(res.x);
  if (!std::isfinite(fx)) {
    res.value = fx;
    res.status = "objective not finite at the initial point";
    return res;
  }
  Eigen::VectorXd g = fd_gradient(f, res.x, opt.fd_step, &res.evaluations);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(p, p);  // inverse Hessian of -f
  bool scaled = false;
  bool fallback_used = false;
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    res.grad_norm = g.norm();
    if (res.grad_norm < opt.gtol) {
      res.converged = true;
      res.status = "converged (gradient)";
      break;
    }
    Eigen::VectorXd d = H * g;  // ascent direction
    if (d.dot(g) <= 0.0) {
      H.setIdentity();
      d = g;
    }
    const double dmax = d.cwiseAbs().maxCoeff();
    if (dmax > 5.0) d *= 5.0 / dmax;
    double t = 1.0, fn = -kInf;
    Eigen::VectorXd xn;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      xn = res.x + t * d;
      fn = eval(xn);
      if (std::isfinite(fn) && fn >= fx + 1e-4 * t * g.dot(d)) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) {
      if (fallback_used) {
        res.status = "line search failed";
        break;
      }
      fallback_used = true;
      OptimOptions nopt = opt;
      auto nm = nelder_mead_maximize(f, res.x, nopt, 0.05);
      res.evaluations += nm.evaluations;
      if (nm.value > fx) {
        res.x = nm.x;
        fx = nm.value;
      }
      g = fd_gradient(f, res.x, opt.fd_step, &res.evaluations);
      H.setIdentity();
      scaled = false;
      continue;
    }
    const Eigen::VectorXd gn = fd_gradient(f, xn, opt.fd_step, &res.evaluations);
    const Eigen::VectorXd s = xn - res.x;
    const Eigen::VectorXd y = g - gn;  // gradient change of -f
    const double df = fn - fx;
    res.x = xn;
    fx = fn;
    g = gn;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H = Eigen::MatrixXd::Identity(p, p) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (std::fabs(df) < opt.ftol) {
      res.iterations = it + 1;
      res.grad_norm = g.norm();
      res.converged = true;
      res.status = "converged (objective change)";
      break;
    }
    if (it + 1 == opt.max_iter) {
      res.iterations = opt.max_iter;
      res.status = "iteration limit";
    }
  }
  res.value = fx;
  if (res.grad_norm != res.grad_norm) res.grad_norm = g.norm();
  if (fallback_used && res.converged) res.status += " after simplex fallback";
  return res;
}

/// Central-difference Hessian with step max(1e-5, 1e-4 |x_i|).
inline Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x) {
  const Eigen::Index p = x.size();
  Eigen::VectorXd h(p);
  for (Eigen::Index i = 0; i < p; ++i) h[i] = std::max(1e-5, 1e-4 * std::fabs(x[i]));
  Eigen::MatrixXd H(p, p);
  const double f0 = f(x);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < p; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = f(xp);
    xp[i] = x[i] - h[i];
    const double fm = f(xp);
    xp[i] = x[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      double acc = 0.0;
      for (int si : {1, -1})
        for (int sj : {1, -1}) {
          xp[i] = x[i] + si * h[i];
          xp[j] = x[j] + sj * h[j];
          acc += si * sj * f(xp);
        }
      xp[i] = x[i];
      xp[j] = x[j];
      H(i, j) = H(j, i) = acc / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

}  // namespace ccr
