#include "minimize.hpp"

#include <cmath>

#include "ringtrap/constants.hpp"

namespace ringtrap::detail {

namespace {

// Armijo backtracking along p from (x, fx, g). Returns step length, 0 on failure.
double backtrack(const Objective& f, const Eigen::VectorXd& x, double fx,
                 const Eigen::VectorXd& g, const Eigen::VectorXd& p,
                 Eigen::VectorXd& x_new, double& f_new, double alpha0) {
  const double c1 = 1e-4;
  double slope = g.dot(p);
  if (slope >= 0) return 0.0;
  double alpha = alpha0;
  for (int k = 0; k < 48; ++k) {
    x_new = x + alpha * p;
    f_new = f(x_new, nullptr);
    if (std::isfinite(f_new) && f_new <= fx + c1 * alpha * slope) return alpha;
    alpha *= 0.5;
  }
  return 0.0;
}

} // namespace

MinimizeResult bfgs(const Objective& f, Eigen::VectorXd x0, const MinimizeOptions& opts) {
  const int n = static_cast<int>(x0.size());
  MinimizeResult res;
  res.x = std::move(x0);

  Eigen::MatrixXd binv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g(n), g_new(n), x_new(n), p(n);
  double fx = f(res.x, &g);
  bool scaled = false;

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    res.grad_norm = g.norm();
    if (res.grad_norm <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    p = -(binv * g);
    double alpha0 = scaled ? 1.0 : opts.first_step / std::max(p.norm(), 1e-300);
    double f_new = fx;
    double alpha = backtrack(f, res.x, fx, g, p, x_new, f_new, alpha0);
    if (alpha == 0.0) {
      // quasi-Newton direction failed: steepest descent + reset
      binv.setIdentity();
      scaled = false;
      p = -g;
      alpha = backtrack(f, res.x, fx, g, p, x_new, f_new,
                        opts.first_step / std::max(g.norm(), 1e-300));
      if (alpha == 0.0) break; // stalled at numerical floor
    }

    f(x_new, &g_new);
    Eigen::VectorXd s = x_new - res.x;
    Eigen::VectorXd y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        binv *= sy / y.squaredNorm();
        scaled = true;
      }
      // BFGS inverse update
      Eigen::VectorXd by = binv * y;
      double yby = y.dot(by);
      binv += ((sy + yby) / (sy * sy)) * (s * s.transpose());
      binv -= (by * s.transpose() + s * by.transpose()) / sy;
    }
    res.x = x_new;
    fx = f_new;
    g = g_new;
  }
  res.value = fx;
  res.grad_norm = g.norm();
  res.iterations = it;
  if (res.grad_norm <= opts.grad_tol) res.converged = true;
  return res;
}

Eigen::VectorXd GapChart::thetas(double base, const Eigen::VectorXd& w) {
  const int n = static_cast<int>(w.size());
  double wmax = w.maxCoeff();
  Eigen::VectorXd p = (w.array() - wmax).exp();
  p /= p.sum();
  Eigen::VectorXd th(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    th[i] = base + two_pi * acc;
    acc += p[i];
  }
  return th;
}

Eigen::VectorXd GapChart::pullback(const Eigen::VectorXd& w, const Eigen::VectorXd& grad_theta,
                                   double* grad_base) {
  const int n = static_cast<int>(w.size());
  double wmax = w.maxCoeff();
  Eigen::VectorXd p = (w.array() - wmax).exp();
  p /= p.sum();

  // prefix_i = sum_{k<i} p_k;  dtheta_i/dw_m = 2pi p_m ([m<i] - prefix_i)
  Eigen::VectorXd prefix(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    prefix[i] = acc;
    acc += p[i];
  }
  double total = 0.0, dot_gp = 0.0;
  for (int i = 0; i < n; ++i) {
    total += grad_theta[i];
    dot_gp += grad_theta[i] * prefix[i];
  }
  // suffix_m = sum_{i>m} grad_theta_i
  Eigen::VectorXd gw(n);
  double suffix = 0.0;
  for (int m = n - 1; m >= 0; --m) {
    gw[m] = two_pi * p[m] * (suffix - dot_gp);
    suffix += grad_theta[m];
  }
  if (grad_base) *grad_base = total;
  return gw;
}

Eigen::VectorXd GapChart::weights(const Eigen::VectorXd& sorted_thetas) {
  const int n = static_cast<int>(sorted_thetas.size());
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    double gap = (i + 1 < n ? sorted_thetas[i + 1] : sorted_thetas[0] + two_pi) - sorted_thetas[i];
    w[i] = std::log(std::max(gap, 1e-12) / two_pi);
  }
  return w;
}

} // namespace ringtrap::detail
