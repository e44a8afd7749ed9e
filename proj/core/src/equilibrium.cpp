#include "ringtrap/equilibrium.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "minimize.hpp"

namespace ringtrap {

namespace {

using detail::GapChart;
using detail::Rng;

constexpr double energy_scale = 1.380649e-23 * 1e-3; // kB * 1 mK, conditions the optimizer

bool strictly_ordered(const Eigen::VectorXd& theta) {
  const int n = static_cast<int>(theta.size());
  for (int i = 0; i + 1 < n; ++i)
    if (!(theta[i + 1] > theta[i])) return false;
  if (n >= 2 && !(theta[n - 1] - theta[0] < two_pi)) return false;
  return true;
}

double min_gap(const Eigen::VectorXd& theta) {
  const int n = static_cast<int>(theta.size());
  if (n < 2) return two_pi;
  double g = two_pi - (theta[n - 1] - theta[0]);
  for (int i = 0; i + 1 < n; ++i) g = std::min(g, theta[i + 1] - theta[i]);
  return g;
}

// Damped Newton steps on the raw angles using the analytic Hessian;
// directions with near-zero (or negative) curvature are projected out, so the
// rigid-rotation mode at E = 0 is left untouched. Acceptance is by gradient
// norm, which stays meaningful at scales where energy differences drown in
// rounding.
void newton_polish_1d(Eigen::VectorXd& theta, const RingSpec& ring, const InPlaneField& field,
                      double grad_tol, int max_iter = 40) {
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd g = detail::ring_gradient_raw(theta, ring, field);
    double gn = g.norm();
    if (gn <= grad_tol) return;

    Eigen::MatrixXd h = detail::ring_hessian_raw(theta, ring, field);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXd& v = es.eigenvectors();
    double floor = std::max(lam.maxCoeff(), 0.0) * 1e-9;
    Eigen::VectorXd step = Eigen::VectorXd::Zero(theta.size());
    for (int k = 0; k < lam.size(); ++k)
      if (lam[k] > floor) step -= (v.col(k).dot(g) / lam[k]) * v.col(k);

    double cap = 0.2 * min_gap(theta);
    double norm_inf = step.lpNorm<Eigen::Infinity>();
    if (norm_inf > cap) step *= cap / norm_inf;

    bool accepted = false;
    for (double a = 1.0; a >= 1e-6; a *= 0.5) {
      Eigen::VectorXd cand = theta + a * step;
      if (!strictly_ordered(cand)) continue;
      double gn_new = detail::ring_gradient_raw(cand, ring, field).norm();
      if (gn_new < gn) {
        theta = cand;
        accepted = true;
        break;
      }
    }
    if (!accepted) return;
  }
}

struct Start1D {
  double base;
  Eigen::VectorXd w;
};

Start1D make_start(int n, int index, double pole, Rng& rng) {
  Start1D s;
  s.w = Eigen::VectorXd::Zero(n);
  if (index == 0) {
    s.base = pole; // uniform ring with an ion at the field-favored pole
  } else {
    s.base = pole + two_pi * rng.uniform();
    for (int i = 0; i < n; ++i) s.w[i] = 0.08 * rng.normal();
  }
  return s;
}

EquilibriumResult assemble_1d(Eigen::VectorXd theta, const RingSpec& ring,
                              const InPlaneField& field, bool gauge_zero, double tol) {
  // wrap, sort, and apply the E = 0 gauge
  for (int i = 0; i < theta.size(); ++i) theta[i] = wrap_angle(theta[i]);
  std::sort(theta.data(), theta.data() + theta.size());
  if (gauge_zero && theta.size() > 0) {
    double shift = theta[0];
    for (int i = 0; i < theta.size(); ++i) theta[i] = wrap_angle(theta[i] - shift);
    std::sort(theta.data(), theta.data() + theta.size());
  }
  EquilibriumResult res;
  res.state.angles = theta;
  res.energy = detail::ring_energy_raw(theta, ring, field);
  res.gradient_norm = detail::ring_gradient_raw(theta, ring, field).norm();
  res.converged = res.gradient_norm <= tol;
  return res;
}

} // namespace

EquilibriumResult find_equilibrium(const RingSpec& ring, const InPlaneField& field,
                                   const EquilibriumOptions& opts) {
  ring.validate();
  field.validate();
  if (!(opts.tolerance > 0)) throw std::invalid_argument("EquilibriumOptions: tolerance must be > 0");
  if (opts.multistart < 1) throw std::invalid_argument("EquilibriumOptions: multistart must be >= 1");

  const int n = ring.ion_count;
  const bool no_field = field.magnitude() == 0.0;
  const double pole = no_field ? 0.0 : field.pole_angle();

  if (n == 1) {
    Eigen::VectorXd theta(1);
    theta[0] = no_field ? 0.0 : wrap_angle(pole);
    return assemble_1d(theta, ring, field, no_field, opts.tolerance);
  }

  Rng rng(opts.seed);
  bool have_best = false;
  EquilibriumResult best;

  for (int start = 0; start < opts.multistart; ++start) {
    Start1D s0 = make_start(n, start, pole, rng);

    // objective in (base?, w) chart coordinates, energies in mK units
    auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
      double base = no_field ? 0.0 : x[0];
      Eigen::VectorXd w = no_field ? x : x.tail(n);
      Eigen::VectorXd theta = GapChart::thetas(base, w);
      double f = detail::ring_energy_raw(theta, ring, field) / energy_scale;
      if (grad) {
        Eigen::VectorXd gt = detail::ring_gradient_raw(theta, ring, field) / energy_scale;
        double gb = 0;
        Eigen::VectorXd gw = GapChart::pullback(w, gt, &gb);
        if (no_field) {
          *grad = gw;
        } else {
          grad->resize(n + 1);
          (*grad)[0] = gb;
          grad->tail(n) = gw;
        }
      }
      return f;
    };

    Eigen::VectorXd x0;
    if (no_field) {
      x0 = s0.w;
    } else {
      x0.resize(n + 1);
      x0[0] = s0.base;
      x0.tail(n) = s0.w;
    }
    detail::MinimizeOptions mo;
    mo.grad_tol = 1e-9;
    mo.max_iterations = opts.max_iterations;
    auto r = detail::bfgs(objective, x0, mo);

    double base = no_field ? 0.0 : r.x[0];
    Eigen::VectorXd theta = GapChart::thetas(base, no_field ? r.x : Eigen::VectorXd(r.x.tail(n)));
    newton_polish_1d(theta, ring, field, opts.tolerance);
    EquilibriumResult cand = assemble_1d(theta, ring, field, no_field, opts.tolerance);

    if (!have_best || (cand.converged && !best.converged) ||
        (cand.converged == best.converged && cand.energy < best.energy)) {
      best = cand;
      have_best = true;
    }
  }
  return best;
}

namespace {

// ---- planar machinery ----

struct PlanarVars {
  // x = [base (unless gauged), w (n), rho (n)] with rho = r / r0
  bool gauged;
  int n;
  double r0;

  int dim() const { return (gauged ? 0 : 1) + 2 * n; }
  double base(const Eigen::VectorXd& x) const { return gauged ? 0.0 : x[0]; }
  Eigen::VectorXd w(const Eigen::VectorXd& x) const {
    return x.segment(gauged ? 0 : 1, n);
  }
  Eigen::VectorXd radii(const Eigen::VectorXd& x) const { return r0 * x.tail(n); }
};

void newton_polish_planar(Eigen::VectorXd& radii, Eigen::VectorXd& theta, const RingSpec& ring,
                          const InPlaneField& field, double omega_r, double r0,
                          double grad_tol, int max_iter = 40) {
  const int n = static_cast<int>(theta.size());
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd g = detail::planar_gradient_raw(radii, theta, omega_r, r0, ring, field);
    double gn = g.norm();
    if (gn <= grad_tol) return;

    Eigen::MatrixXd h = detail::planar_hessian_raw(radii, theta, omega_r, r0, ring, field);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXd& v = es.eigenvectors();
    double floor = std::max(lam.maxCoeff(), 0.0) * 1e-9;
    Eigen::VectorXd step = Eigen::VectorXd::Zero(2 * n);
    for (int k = 0; k < lam.size(); ++k)
      if (lam[k] > floor) step -= (v.col(k).dot(g) / lam[k]) * v.col(k);

    double cap = 0.2 * std::min(min_gap(theta) * r0, 0.2 * r0);
    double norm_inf = step.lpNorm<Eigen::Infinity>();
    if (norm_inf > cap) step *= cap / norm_inf;

    bool accepted = false;
    for (double a = 1.0; a >= 1e-6; a *= 0.5) {
      Eigen::VectorXd rc = radii + a * step.head(n);
      Eigen::VectorXd tc = theta + a * step.tail(n) / r0;
      if (!strictly_ordered(tc) || (rc.array() <= 0.1 * r0).any()) continue;
      double gn_new = detail::planar_gradient_raw(rc, tc, omega_r, r0, ring, field).norm();
      if (gn_new < gn) {
        radii = rc;
        theta = tc;
        accepted = true;
        break;
      }
    }
    if (!accepted) return;
  }
}

bool zigzag_pattern(const Eigen::VectorXd& radii, const Eigen::VectorXd& theta, double r0) {
  const int n = static_cast<int>(radii.size());
  if (n < 3) return false;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return wrap_angle(theta[a]) < wrap_angle(theta[b]); });
  Eigen::VectorXd dev(n);
  for (int i = 0; i < n; ++i) dev[i] = radii[order[i]] - r0;
  if (dev.cwiseAbs().maxCoeff() <= 0.005 * r0) return false;
  // alternating sign over >= 3 consecutive ions, cyclically
  for (int i = 0; i < n; ++i) {
    double a = dev[i], b = dev[(i + 1) % n], c = dev[(i + 2) % n];
    if (a != 0 && b != 0 && c != 0 && ((a > 0) != (b > 0)) && ((b > 0) != (c > 0))) return true;
  }
  return false;
}

PlanarEquilibriumResult assemble_planar(Eigen::VectorXd radii, Eigen::VectorXd theta,
                                        const RingSpec& ring, const InPlaneField& field,
                                        double omega_r, double r0, bool gauge_zero, double tol) {
  const int n = static_cast<int>(theta.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < n; ++i) theta[i] = wrap_angle(theta[i]);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return theta[a] < theta[b]; });

  PlanarEquilibriumResult res;
  res.state.radii.resize(n);
  res.state.angles.resize(n);
  for (int i = 0; i < n; ++i) {
    res.state.radii[i] = radii[order[i]];
    res.state.angles[i] = theta[order[i]];
  }
  if (gauge_zero && n > 0) {
    double shift = res.state.angles[0];
    for (int i = 0; i < n; ++i) res.state.angles[i] = wrap_angle(res.state.angles[i] - shift);
  }
  res.state.radial_frequency = omega_r;
  res.state.equilibrium_radius = r0;
  res.energy = detail::planar_energy_raw(res.state.radii, res.state.angles, omega_r, r0, ring, field);
  res.gradient_norm =
      detail::planar_gradient_raw(res.state.radii, res.state.angles, omega_r, r0, ring, field).norm();
  res.converged = res.gradient_norm <= tol;
  res.zigzag = zigzag_pattern(res.state.radii, res.state.angles, r0);
  return res;
}

} // namespace

PlanarEquilibriumResult find_equilibrium_planar(const RingSpec& ring, const InPlaneField& field,
                                                double radial_frequency,
                                                const EquilibriumOptions& opts) {
  ring.validate();
  field.validate();
  if (!(radial_frequency > 0))
    throw std::invalid_argument("find_equilibrium_planar: radial_frequency must be > 0");
  if (!(opts.tolerance > 0)) throw std::invalid_argument("EquilibriumOptions: tolerance must be > 0");
  if (opts.multistart < 1) throw std::invalid_argument("EquilibriumOptions: multistart must be >= 1");

  const int n = ring.ion_count;
  const double r0 = ring.radius();
  const bool no_field = field.magnitude() == 0.0;
  const double pole = no_field ? 0.0 : field.pole_angle();
  const double planar_tol = opts.tolerance / r0; // J/rad -> J/m

  Rng rng(opts.seed);
  PlanarVars vars{no_field, n, r0};

  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    Eigen::VectorXd w = vars.w(x);
    Eigen::VectorXd theta = GapChart::thetas(vars.base(x), w);
    Eigen::VectorXd radii = vars.radii(x);
    double f = detail::planar_energy_raw(radii, theta, radial_frequency, r0, ring, field) / energy_scale;
    if (grad) {
      Eigen::VectorXd g =
          detail::planar_gradient_raw(radii, theta, radial_frequency, r0, ring, field) / energy_scale;
      Eigen::VectorXd gt = g.tail(n) * r0; // dV/ds -> dV/dth
      double gb = 0;
      Eigen::VectorXd gw = GapChart::pullback(w, gt, &gb);
      grad->resize(vars.dim());
      int off = 0;
      if (!no_field) (*grad)[off++] = gb;
      grad->segment(off, n) = gw;
      grad->tail(n) = g.head(n) * r0; // dV/drho
    }
    return f;
  };

  bool have_best = false;
  PlanarEquilibriumResult best;

  for (int start = 0; start < opts.multistart; ++start) {
    Start1D s0 = make_start(n, start, pole, rng);
    Eigen::VectorXd x0(vars.dim());
    int off = 0;
    if (!no_field) x0[off++] = s0.base;
    x0.segment(off, n) = s0.w;
    for (int i = 0; i < n; ++i)
      x0[off + n + i] = 1.0 + (start == 0 ? 0.0 : 0.01 * rng.normal());

    detail::MinimizeOptions mo;
    mo.grad_tol = 1e-9;
    mo.max_iterations = opts.max_iterations;
    auto r = detail::bfgs(objective, x0, mo);

    Eigen::VectorXd theta = GapChart::thetas(vars.base(r.x), vars.w(r.x));
    Eigen::VectorXd radii = vars.radii(r.x);

    // polish + saddle escape: a symmetric stationary point above the zigzag
    // transition is a saddle; kick along the unstable mode and re-minimize
    for (int escape = 0; escape < 4; ++escape) {
      newton_polish_planar(radii, theta, ring, field, radial_frequency, r0, planar_tol);
      Eigen::MatrixXd h = detail::planar_hessian_raw(radii, theta, radial_frequency, r0, ring, field);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      double lmax = es.eigenvalues().maxCoeff();
      double lmin = es.eigenvalues().minCoeff();
      if (lmin >= -1e-8 * std::max(lmax, 0.0)) break;

      Eigen::VectorXd v = es.eigenvectors().col(0);
      double amp = 5e-3 * r0;
      Eigen::VectorXd rp = radii + amp * v.head(n);
      Eigen::VectorXd tp = theta + amp * v.tail(n) / r0;
      Eigen::VectorXd rm = radii - amp * v.head(n);
      Eigen::VectorXd tm = theta - amp * v.tail(n) / r0;
      double ep = strictly_ordered(tp)
                      ? detail::planar_energy_raw(rp, tp, radial_frequency, r0, ring, field)
                      : std::numeric_limits<double>::infinity();
      double em = strictly_ordered(tm)
                      ? detail::planar_energy_raw(rm, tm, radial_frequency, r0, ring, field)
                      : std::numeric_limits<double>::infinity();
      if (!std::isfinite(ep) && !std::isfinite(em)) break;
      if (ep <= em) {
        radii = rp;
        theta = tp;
      } else {
        radii = rm;
        theta = tm;
      }
      // re-run BFGS from the kicked state
      Eigen::VectorXd xk(vars.dim());
      int o2 = 0;
      if (!no_field) xk[o2++] = theta[0];
      xk.segment(o2, n) = GapChart::weights(theta);
      xk.tail(n) = radii / r0;
      auto rk = detail::bfgs(objective, xk, mo);
      theta = GapChart::thetas(vars.base(rk.x), vars.w(rk.x));
      radii = vars.radii(rk.x);
    }

    PlanarEquilibriumResult cand =
        assemble_planar(radii, theta, ring, field, radial_frequency, r0, no_field, planar_tol);
    if (!have_best || (cand.converged && !best.converged) ||
        (cand.converged == best.converged && cand.energy < best.energy)) {
      best = cand;
      have_best = true;
    }
  }
  return best;
}

ZigzagScan zigzag_critical_number(const RingSpec& ring, const InPlaneField& field,
                                  double radial_frequency, int n_max,
                                  const EquilibriumOptions& opts) {
  if (field.magnitude() <= 0)
    throw std::invalid_argument("zigzag_critical_number: requires a pinning field (|E| > 0)");
  if (n_max < 2) throw std::invalid_argument("zigzag_critical_number: n_max must be >= 2");

  ZigzagScan scan;
  for (int n = 2; n <= n_max; ++n) {
    RingSpec rn = ring;
    rn.ion_count = n;
    PlanarEquilibriumResult res = find_equilibrium_planar(rn, field, radial_frequency, opts);
    if (!res.converged) {
      scan.failed_at = n;
      break;
    }
    scan.flags.emplace_back(n, res.zigzag);
    if (res.zigzag) {
      scan.critical_n = n;
      break;
    }
  }
  return scan;
}

} // namespace ringtrap
