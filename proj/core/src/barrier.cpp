#include "ringtrap/barrier.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "minimize.hpp"

namespace ringtrap {

namespace {

using detail::GapChart;

constexpr double energy_scale = 1.380649e-23 * 1e-3; // kB * 1 mK

bool ordered(const Eigen::VectorXd& theta) {
  for (int i = 0; i + 1 < theta.size(); ++i)
    if (!(theta[i + 1] > theta[i])) return false;
  if (theta.size() >= 2 && !(theta[theta.size() - 1] - theta[0] < two_pi)) return false;
  return true;
}

// Constrained minimization with the probe ion (chart slot 0) fixed at
// `probe`: BFGS over the gap weights, then damped Newton over the free
// angles. Warm-started through `w` across the continuation.
struct ConstrainedPoint {
  double energy = 0;
  double reduced_gradient = 0;
  bool converged = false;
  Eigen::VectorXd theta; // full vector, theta[0] == probe
};

ConstrainedPoint minimize_free_ions(double probe, Eigen::VectorXd& w, const RingSpec& ring,
                                    const InPlaneField& field, const EquilibriumOptions& eq) {
  const int n = ring.ion_count;

  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    Eigen::VectorXd theta = GapChart::thetas(probe, x);
    double f = detail::ring_energy_raw(theta, ring, field) / energy_scale;
    if (grad) {
      Eigen::VectorXd gt = detail::ring_gradient_raw(theta, ring, field) / energy_scale;
      gt[0] = 0.0; // probe fixed; its gap derivatives still flow through the chart
      *grad = GapChart::pullback(x, gt, nullptr);
    }
    return f;
  };

  detail::MinimizeOptions mo;
  mo.grad_tol = 1e-9;
  mo.max_iterations = eq.max_iterations;
  auto r = detail::bfgs(objective, w, mo);
  w = r.x;

  Eigen::VectorXd theta = GapChart::thetas(probe, w);

  // Newton polish over the free ions only
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd g = detail::ring_gradient_raw(theta, ring, field);
    Eigen::VectorXd gf = g.tail(n - 1);
    double gn = gf.norm();
    if (gn <= eq.tolerance) break;

    Eigen::MatrixXd h = detail::ring_hessian_raw(theta, ring, field);
    Eigen::MatrixXd hf = h.bottomRightCorner(n - 1, n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hf);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXd& v = es.eigenvectors();
    double floor = std::max(lam.maxCoeff(), 0.0) * 1e-9;
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n - 1);
    for (int k = 0; k < lam.size(); ++k)
      if (lam[k] > floor) step -= (v.col(k).dot(gf) / lam[k]) * v.col(k);

    bool accepted = false;
    for (double a = 1.0; a >= 1e-6; a *= 0.5) {
      Eigen::VectorXd cand = theta;
      cand.tail(n - 1) += a * step;
      if (!ordered(cand)) continue;
      if (!(cand[1] > probe && cand[n - 1] < probe + two_pi)) continue;
      double gn_new = detail::ring_gradient_raw(cand, ring, field).tail(n - 1).norm();
      if (gn_new < gn) {
        theta = cand;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  // keep the warm start aligned with the polished state
  w = GapChart::weights(theta);

  ConstrainedPoint p;
  p.theta = theta;
  p.energy = detail::ring_energy_raw(theta, ring, field);
  p.reduced_gradient = detail::ring_gradient_raw(theta, ring, field).tail(n - 1).norm();
  p.converged = p.reduced_gradient <= eq.tolerance;
  return p;
}

// planar counterpart: probe angle fixed, probe radius and everything else free
struct PlanarConstrainedPoint {
  double energy = 0;
  double reduced_gradient = 0;
  bool converged = false;
};

PlanarConstrainedPoint minimize_free_planar(double probe, Eigen::VectorXd& w, Eigen::VectorXd& rho,
                                            const RingSpec& ring, const InPlaneField& field,
                                            double omega_r, const EquilibriumOptions& eq) {
  const int n = ring.ion_count;
  const double r0 = ring.radius();

  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    Eigen::VectorXd wx = x.head(n);
    Eigen::VectorXd theta = GapChart::thetas(probe, wx);
    Eigen::VectorXd radii = r0 * x.tail(n);
    double f = detail::planar_energy_raw(radii, theta, omega_r, r0, ring, field) / energy_scale;
    if (grad) {
      Eigen::VectorXd g =
          detail::planar_gradient_raw(radii, theta, omega_r, r0, ring, field) / energy_scale;
      Eigen::VectorXd gt = g.tail(n) * r0;
      gt[0] = 0.0;
      grad->resize(2 * n);
      grad->head(n) = GapChart::pullback(wx, gt, nullptr);
      grad->tail(n) = g.head(n) * r0;
    }
    return f;
  };

  Eigen::VectorXd x0(2 * n);
  x0.head(n) = w;
  x0.tail(n) = rho;
  detail::MinimizeOptions mo;
  mo.grad_tol = 1e-10;
  mo.max_iterations = eq.max_iterations;
  auto r = detail::bfgs(objective, x0, mo);
  w = r.x.head(n);
  rho = r.x.tail(n);

  Eigen::VectorXd theta = GapChart::thetas(probe, w);
  Eigen::VectorXd radii = r0 * rho;

  // Newton polish over the free coordinates (probe's arc coordinate is index n)
  const double tol = eq.tolerance / r0;
  auto reduced = [&](const Eigen::VectorXd& g) {
    Eigen::VectorXd gf(2 * n - 1);
    gf.head(n) = g.head(n);
    gf.tail(n - 1) = g.segment(n + 1, n - 1);
    return gf;
  };
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd g = detail::planar_gradient_raw(radii, theta, omega_r, r0, ring, field);
    Eigen::VectorXd gf = reduced(g);
    double gn = gf.norm();
    if (gn <= tol) break;

    Eigen::MatrixXd h = detail::planar_hessian_raw(radii, theta, omega_r, r0, ring, field);
    Eigen::MatrixXd hf(2 * n - 1, 2 * n - 1);
    // drop row/col n (probe arc coordinate)
    std::vector<int> keep;
    keep.reserve(2 * n - 1);
    for (int k = 0; k < 2 * n; ++k)
      if (k != n) keep.push_back(k);
    for (int a = 0; a < 2 * n - 1; ++a)
      for (int b = 0; b < 2 * n - 1; ++b) hf(a, b) = h(keep[a], keep[b]);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hf);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXd& v = es.eigenvectors();
    double floor = std::max(lam.maxCoeff(), 0.0) * 1e-9;
    Eigen::VectorXd step = Eigen::VectorXd::Zero(2 * n - 1);
    for (int k = 0; k < lam.size(); ++k)
      if (lam[k] > floor) step -= (v.col(k).dot(gf) / lam[k]) * v.col(k);

    bool accepted = false;
    for (double a = 1.0; a >= 1e-6; a *= 0.5) {
      Eigen::VectorXd rc = radii + a * step.head(n);
      Eigen::VectorXd tc = theta;
      for (int k = 1; k < n; ++k) tc[k] += a * step[n + k - 1] / r0;
      if (!ordered(tc) || (rc.array() <= 0.1 * r0).any()) continue;
      if (!(tc[1] > probe && tc[n - 1] < probe + two_pi)) continue;
      Eigen::VectorXd gc = detail::planar_gradient_raw(rc, tc, omega_r, r0, ring, field);
      if (reduced(gc).norm() < gn) {
        radii = rc;
        theta = tc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  w = GapChart::weights(theta);
  rho = radii / r0;

  Eigen::VectorXd g = detail::planar_gradient_raw(radii, theta, omega_r, r0, ring, field);
  PlanarConstrainedPoint p;
  p.energy = detail::planar_energy_raw(radii, theta, omega_r, r0, ring, field);
  p.reduced_gradient = reduced(g).norm();
  p.converged = p.reduced_gradient <= tol;
  return p;
}

int probe_index(const Eigen::VectorXd& sorted_angles, const InPlaneField& field) {
  // the ion farthest in angle from the field-favored pole
  double pole = field.magnitude() > 0 ? field.pole_angle() : 0.0;
  int best = 0;
  double best_d = -1;
  for (int i = 0; i < sorted_angles.size(); ++i) {
    double d = std::abs(circular_distance(sorted_angles[i], pole));
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

} // namespace

BarrierProfile barrier_profile(const RingSpec& ring, const InPlaneField& field,
                               const BarrierOptions& opts) {
  ring.validate();
  field.validate();
  if (ring.ion_count < 2) throw std::invalid_argument("barrier_profile: requires N >= 2");
  if (opts.grid_points < 3) throw std::invalid_argument("barrier_profile: grid_points must be >= 3");

  const int n = ring.ion_count;
  EquilibriumResult eq = find_equilibrium(ring, field, opts.equilibrium);
  if (!eq.converged) {
    BarrierProfile fail;
    fail.complete = false;
    fail.failed_index = -1;
    return fail;
  }

  const Eigen::VectorXd& th = eq.state.angles; // sorted ascending
  const int p = probe_index(th, field);
  const double a_p = th[p];
  const double a_next = (p + 1 < n) ? th[p + 1] : th[0] + two_pi;

  // initial gaps walking the circle from the probe
  Eigen::VectorXd start(n);
  for (int k = 0; k < n; ++k) {
    double v = th[(p + k) % n];
    if (k > 0 && v <= a_p) v += two_pi;
    start[k] = v;
  }
  Eigen::VectorXd w = GapChart::weights(start);
  Eigen::VectorXd rho = Eigen::VectorXd::Ones(n); // planar variant only

  const int g_total = opts.grid_points;
  std::map<double, std::pair<double, double>> points; // probe angle -> (energy, reduced grad)

  auto evaluate = [&](double probe) -> std::pair<bool, double> {
    if (opts.planar_relaxation) {
      PlanarConstrainedPoint q =
          minimize_free_planar(probe, w, rho, ring, field, opts.radial_frequency, opts.equilibrium);
      points[probe] = {q.energy, q.reduced_gradient};
      return {q.converged, q.energy};
    }
    ConstrainedPoint q = minimize_free_ions(probe, w, ring, field, opts.equilibrium);
    points[probe] = {q.energy, q.reduced_gradient};
    return {q.converged, q.energy};
  };

  BarrierProfile prof;
  for (int g = 0; g < g_total; ++g) {
    double probe = a_p + (a_next - a_p) * g / (g_total - 1);
    auto [okpt, e] = evaluate(probe);
    if (!okpt) {
      prof.complete = false;
      prof.failed_index = g;
      break;
    }
  }

  if (prof.complete && g_total >= 3) {
    // quadratic refinement around the grid maximum (+-2 points)
    auto max_it = std::max_element(points.begin(), points.end(),
                                   [](auto& a, auto& b) { return a.second.first < b.second.first; });
    std::vector<std::pair<double, double>> xs(points.size());
    int idx = 0, max_idx = 0;
    for (auto it = points.begin(); it != points.end(); ++it, ++idx) {
      xs[idx] = {it->first, it->second.first};
      if (it == max_it) max_idx = idx;
    }
    if (max_idx > 0 && max_idx + 1 < static_cast<int>(xs.size())) {
      for (int round = 0; round < 2; ++round) {
        int lo = std::max(0, max_idx - 2), hi = std::min<int>(xs.size() - 1, max_idx + 2);
        // least-squares parabola through the window
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
        double xref = xs[max_idx].first;
        for (int k = lo; k <= hi; ++k) {
          double x = xs[k].first - xref, y = xs[k].second;
          s0 += 1; s1 += x; s2 += x * x; s3 += x * x * x; s4 += x * x * x * x;
          t0 += y; t1 += x * y; t2 += x * x * y;
        }
        Eigen::Matrix3d m;
        m << s0, s1, s2, s1, s2, s3, s2, s3, s4;
        Eigen::Vector3d rhs(t0, t1, t2);
        Eigen::Vector3d c = m.fullPivLu().solve(rhs);
        if (!(c[2] < 0)) break; // not concave, nothing to refine
        double vertex = xref - 0.5 * c[1] / c[2];
        if (!(vertex > xs[lo].first && vertex < xs[hi].first)) break;
        if (points.count(vertex)) break;
        auto [okv, ev] = evaluate(vertex);
        if (!okv) break;
        // rebuild ordered view
        xs.assign(points.size(), {});
        idx = 0;
        max_idx = 0;
        double emax = -std::numeric_limits<double>::infinity();
        for (auto& kv : points) {
          xs[idx] = {kv.first, kv.second.first};
          if (kv.second.first > emax) {
            emax = kv.second.first;
            max_idx = idx;
          }
          ++idx;
        }
      }
    }
  }

  const int npts = static_cast<int>(points.size());
  prof.probe_angles.resize(npts);
  prof.energies.resize(npts);
  prof.reduced_gradients.resize(npts);
  int i = 0;
  for (auto& kv : points) {
    prof.probe_angles[i] = kv.first;
    prof.energies[i] = kv.second.first;
    prof.reduced_gradients[i] = kv.second.second;
    ++i;
  }
  if (npts > 0) {
    Eigen::Index imax, imin;
    prof.energies.maxCoeff(&imax);
    prof.energies.minCoeff(&imin);
    prof.barrier = prof.energies[imax] - prof.energies[imin];
    prof.barrier_mK = joules_to_millikelvin(prof.barrier);
    prof.max_angle = prof.probe_angles[imax];
    prof.min_angle_a = prof.probe_angles[0];
    prof.min_angle_c = prof.probe_angles[npts - 1];
  }
  return prof;
}

BarrierValue rotational_barrier(const RingSpec& ring, const InPlaneField& field,
                                const BarrierOptions& opts) {
  BarrierProfile prof = barrier_profile(ring, field, opts);
  if (!prof.complete)
    throw std::runtime_error("rotational_barrier: barrier profile incomplete (continuation failed at index " +
                             std::to_string(prof.failed_index) + ")");
  return {prof.barrier, prof.barrier_mK};
}

ThresholdResult delocalization_threshold_field(const RingSpec& ring, double temperature,
                                               const BarrierOptions& opts) {
  if (!(temperature > 0))
    throw std::invalid_argument("delocalization_threshold_field: temperature must be > 0");

  ThresholdResult res;
  const double target = consts.boltzmann * temperature;
  std::map<double, double> samples; // |E| -> V_B

  auto barrier_at = [&](double emag) {
    auto it = samples.find(emag);
    if (it != samples.end()) return it->second;
    BarrierValue b = rotational_barrier(ring, InPlaneField{0.0, -emag}, opts);
    samples[emag] = b.joules;
    return b.joules;
  };

  // bracket
  double lo = 0.0, hi = 1.0;
  double b_hi = barrier_at(hi);
  int guard = 0;
  while (b_hi < target && guard++ < 7) {
    lo = hi;
    hi *= 2.0;
    b_hi = barrier_at(hi);
  }
  if (b_hi < target) {
    res.error = "failed to bracket: V_B(" + std::to_string(hi) + " V/m) still below kB T";
    return res;
  }

  while (hi - lo > 0.01) {
    double mid = 0.5 * (lo + hi);
    if (barrier_at(mid) < target)
      lo = mid;
    else
      hi = mid;
  }

  // the model predicts V_B monotone in |E|; a violation in the samples means
  // the continuation broke somewhere
  double prev_e = -1, prev_b = -1;
  for (auto& [e, b] : samples) {
    if (prev_e >= 0 && b < prev_b * (1.0 - 1e-6) - 1e-32) {
      res.error = "V_B not monotone in |E| over the bracket (V_B(" + std::to_string(prev_e) +
                  ") > V_B(" + std::to_string(e) + "))";
      return res;
    }
    prev_e = e;
    prev_b = b;
  }

  res.field = 0.5 * (lo + hi);
  res.barrier_at_threshold = barrier_at(res.field);
  res.ok = true;
  return res;
}

} // namespace ringtrap
