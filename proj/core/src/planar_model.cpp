#include "ringtrap/planar_model.hpp"

#include <cmath>
#include <stdexcept>

namespace ringtrap {

void CrystalState2D::validate(double coincidence_epsilon) const {
  if (size() < 1) throw std::invalid_argument("CrystalState2D: empty state");
  if (radii.size() != angles.size())
    throw std::invalid_argument("CrystalState2D: radii/angles size mismatch");
  if (!(radial_frequency > 0) || !(equilibrium_radius > 0))
    throw std::invalid_argument("CrystalState2D: radial_frequency and equilibrium_radius must be > 0");
  for (int i = 0; i < size(); ++i) {
    if (!(radii[i] > 0)) throw std::invalid_argument("CrystalState2D: radii must be > 0");
    if (!std::isfinite(angles[i])) throw std::invalid_argument("CrystalState2D: non-finite angle");
  }
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j) {
      double xi = radii[i] * std::sin(angles[i]), yi = radii[i] * std::cos(angles[i]);
      double xj = radii[j] * std::sin(angles[j]), yj = radii[j] * std::cos(angles[j]);
      if (std::hypot(xi - xj, yi - yj) < coincidence_epsilon)
        throw std::domain_error("CrystalState2D: singular configuration, coincident ions");
    }
}

namespace detail {

double planar_energy_raw(const Eigen::VectorXd& radii, const Eigen::VectorXd& theta,
                         double omega_r, double r0, const RingSpec& ring,
                         const InPlaneField& field) {
  const int n = static_cast<int>(theta.size());
  const double e = consts.elementary_charge;
  const double ke2 = coulomb_constant * e * e;
  const double k_rad = ring.ion_mass * omega_r * omega_r;

  double v = 0.0;
  for (int i = 0; i < n; ++i) {
    double dr = radii[i] - r0;
    v += 0.5 * k_rad * dr * dr;
    v -= e * radii[i] * (field.ex * std::sin(theta[i]) + field.ey * std::cos(theta[i]));
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double xi = radii[i] * std::sin(theta[i]), yi = radii[i] * std::cos(theta[i]);
      double xj = radii[j] * std::sin(theta[j]), yj = radii[j] * std::cos(theta[j]);
      v += ke2 / std::hypot(xi - xj, yi - yj);
    }
  return v;
}

Eigen::VectorXd planar_gradient_raw(const Eigen::VectorXd& radii, const Eigen::VectorXd& theta,
                                    double omega_r, double r0, const RingSpec& ring,
                                    const InPlaneField& field) {
  const int n = static_cast<int>(theta.size());
  const double e = consts.elementary_charge;
  const double ke2 = coulomb_constant * e * e;
  const double k_rad = ring.ion_mass * omega_r * omega_r;

  Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * n); // [d/dr; d/dth], converted to s at the end
  for (int i = 0; i < n; ++i) {
    double sn = std::sin(theta[i]), cs = std::cos(theta[i]);
    double s_dip = field.ex * sn + field.ey * cs;  // E . u_hat
    double c_dip = field.ex * cs - field.ey * sn;  // E . tau_hat
    g[i] += k_rad * (radii[i] - r0) - e * s_dip;
    g[n + i] += -e * radii[i] * c_dip;
  }
  for (int i = 0; i < n; ++i) {
    double sni = std::sin(theta[i]), csi = std::cos(theta[i]);
    double xi = radii[i] * sni, yi = radii[i] * csi;
    for (int j = i + 1; j < n; ++j) {
      double snj = std::sin(theta[j]), csj = std::cos(theta[j]);
      double xj = radii[j] * snj, yj = radii[j] * csj;
      double dx = xi - xj, dy = yi - yj;
      double rho2 = dx * dx + dy * dy;
      double rho = std::sqrt(rho2);
      double f = -ke2 / (rho2 * rho); // dU/dp_i = f * (p_i - p_j)
      double fx = f * dx, fy = f * dy;
      // chain rule: d/dr = u_hat . dU/dp, d/dth = r tau_hat . dU/dp
      g[i] += fx * sni + fy * csi;
      g[n + i] += radii[i] * (fx * csi - fy * sni);
      g[j] -= fx * snj + fy * csj;
      g[n + j] -= radii[j] * (fx * csj - fy * snj);
    }
  }
  // s = r0 th
  g.tail(n) /= r0;
  return g;
}

Eigen::MatrixXd planar_hessian_raw(const Eigen::VectorXd& radii, const Eigen::VectorXd& theta,
                                   double omega_r, double r0, const RingSpec& ring,
                                   const InPlaneField& field) {
  const int n = static_cast<int>(theta.size());
  const double e = consts.elementary_charge;
  const double ke2 = coulomb_constant * e * e;
  const double k_rad = ring.ion_mass * omega_r * omega_r;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n); // [r; th] blocks, scaled to s at the end
  for (int i = 0; i < n; ++i) {
    double sn = std::sin(theta[i]), cs = std::cos(theta[i]);
    double s_dip = field.ex * sn + field.ey * cs;
    double c_dip = field.ex * cs - field.ey * sn;
    h(i, i) += k_rad;
    h(n + i, n + i) += e * radii[i] * s_dip;
    h(i, n + i) += -e * c_dip;
    h(n + i, i) += -e * c_dip;
  }
  for (int i = 0; i < n; ++i) {
    double sni = std::sin(theta[i]), csi = std::cos(theta[i]);
    double xi = radii[i] * sni, yi = radii[i] * csi;
    for (int j = i + 1; j < n; ++j) {
      double snj = std::sin(theta[j]), csj = std::cos(theta[j]);
      double xj = radii[j] * snj, yj = radii[j] * csj;
      double dx = xi - xj, dy = yi - yj;
      double rho2 = dx * dx + dy * dy;
      double rho = std::sqrt(rho2);
      double inv3 = 1.0 / (rho2 * rho);
      // Cartesian pair Hessian H_ii = ke2 (3 rho_hat rho_hat^T - I)/rho^3, H_ij = -H_ii
      double hxx = ke2 * (3.0 * dx * dx / rho2 - 1.0) * inv3;
      double hyy = ke2 * (3.0 * dy * dy / rho2 - 1.0) * inv3;
      double hxy = ke2 * (3.0 * dx * dy / rho2) * inv3;
      double fx = -ke2 * dx * inv3, fy = -ke2 * dy * inv3; // dU/dp_i

      // basis vectors: u = (sn, cs), t = r (cs, -sn)
      double uix = sni, uiy = csi, tix = radii[i] * csi, tiy = -radii[i] * sni;
      double ujx = snj, ujy = csj, tjx = radii[j] * csj, tjy = -radii[j] * snj;

      auto quad = [&](double ax, double ay, double bx, double by) {
        return ax * (hxx * bx + hxy * by) + ay * (hxy * bx + hyy * by);
      };

      // same-ion blocks (plus curvature of the polar chart)
      h(i, i) += quad(uix, uiy, uix, uiy);
      h(n + i, n + i) += quad(tix, tiy, tix, tiy) + (fx * (-radii[i] * sni) + fy * (-radii[i] * csi));
      double ri_cross = quad(uix, uiy, tix, tiy) + (fx * csi - fy * sni);
      h(i, n + i) += ri_cross;
      h(n + i, i) += ri_cross;

      h(j, j) += quad(ujx, ujy, ujx, ujy);
      h(n + j, n + j) += quad(tjx, tjy, tjx, tjy) + (-fx * (-radii[j] * snj) - fy * (-radii[j] * csj));
      double rj_cross = quad(ujx, ujy, tjx, tjy) + (-fx * csj + fy * snj);
      h(j, n + j) += rj_cross;
      h(n + j, j) += rj_cross;

      // cross-ion blocks carry a minus sign (pair energy depends on p_i - p_j)
      double rr = -quad(uix, uiy, ujx, ujy);
      double rt = -quad(uix, uiy, tjx, tjy);
      double tr = -quad(tix, tiy, ujx, ujy);
      double tt = -quad(tix, tiy, tjx, tjy);
      h(i, j) += rr;
      h(j, i) += rr;
      h(i, n + j) += rt;
      h(n + j, i) += rt;
      h(n + i, j) += tr;
      h(j, n + i) += tr;
      h(n + i, n + j) += tt;
      h(n + j, n + i) += tt;
    }
  }
  // th -> s scaling
  h.bottomLeftCorner(n, n) /= r0;
  h.topRightCorner(n, n) /= r0;
  h.bottomRightCorner(n, n) /= r0 * r0;
  return h;
}

} // namespace detail

double planar_energy(const CrystalState2D& state, const RingSpec& ring,
                     const InPlaneField& field, const ModelOptions& opts) {
  ring.validate();
  field.validate();
  state.validate(opts.coincidence_epsilon * state.equilibrium_radius);
  return detail::planar_energy_raw(state.radii, state.angles, state.radial_frequency,
                                   state.equilibrium_radius, ring, field);
}

Eigen::VectorXd planar_gradient(const CrystalState2D& state, const RingSpec& ring,
                                const InPlaneField& field, const ModelOptions& opts) {
  ring.validate();
  field.validate();
  state.validate(opts.coincidence_epsilon * state.equilibrium_radius);
  return detail::planar_gradient_raw(state.radii, state.angles, state.radial_frequency,
                                     state.equilibrium_radius, ring, field);
}

Eigen::MatrixXd planar_hessian(const CrystalState2D& state, const RingSpec& ring,
                               const InPlaneField& field, const ModelOptions& opts) {
  ring.validate();
  field.validate();
  state.validate(opts.coincidence_epsilon * state.equilibrium_radius);
  return detail::planar_hessian_raw(state.radii, state.angles, state.radial_frequency,
                                    state.equilibrium_radius, ring, field);
}

} // namespace ringtrap
