#include "ringtrap/ring_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ringtrap {

void RingSpec::validate() const {
  if (!(diameter > 0)) throw std::invalid_argument("RingSpec: diameter must be > 0");
  if (!(ion_mass > 0)) throw std::invalid_argument("RingSpec: ion_mass must be > 0");
  if (ion_count < 1) throw std::invalid_argument("RingSpec: ion_count must be >= 1");
}

void InPlaneField::validate() const {
  if (!std::isfinite(ex) || !std::isfinite(ey))
    throw std::invalid_argument("InPlaneField: components must be finite");
}

CrystalState1D CrystalState1D::normalized() const {
  CrystalState1D out;
  out.angles = angles.unaryExpr([](double a) { return wrap_angle(a); });
  return out;
}

double CrystalState1D::min_separation() const {
  const int n = size();
  double best = two_pi;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double s = std::abs(circular_distance(angles[i], angles[j]));
      if (s < best) best = s;
    }
  return n < 2 ? 0.0 : best;
}

void CrystalState1D::validate(double coincidence_epsilon) const {
  if (size() < 1) throw std::invalid_argument("CrystalState1D: empty state");
  for (int i = 0; i < size(); ++i)
    if (!std::isfinite(angles[i]))
      throw std::invalid_argument("CrystalState1D: non-finite angle");
  if (size() >= 2 && min_separation() < coincidence_epsilon)
    throw std::domain_error("CrystalState1D: singular configuration, pairwise separation below " +
                            std::to_string(coincidence_epsilon) + " rad");
}

namespace detail {

double ring_energy_raw(const Eigen::VectorXd& theta, const RingSpec& ring,
                       const InPlaneField& field) {
  const int n = static_cast<int>(theta.size());
  const double e = consts.elementary_charge;
  const double half_d = 0.5 * ring.diameter;
  const double pair_scale = coulomb_constant * e * e / ring.diameter;

  double v = 0.0;
  for (int i = 0; i < n; ++i)
    v -= e * half_d * (field.ex * std::sin(theta[i]) + field.ey * std::cos(theta[i]));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double s = std::abs(std::sin(0.5 * (theta[i] - theta[j])));
      v += pair_scale / s;
    }
  return v;
}

void ring_gradient_into(const Eigen::VectorXd& theta, const RingSpec& ring,
                        const InPlaneField& field, Eigen::VectorXd& grad) {
  const int n = static_cast<int>(theta.size());
  const double e = consts.elementary_charge;
  const double half_d = 0.5 * ring.diameter;
  const double pair_scale = coulomb_constant * e * e / ring.diameter;

  grad.resize(n);
  for (int i = 0; i < n; ++i)
    grad[i] = -e * half_d * (field.ex * std::cos(theta[i]) - field.ey * std::sin(theta[i]));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double h = 0.5 * (theta[i] - theta[j]);
      double s = std::sin(h), c = std::cos(h);
      // d/dth_i of 1/|sin h| = -(1/2) c sgn(s) / s^2
      double t = -0.5 * pair_scale * c * ((s >= 0) ? 1.0 : -1.0) / (s * s);
      grad[i] += t;
      grad[j] -= t;
    }
}

Eigen::VectorXd ring_gradient_raw(const Eigen::VectorXd& theta, const RingSpec& ring,
                                  const InPlaneField& field) {
  Eigen::VectorXd g;
  ring_gradient_into(theta, ring, field, g);
  return g;
}

Eigen::MatrixXd ring_hessian_raw(const Eigen::VectorXd& theta, const RingSpec& ring,
                                 const InPlaneField& field) {
  const int n = static_cast<int>(theta.size());
  const double e = consts.elementary_charge;
  const double half_d = 0.5 * ring.diameter;
  const double pair_scale = coulomb_constant * e * e / ring.diameter;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    h(i, i) = e * half_d * (field.ex * std::sin(theta[i]) + field.ey * std::cos(theta[i]));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double hh = 0.5 * (theta[i] - theta[j]);
      double s = std::sin(hh), c = std::cos(hh);
      double as = std::abs(s);
      // second derivative of the pair term wrt (th_i - th_j)
      double g2 = 0.25 * pair_scale * (1.0 + c * c) / (as * as * as);
      h(i, j) -= g2;
      h(j, i) -= g2;
      h(i, i) += g2;
      h(j, j) += g2;
    }
  return h;
}

} // namespace detail

double ring_energy(const CrystalState1D& state, const RingSpec& ring,
                   const InPlaneField& field, const ModelOptions& opts) {
  ring.validate();
  field.validate();
  state.validate(opts.coincidence_epsilon);
  return detail::ring_energy_raw(state.angles, ring, field);
}

Eigen::VectorXd ring_gradient(const CrystalState1D& state, const RingSpec& ring,
                              const InPlaneField& field, const ModelOptions& opts) {
  ring.validate();
  field.validate();
  state.validate(opts.coincidence_epsilon);
  return detail::ring_gradient_raw(state.angles, ring, field);
}

Eigen::MatrixXd ring_hessian(const CrystalState1D& state, const RingSpec& ring,
                             const InPlaneField& field, const ModelOptions& opts) {
  ring.validate();
  field.validate();
  state.validate(opts.coincidence_epsilon);
  return detail::ring_hessian_raw(state.angles, ring, field);
}

} // namespace ringtrap
