#pragma once

#include <Eigen/Core>

#include "ringtrap/ring_model.hpp"
#include "ringtrap/types.hpp"

namespace ringtrap {

// In-plane extension of the ring model: ions at polar positions (r_i, th_i)
// with a harmonic radial confinement of frequency w_r about r0 = d/2,
//
//   V2D = sum_i [ 1/2 m w_r^2 (r_i - r0)^2 - e (Ex x_i + Ey y_i) ]
//         + sum_{i<j} e^2 / (4 pi eps0 |p_i - p_j|),
//
// (x, y) = r (sin th, cos th). Derivatives are taken over the 2N mixed
// coordinates [r_1..r_N, s_1..s_N] with arc length s_i = r0 th_i, so that
// the Hessian is mass-weighted consistently (omega = sqrt(lambda/m)).
double planar_energy(const CrystalState2D& state, const RingSpec& ring,
                     const InPlaneField& field, const ModelOptions& opts = {});

// gradient [dV/dr (J/m); dV/ds (J/m)], size 2N
Eigen::VectorXd planar_gradient(const CrystalState2D& state, const RingSpec& ring,
                                const InPlaneField& field, const ModelOptions& opts = {});

// 2N x 2N symmetric Hessian in (r, s) coordinates, J/m^2
Eigen::MatrixXd planar_hessian(const CrystalState2D& state, const RingSpec& ring,
                               const InPlaneField& field, const ModelOptions& opts = {});

namespace detail {

double planar_energy_raw(const Eigen::VectorXd& radii, const Eigen::VectorXd& theta,
                         double omega_r, double r0, const RingSpec& ring,
                         const InPlaneField& field);
Eigen::VectorXd planar_gradient_raw(const Eigen::VectorXd& radii, const Eigen::VectorXd& theta,
                                    double omega_r, double r0, const RingSpec& ring,
                                    const InPlaneField& field);
Eigen::MatrixXd planar_hessian_raw(const Eigen::VectorXd& radii, const Eigen::VectorXd& theta,
                                   double omega_r, double r0, const RingSpec& ring,
                                   const InPlaneField& field);

} // namespace detail
} // namespace ringtrap
