#pragma once

#include <Eigen/Core>

#include "ringtrap/types.hpp"

namespace ringtrap {

// Potential energy of ions on a ring of diameter d in a homogeneous in-plane
// field, theta measured from the +y axis so positions are
// (x, y) = (d/2)(sin theta, cos theta):
//
//   V = -sum_i e ((d/2)(Ex sin th_i + Ey cos th_i))
//       + sum_{i<j} e^2 / (4 pi eps0 d |sin((th_i - th_j)/2)|)
//
// For Ex = 0 the dipole term is the familiar -1/2 Ey e d cos(th_i).
// Input angles may be unwrapped; only differences and trig values enter.
// Configurations with a pairwise separation below coincidence_epsilon are
// rejected as singular (std::domain_error).
struct ModelOptions {
  double coincidence_epsilon = 1e-9; // rad
};

double ring_energy(const CrystalState1D& state, const RingSpec& ring,
                   const InPlaneField& field, const ModelOptions& opts = {});

// dV/dtheta_i, J/rad
Eigen::VectorXd ring_gradient(const CrystalState1D& state, const RingSpec& ring,
                              const InPlaneField& field, const ModelOptions& opts = {});

// d2V/dtheta_i dtheta_j, J/rad^2, symmetric by construction
Eigen::MatrixXd ring_hessian(const CrystalState1D& state, const RingSpec& ring,
                             const InPlaneField& field, const ModelOptions& opts = {});

namespace detail {

// Unchecked raw-angle versions used by the optimizer and integrator hot
// paths. No singularity guard; callers maintain ion order themselves.
double ring_energy_raw(const Eigen::VectorXd& theta, const RingSpec& ring,
                       const InPlaneField& field);
void ring_gradient_into(const Eigen::VectorXd& theta, const RingSpec& ring,
                        const InPlaneField& field, Eigen::VectorXd& grad);
Eigen::VectorXd ring_gradient_raw(const Eigen::VectorXd& theta, const RingSpec& ring,
                                  const InPlaneField& field);
Eigen::MatrixXd ring_hessian_raw(const Eigen::VectorXd& theta, const RingSpec& ring,
                                 const InPlaneField& field);

} // namespace detail
} // namespace ringtrap
