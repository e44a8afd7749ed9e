#pragma once

#include <Eigen/Core>

#include "ringtrap/equilibrium.hpp"
#include "ringtrap/types.hpp"

namespace ringtrap {

struct ModeOptions {
  double zero_mode_frequency = two_pi * 10.0; // rad/s; |omega| below this counts as zero
  double equilibrium_grad_tol = 1e-26;        // J/rad; warn if the state is off-equilibrium
};

// Tangential normal-mode spectrum from the quadratic expansion of the ring
// potential, in mass-weighted arc-length coordinates s = (d/2) theta:
// omega_k = sqrt(lambda_k / m) for eigenvalues lambda_k of the arc Hessian.
struct ModeSpectrum {
  Eigen::VectorXd frequencies;   // rad/s, ascending; zero modes reported as 0
  Eigen::MatrixXd vectors;       // orthonormal columns, one per mode
  int zero_mode_count = 0;
  bool unstable = false;         // some eigenvalue below -(zero threshold)^2 * m
  double min_eigenvalue = 0;     // smallest arc-Hessian eigenvalue / m, (rad/s)^2 signed
  bool off_equilibrium_warning = false;
};

ModeSpectrum tangential_modes(const CrystalState1D& state, const RingSpec& ring,
                              const InPlaneField& field, const ModeOptions& opts = {});

// Lowest nonzero collective frequency (Hz) of the field-pinned equilibrium:
// the mode a slow sinusoidal drive on a compensation electrode excites first.
// Composes find_equilibrium and tangential_modes; requires |E| > 0.
double lowest_tangential_frequency(const RingSpec& ring, const InPlaneField& field,
                                   const EquilibriumOptions& eq_opts = {},
                                   const ModeOptions& opts = {});

} // namespace ringtrap
