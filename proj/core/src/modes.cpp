#include "ringtrap/modes.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace ringtrap {

ModeSpectrum tangential_modes(const CrystalState1D& state, const RingSpec& ring,
                              const InPlaneField& field, const ModeOptions& opts) {
  ring.validate();
  field.validate();
  state.validate();

  const double r0 = ring.radius();
  const double m = ring.ion_mass;

  ModeSpectrum spec;
  spec.off_equilibrium_warning =
      detail::ring_gradient_raw(state.angles, ring, field).norm() > opts.equilibrium_grad_tol;

  // theta Hessian -> arc-length coordinates: H_s = H_theta / r0^2
  Eigen::MatrixXd h = detail::ring_hessian_raw(state.angles, ring, field) / (r0 * r0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::VectorXd& lam = es.eigenvalues(); // ascending

  const int n = state.size();
  spec.frequencies.resize(n);
  spec.vectors = es.eigenvectors();
  spec.min_eigenvalue = lam[0] / m;

  const double w0 = opts.zero_mode_frequency;
  for (int k = 0; k < n; ++k) {
    double lm = lam[k] / m;               // (rad/s)^2, signed
    double w = std::sqrt(std::abs(lm));
    if (w < w0) {
      spec.frequencies[k] = 0.0;
      ++spec.zero_mode_count;
    } else {
      spec.frequencies[k] = w;
      if (lm < 0) spec.unstable = true;   // saddle, e.g. a mid-barrier constrained state
    }
  }
  return spec;
}

double lowest_tangential_frequency(const RingSpec& ring, const InPlaneField& field,
                                   const EquilibriumOptions& eq_opts, const ModeOptions& opts) {
  if (field.magnitude() <= 0)
    throw std::invalid_argument("lowest_tangential_frequency: requires |E| > 0 (0 by symmetry otherwise)");
  EquilibriumResult eq = find_equilibrium(ring, field, eq_opts);
  if (!eq.converged)
    throw std::runtime_error("lowest_tangential_frequency: equilibrium search did not converge");
  ModeSpectrum spec = tangential_modes(eq.state, ring, field, opts);
  for (int k = 0; k < spec.frequencies.size(); ++k)
    if (spec.frequencies[k] > 0.0) return spec.frequencies[k] / two_pi;
  return 0.0;
}

} // namespace ringtrap
