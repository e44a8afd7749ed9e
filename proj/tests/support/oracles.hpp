#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "ringtrap/types.hpp"

// Independent numerical oracles used by the tests. Everything here is kept
// deliberately dumb (finite differences, exhaustive grids, nested zoom) so it
// shares no code path with the library's analytic derivatives or optimizers.
namespace oracle {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// central finite-difference gradient
Eigen::VectorXd fd_gradient(const ScalarFn& f, const Eigen::VectorXd& x, double h);

// central finite-difference Jacobian of a vector function (FD Hessian when
// applied to a gradient)
Eigen::MatrixXd fd_jacobian(const VectorFn& g, const Eigen::VectorXd& x, double h);

// Nested full-grid zoom: evaluate f on a (2k+1)^D grid around the incumbent,
// shrink the halfwidth, repeat. Derivative-free and exhaustive within the
// shrinking box.
Eigen::VectorXd grid_refine(const ScalarFn& f, Eigen::VectorXd x0, double halfwidth, int levels,
                            int k = 10);

// Exhaustive-search equilibrium for small N: full grid over all angles for
// N = 2 (theta_0 included), theta_0 = 0 slice for N = 3 (the pinned minimum
// keeps an ion at the field-favored pole), then full-dimensional zoom.
struct BruteForceResult {
  Eigen::VectorXd angles;
  double energy;
};
BruteForceResult brute_force_equilibrium(const ringtrap::RingSpec& ring,
                                         const ringtrap::InPlaneField& field, double resolution);

// Constrained counterpart for N = 3: probe ion fixed, the two free ions
// grid-searched at `resolution` and refined.
BruteForceResult brute_force_constrained(const ringtrap::RingSpec& ring,
                                         const ringtrap::InPlaneField& field, double probe_angle,
                                         double resolution);

// ordered random crystal states with a minimum separation, for derivative checks
Eigen::VectorXd random_ordered_angles(int n, std::uint64_t seed, double min_gap = 0.05);

} // namespace oracle
