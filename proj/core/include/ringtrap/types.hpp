#pragma once

#include <Eigen/Core>
#include <cmath>

#include "ringtrap/constants.hpp"

namespace ringtrap {

// The fixed stage for all crystal computations: ring diameter, ion mass, ion count.
struct RingSpec {
  double diameter = 90e-6;              // m
  double ion_mass = consts.mass_ca40;   // kg
  int ion_count = 10;

  double radius() const { return 0.5 * diameter; }
  void validate() const; // throws std::invalid_argument
};

// Homogeneous in-plane electric field (the dominant symmetry breaker).
struct InPlaneField {
  double ex = 0.0; // V/m
  double ey = 0.0; // V/m

  double magnitude() const { return std::hypot(ex, ey); }
  // angle of the field-favored pole in the theta-from-+y convention
  double pole_angle() const { return std::atan2(ex, ey); }
  void validate() const;
};

// Ion angular positions on the ring. Angles in [0, 2pi), strictly ordered
// cyclically (no coincident ions).
struct CrystalState1D {
  Eigen::VectorXd angles; // rad

  int size() const { return static_cast<int>(angles.size()); }
  // wrap all angles into [0, 2pi)
  CrystalState1D normalized() const;
  // smallest cyclic pairwise separation, rad (0 if fewer than 2 ions)
  double min_separation() const;
  void validate(double coincidence_epsilon = 1e-9) const;
};

// Planar (in-plane) crystal: polar coordinates plus the harmonic radial
// confinement that stands in for the trap's radial pseudopotential.
struct CrystalState2D {
  Eigen::VectorXd radii;        // m
  Eigen::VectorXd angles;       // rad
  double radial_frequency = two_pi * 390e3; // rad/s
  double equilibrium_radius = 45e-6;        // m, = d/2

  int size() const { return static_cast<int>(angles.size()); }
  void validate(double coincidence_epsilon = 1e-12) const; // epsilon in metres
};

// wrap a single angle into [0, 2pi)
inline double wrap_angle(double a) {
  a = std::fmod(a, two_pi);
  return a < 0 ? a + two_pi : a;
}

// signed circular distance in (-pi, pi]
inline double circular_distance(double a, double b) {
  double d = std::remainder(a - b, two_pi);
  return d;
}

} // namespace ringtrap
