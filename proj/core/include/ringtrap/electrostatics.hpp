#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "ringtrap/constants.hpp"

namespace ringtrap {

// Gapless-plane electrostatics for the planar electrode layout: everything in
// the z = 0 plane outside the listed electrodes is grounded, fields are
// evaluated for z > 0 only.

struct Vec3 {
  double x = 0, y = 0, z = 0;
  double norm() const;
};

enum class ElectrodeShape { Disc, Annulus, Sector };
enum class VoltageRole { Rf, Dc };

struct PlanarElectrode {
  std::string name;
  ElectrodeShape shape = ElectrodeShape::Disc;
  double r_inner = 0;           // m (0 for a disc)
  double r_outer = 0;           // m
  double phi_start = 0;         // rad, in [0, 2pi)
  double phi_end = two_pi;      // rad; full turn for disc/annulus
  VoltageRole role = VoltageRole::Dc;
  double dc_voltage = 0;        // V (dc role only)

  void validate() const;
};

struct TrapGeometry {
  std::vector<PlanarElectrode> electrodes;

  void validate() const; // non-degenerate shapes, pairwise non-overlapping

  // Gapless-plane model of the published trap: grounded center disc, rf
  // annuli [64.35, 132.5] and [612.5, 1112.5] um (inter-electrode gaps split
  // midway), dc annulus between them, eight 45-degree compensation sectors
  // spanning [1125, 3000] um. The inner rf edge is not quoted for the real
  // device; 64.35 um places the modeled null ring at the published 45 um
  // radius.
  static TrapGeometry paper_default();

  // key=value/CSV hybrid, one electrode per line; radii in um, angles in deg
  static TrapGeometry load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  // the eight compensation sectors, sorted by start azimuth
  std::vector<const PlanarElectrode*> compensation_sectors() const;
};

struct TrapDrive {
  double rf_amplitude = 220.0;             // V
  double rf_frequency = two_pi * 5.81e6;   // rad/s

  void validate() const;
};

struct QuadratureOptions {
  double abs_tol = 1e-6;   // of the unit potential (scaled by 1/z for fields)
  int max_cells = 40000;
};

// Unit-voltage disc of radius a in a grounded plane (oblate-spheroidal
// closed form), dimensionless. z > 0 required.
double disc_potential(double r, double z, double a);

// analytic -d(phi)/d(r,z) of the unit disc, 1/m
void disc_field(double r, double z, double a, double& er, double& ez);

// Dimensionless potential of one unit-voltage electrode patch via adaptive
// polar quadrature of the gapless-plane kernel phi = (z/2pi) int dA' / |x-x'|^3.
// Throws std::runtime_error if the error estimate cannot reach abs_tol.
double patch_potential(const Vec3& point, const PlanarElectrode& electrode,
                       const QuadratureOptions& opts = {});

// field of a unit-voltage patch (V/m per volt), quadrature of the kernel gradient
Vec3 patch_field(const Vec3& point, const PlanarElectrode& electrode,
                 const QuadratureOptions& opts = {});

// rf electric-field amplitude vector (V/m) of the rf electrode set at rf
// amplitude; discs/annuli use the analytic closed form, sectors quadrature.
Vec3 rf_field(const Vec3& point, const TrapGeometry& geometry, const TrapDrive& drive,
              const QuadratureOptions& opts = {});

// time-averaged pseudopotential Psi = e^2 |E_rf|^2 / (4 m Omega^2), J
double pseudopotential(const Vec3& point, const TrapGeometry& geometry, const TrapDrive& drive,
                       double mass, const QuadratureOptions& opts = {});

struct RingMinimum {
  double ring_radius = 0;   // m
  double height = 0;        // m
  double omega_r = 0;       // rad/s, in-plane radial
  double omega_z = 0;       // rad/s, vertical
  double residual_rf_field = 0; // V/m at the minimum
  bool found = false;
};

// Minimize Psi over (r, z): ring radius, height, and the secular frequencies
// from the 2x2 curvature of Psi at the minimum.
RingMinimum find_ring_minimum(const TrapGeometry& geometry, const TrapDrive& drive, double mass,
                              const QuadratureOptions& opts = {});

// field components (V/m per volt) at the on-axis point (0, 0, z0) for unit
// voltage on each of the eight compensation sectors; columns ordered by
// sector start azimuth
Eigen::Matrix<double, 3, 8> compensation_response(const TrapGeometry& geometry, double z0,
                                                  const QuadratureOptions& opts = {});

struct CompensationSolution {
  Eigen::Matrix<double, 8, 1> voltages = Eigen::Matrix<double, 8, 1>::Zero();
  double residual_in_plane = 0; // V/m, via the response matrix
  int rank = 0;
  bool ok = false;
  std::string error;
};

// Minimum-norm least-squares voltages canceling the stray field at (0,0,z0).
CompensationSolution solve_compensation(const Vec3& stray_field, const TrapGeometry& geometry,
                                        double z0, const QuadratureOptions& opts = {});

} // namespace ringtrap
