#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ringtrap/planar_model.hpp"
#include "ringtrap/types.hpp"

namespace ringtrap {

struct EquilibriumOptions {
  double tolerance = 1e-30;   // gradient-norm convergence, J/rad (1D); J/m via /r0 for planar
  int max_iterations = 4000;
  int multistart = 4;
  std::uint64_t seed = 1234;
};

struct EquilibriumResult {
  CrystalState1D state;       // angles sorted ascending in [0, 2pi); theta_0 = 0 when E = 0
  double energy = 0;          // J
  double gradient_norm = 0;   // J/rad
  bool converged = false;
};

// Minimize ring_energy over the ion angles. The cyclic order is preserved by
// optimizing in gap coordinates; for E = 0 the rotational gauge theta_0 = 0
// is imposed. Among multistarts the lowest-energy converged result wins,
// deterministically for a fixed seed.
EquilibriumResult find_equilibrium(const RingSpec& ring, const InPlaneField& field,
                                   const EquilibriumOptions& opts = {});

struct PlanarEquilibriumResult {
  CrystalState2D state;
  double energy = 0;
  double gradient_norm = 0;   // J/m over (r, s)
  bool converged = false;
  bool zigzag = false;
};

// Planar version with harmonic radial confinement at radial_frequency.
// The zigzag flag is set when max |r_i - r0| > 0.5% r0 and the sign of
// (r_i - r0) alternates along at least 3 consecutive ions.
PlanarEquilibriumResult find_equilibrium_planar(const RingSpec& ring, const InPlaneField& field,
                                                double radial_frequency,
                                                const EquilibriumOptions& opts = {});

struct ZigzagScan {
  std::optional<int> critical_n;             // smallest N whose pinned equilibrium is zigzag
  std::vector<std::pair<int, bool>> flags;   // (N, zigzag) for every scanned N
  std::optional<int> failed_at;              // N at which minimization failed, if any
};

// Scan N = 2..n_max with warm-started planar minimizations. Requires a
// pinning field (|E| > 0).
ZigzagScan zigzag_critical_number(const RingSpec& ring, const InPlaneField& field,
                                  double radial_frequency, int n_max,
                                  const EquilibriumOptions& opts = {});

} // namespace ringtrap
