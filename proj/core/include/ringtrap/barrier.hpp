#pragma once

#include <string>

#include "ringtrap/equilibrium.hpp"
#include "ringtrap/types.hpp"

namespace ringtrap {

struct BarrierOptions {
  int grid_points = 201;               // probe-angle grid between the two end slots
  bool planar_relaxation = false;      // relax radii too (1D ring constraint otherwise)
  double radial_frequency = two_pi * 390e3; // rad/s, used when planar_relaxation
  EquilibriumOptions equilibrium{};
};

// Energy of the crystal with one probe ion held at a sequence of angles while
// the remaining ions relax: the scan advances the crystal by one lattice site
// (configuration A -> B -> C), and the profile's max - min is the rotational
// energy barrier.
struct BarrierProfile {
  Eigen::VectorXd probe_angles;   // rad, includes the quadratic-fit refinement near the max
  Eigen::VectorXd energies;       // J, constrained minima
  Eigen::VectorXd reduced_gradients; // J/rad, residual gradient over the free ions
  double barrier = 0;             // J, max - min over the scanned branch
  double barrier_mK = 0;          // barrier / kB in mK
  double min_angle_a = 0;         // locations of the two minima and the maximum
  double min_angle_c = 0;
  double max_angle = 0;
  bool complete = true;
  int failed_index = -1;          // grid index at which continuation failed, if any
};

BarrierProfile barrier_profile(const RingSpec& ring, const InPlaneField& field,
                               const BarrierOptions& opts = {});

struct BarrierValue {
  double joules = 0;
  double millikelvin = 0;
};

// Convenience wrapper: full profile at default resolution, barrier refined by
// local quadratic interpolation around the maximum.
BarrierValue rotational_barrier(const RingSpec& ring, const InPlaneField& field,
                                const BarrierOptions& opts = {});

struct ThresholdResult {
  double field = 0;                 // V/m, where V_B = kB T
  double barrier_at_threshold = 0;  // J
  bool ok = false;
  std::string error;
};

// Monotone bisection of rotational_barrier on the field magnitude (field
// applied along -y); tolerance 0.01 V/m. Fails if the sampled barriers are
// not monotone in |E|, which would contradict the model.
ThresholdResult delocalization_threshold_field(const RingSpec& ring, double temperature,
                                               const BarrierOptions& opts = {});

} // namespace ringtrap
