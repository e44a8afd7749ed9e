#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ringtrap/barrier.hpp"
#include "ringtrap/types.hpp"

namespace ringtrap {

// Underdamped Langevin dynamics of the ring crystal in arc-length
// coordinates s_i = (d/2) theta_i: Doppler cooling modeled as linear
// friction gamma plus white noise at temperature T; BAOAB splitting.
struct LangevinConfig {
  double temperature = 3e-3;   // K
  double friction = 1e4;       // 1/s
  double timestep = 1e-7;      // s; must satisfy dt * omega_max < 0.1
  long long steps = 1000000;   // measured steps after burn-in
  long long burn_in = 100000;
  std::uint64_t seed = 1;
  std::optional<CrystalState1D> initial; // defaults to the field equilibrium
  long long sample_stride = 100;         // stride for the recorded series
};

struct TrajectorySummary {
  double kinetic_temperature = 0;   // K, equipartition estimate per tangential DOF
  double collective_mean = 0;       // rad, of Theta(t) - Theta(0) post burn-in
  double collective_variance = 0;   // rad^2
  double winding = 0;               // rad, net Theta(end) - Theta(start)
  double max_excursion = 0;         // rad, max |Theta(t) - Theta(start)|
  long long hop_count = 0;
  bool delocalized = false;         // max excursion beyond one full turn
  double energy_mean = 0;           // J, total energy post burn-in
  double energy_variance = 0;       // J^2
  bool aborted = false;             // timestep instability detected
  std::string abort_reason;
  // collective angle recorded every sample_stride steps (measurement phase)
  std::vector<double> collective_series;
  double series_dt = 0;             // s between recorded samples
};

// Optional sink for streaming the full trajectory (CSV writer lives in the CLI).
using TrajectorySink =
    std::function<void(double t, const Eigen::VectorXd& theta, double collective)>;

TrajectorySummary simulate(const RingSpec& ring, const InPlaneField& field,
                           const LangevinConfig& cfg, const TrajectorySink& sink = nullptr);

struct HopStats {
  long long count = 0;
  double rate = 0; // 1/s
};

// Count well-to-well transitions of the collective angle: a hop is a crossing
// past the barrier-maximum location followed by relaxation into the next well.
HopStats hop_statistics(const std::vector<double>& collective_series, double series_dt,
                        const BarrierProfile& profile, int ion_count);

struct DelocalizationScan {
  std::vector<double> fields;          // V/m, grid as given
  std::vector<double> delocalized_fraction;
  std::vector<TrajectorySummary> runs; // row-major: field index * n_seeds + seed index
  double threshold_field = 0;          // V/m, 50% crossing (0 if never delocalized)
  bool saturated = false;              // delocalized at every grid field
};

// Run an ensemble of seeds per field magnitude (field applied along -y);
// threshold is where the delocalized fraction crosses 50%.
DelocalizationScan delocalization_scan(const RingSpec& ring, double temperature,
                                       const std::vector<double>& field_magnitudes,
                                       const LangevinConfig& base_cfg, int n_seeds,
                                       int max_threads = 0);

} // namespace ringtrap
