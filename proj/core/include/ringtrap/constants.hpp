#pragma once

namespace ringtrap {

// Physical constants, CODATA 2018. All strictly positive, SI.
struct PhysConsts {
  double elementary_charge = 1.602176634e-19;     // C (exact)
  double vacuum_permittivity = 8.8541878128e-12;  // F/m
  double boltzmann = 1.380649e-23;                // J/K (exact)
  double mass_ca40 = 39.9626 * 1.66053906660e-27; // kg, 40Ca+ at 39.9626 u
};

inline constexpr PhysConsts consts{};

inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg

// 1/(4 pi eps0)
inline constexpr double coulomb_constant =
    1.0 / (4.0 * 3.14159265358979323846 * 8.8541878128e-12);

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// energy <-> temperature helpers (the experiment quotes barriers in mK)
inline double joules_to_millikelvin(double e) { return e / consts.boltzmann * 1e3; }
inline double millikelvin_to_joules(double t) { return t * 1e-3 * consts.boltzmann; }

} // namespace ringtrap
