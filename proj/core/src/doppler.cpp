#include "ringtrap/doppler.hpp"

#include <cmath>
#include <stdexcept>

#include "ringtrap/constants.hpp"

namespace ringtrap {

namespace {
constexpr double eight_ln2 = 8.0 * 0.69314718055994530942;

void check(double wavelength, double mass) {
  if (!(wavelength > 0)) throw std::invalid_argument("doppler: wavelength must be > 0");
  if (!(mass > 0)) throw std::invalid_argument("doppler: mass must be > 0");
}
} // namespace

double fwhm_from_temperature(double temperature, double wavelength, double mass) {
  check(wavelength, mass);
  if (!(temperature >= 0)) throw std::invalid_argument("doppler: temperature must be >= 0");
  return std::sqrt(eight_ln2 * consts.boltzmann * temperature / mass) / wavelength;
}

double doppler_temperature(double fwhm, double wavelength, double mass) {
  check(wavelength, mass);
  if (!(fwhm >= 0)) throw std::invalid_argument("doppler: fwhm must be >= 0");
  double v = fwhm * wavelength;
  return mass * v * v / (eight_ln2 * consts.boltzmann);
}

} // namespace ringtrap
