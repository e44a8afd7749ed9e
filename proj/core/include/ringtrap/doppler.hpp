#pragma once

namespace ringtrap {

// Gaussian Doppler broadening of an optical transition:
// FWHM = sqrt(8 ln2 kB T / m) / lambda. Inverse of fwhm_from_temperature.
double doppler_temperature(double fwhm, double wavelength, double mass);   // Hz, m, kg -> K
double fwhm_from_temperature(double temperature, double wavelength, double mass); // K, m, kg -> Hz

} // namespace ringtrap
