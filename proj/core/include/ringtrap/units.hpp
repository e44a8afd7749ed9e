#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ringtrap {

// Unit-suffixed quantity parsing for configs and CLI flags. Every physical
// quantity must carry an explicit unit suffix ("90um", "2V_per_m", "3mK");
// bare numbers are rejected as ambiguous.
enum class Dimension {
  Length,       // um, mm, nm, m
  Field,        // V_per_m
  Temperature,  // uK, mK, K
  Frequency,    // Hz, kHz, MHz
  Mass,         // u, kg
  Voltage,      // V
  Rate,         // per_s
  Time,         // ns, us, ms, s
  Angle,        // deg, rad
};

// parse "<number><suffix>" or "<number> <suffix>" into SI; throws
// std::invalid_argument naming the accepted suffixes on any other input
double parse_quantity(std::string_view text, Dimension dim);

std::string dimension_name(Dimension dim);
std::vector<std::string> accepted_suffixes(Dimension dim);

} // namespace ringtrap
