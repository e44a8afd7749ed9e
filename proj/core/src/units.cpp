#include "ringtrap/units.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "ringtrap/constants.hpp"

namespace ringtrap {

namespace {

struct Suffix {
  const char* text;
  double factor;
};

// longer suffixes first where one is a prefix of another
const Suffix* table(Dimension dim, int& count) {
  static const Suffix length[] = {{"um", 1e-6}, {"mm", 1e-3}, {"nm", 1e-9}, {"m", 1.0}};
  static const Suffix field[] = {{"V_per_m", 1.0}};
  static const Suffix temperature[] = {{"uK", 1e-6}, {"mK", 1e-3}, {"K", 1.0}};
  static const Suffix frequency[] = {{"kHz", 1e3}, {"MHz", 1e6}, {"Hz", 1.0}};
  static const Suffix mass[] = {{"kg", 1.0}, {"u", atomic_mass_unit}};
  static const Suffix voltage[] = {{"V", 1.0}};
  static const Suffix rate[] = {{"per_s", 1.0}};
  static const Suffix time[] = {{"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
  static const Suffix angle[] = {{"deg", pi / 180.0}, {"rad", 1.0}};
  switch (dim) {
    case Dimension::Length: count = 4; return length;
    case Dimension::Field: count = 1; return field;
    case Dimension::Temperature: count = 3; return temperature;
    case Dimension::Frequency: count = 3; return frequency;
    case Dimension::Mass: count = 2; return mass;
    case Dimension::Voltage: count = 1; return voltage;
    case Dimension::Rate: count = 1; return rate;
    case Dimension::Time: count = 4; return time;
    case Dimension::Angle: count = 2; return angle;
  }
  count = 0;
  return nullptr;
}

std::string join_suffixes(Dimension dim) {
  int n = 0;
  const Suffix* s = table(dim, n);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += "|";
    out += s[i].text;
  }
  return out;
}

} // namespace

std::string dimension_name(Dimension dim) {
  switch (dim) {
    case Dimension::Length: return "length";
    case Dimension::Field: return "electric field";
    case Dimension::Temperature: return "temperature";
    case Dimension::Frequency: return "frequency";
    case Dimension::Mass: return "mass";
    case Dimension::Voltage: return "voltage";
    case Dimension::Rate: return "rate";
    case Dimension::Time: return "time";
    case Dimension::Angle: return "angle";
  }
  return "?";
}

std::vector<std::string> accepted_suffixes(Dimension dim) {
  int n = 0;
  const Suffix* s = table(dim, n);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.emplace_back(s[i].text);
  return out;
}

double parse_quantity(std::string_view text, Dimension dim) {
  auto fail = [&](const std::string& why) -> double {
    throw std::invalid_argument("cannot parse " + dimension_name(dim) + " '" + std::string(text) +
                                "': " + why + " (accepted suffixes: " + join_suffixes(dim) + ")");
  };

  size_t a = text.find_first_not_of(" \t");
  size_t b = text.find_last_not_of(" \t");
  if (a == std::string_view::npos) return fail("empty value");
  std::string_view body = text.substr(a, b - a + 1);

  double value = 0;
  const char* begin = body.data();
  const char* end = body.data() + body.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr == begin) return fail("no number");

  std::string_view rest(ptr, static_cast<size_t>(end - ptr));
  size_t ws = rest.find_first_not_of(" \t");
  if (ws == std::string_view::npos) return fail("missing unit suffix, bare numbers are ambiguous");
  rest = rest.substr(ws);

  int n = 0;
  const Suffix* s = table(dim, n);
  for (int i = 0; i < n; ++i) {
    if (rest == s[i].text) {
      if (!std::isfinite(value * s[i].factor)) return fail("value out of range");
      return value * s[i].factor;
    }
  }
  return fail("unknown unit suffix '" + std::string(rest) + "'");
}

} // namespace ringtrap
