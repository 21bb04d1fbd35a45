#pragma once

#include <cstdio>
#include <string>

namespace rlop {

// Shortest round-trippable decimal for CSV output (17 significant digits).
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Hex-float form, parsed back bit-exactly by std::strtod.
inline std::string fmt_hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace rlop
