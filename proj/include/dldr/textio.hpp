#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace dldr {

// Doubles in machine-readable artifacts are printed with 17 significant
// digits so that reading them back reproduces the exact bit pattern.
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace dldr
