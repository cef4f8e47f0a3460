#pragma once

#include <cstdio>
#include "optocool/error.hpp"

#include <cmath>
#include <string>

namespace optocool::detail {

inline std::string fmt_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void require_positive(const char* name, double v) {
  if (!(std::isfinite(v) && v > 0.0))
    throw DomainError(std::string(name) + " must be strictly positive and finite (got " +
                      fmt_value(v) + ")");
}

inline void require_non_negative(const char* name, double v) {
  if (!(std::isfinite(v) && v >= 0.0))
    throw DomainError(std::string(name) + " must be non-negative and finite (got " +
                      fmt_value(v) + ")");
}

inline void require_unit_interval(const char* name, double v) {
  if (!(std::isfinite(v) && v >= 0.0 && v <= 1.0))
    throw DomainError(std::string(name) + " must lie in [0, 1] (got " + fmt_value(v) + ")");
}

inline void require_finite(const char* name, double v) {
  if (!std::isfinite(v))
    throw DomainError(std::string(name) + " must be finite (got " + fmt_value(v) + ")");
}

} // namespace optocool::detail
