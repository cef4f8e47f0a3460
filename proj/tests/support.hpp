#pragma once

// Shared fixtures: the membrane/cavity scenario used across the unit tests and
// a relative-tolerance check that works for numbers of any magnitude.

#include "optocool/constants.hpp"
#include "optocool/params.hpp"

#include <cmath>
#include <string>

namespace test {

inline double rel_err(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

inline std::string data_file(const std::string& name) { return std::string(OPTOCOOL_DATA_DIR) + "/" + name; }

inline optocool::MechanicalMode membrane() {
  return {optocool::angular(1.3e6), optocool::angular(9e-3), 200e-15, 300.0};
}

inline optocool::OpticalCavity cavity() {
  optocool::OpticalCavity c;
  c.kappa = optocool::angular(340e6);
  c.length = 95e-6;
  c.wavelength = 1542e-9;
  c.eta_c = 0.9;
  return c;
}

} // namespace test

#define CHECK_REL(got, want, tol)                                                                  \
  do {                                                                                             \
    const double got_ = (got), want_ = (want);                                                     \
    INFO(#got " = " << got_ << ", expected " << want_ << " (rel tol " << (tol) << ")");            \
    CHECK(test::rel_err(got_, want_) <= (tol));                                                    \
  } while (0)
