#pragma once

#include <numbers>

namespace optocool::constants {

// CODATA 2018, SI units.
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J/K
inline constexpr double gas_constant = 8.314462618; // J/(mol K)
inline constexpr double speed_of_light = 299792458.0; // m/s

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

} // namespace optocool::constants

namespace optocool {

/// Ordinary frequency (Hz) to angular frequency (rad/s).
constexpr double angular(double hz) { return constants::two_pi * hz; }
/// Angular frequency (rad/s) to ordinary frequency (Hz).
constexpr double hertz(double rad_per_s) { return rad_per_s / constants::two_pi; }

} // namespace optocool
