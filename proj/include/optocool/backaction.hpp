#pragma once

// Dynamical backaction of a detuned intracavity field on the mechanical mode:
// optical spring, optical damping, and the regressions used to extract the
// coupling from power series.

#include "optocool/params.hpp"

#include <span>

namespace optocool {

/// Optical spring shift g^2 [(D-W)/((k/2)^2+(D-W)^2) + (D+W)/((k/2)^2+(D+W)^2)], rad/s.
double optical_spring(double g, double detuning, double kappa, double omega_m);

/// Optical damping g^2 k [1/((k/2)^2+(D+W)^2) - 1/((k/2)^2+(D-W)^2)], rad/s. Positive for D < 0.
double optical_damping(double g, double detuning, double kappa, double omega_m);

struct BackactionResult {
  double delta_omega = 0.0; ///< summed spring shift, rad/s
  double gamma_opt = 0.0;   ///< summed optical damping, rad/s
  double gamma_total = 0.0; ///< gamma_m + gamma_opt
  bool stable = true;       ///< gamma_total > 0

  /// Throws InstabilityError when the mode is anti-damped.
  const BackactionResult& require_stable() const;
};

/// Combined backaction of several beams on one mode.
BackactionResult backaction(const MechanicalMode& mode, double kappa,
                            std::span<const OpticalBeam> beams);

struct SpringPoint {
  double power = 0.0;       ///< W
  double delta_omega = 0.0; ///< rad/s
  double std_error = 0.0;      ///< rad/s; 0 means unweighted
};

struct SpringFit {
  double slope = 0.0;        ///< g^2 per watt, (rad/s)^2 / W
  double slope_stderr = 0.0;
  double g0 = 0.0;           ///< rad/s, 0 when no photon-number chain was supplied
  double g0_stderr = 0.0;
  double residual_norm = 0.0;
};

/// Least-squares fit of spring shift versus power with g^2 = slope * P.
///
/// The photon-number chain converts slope into g0: g0^2 = slope / n_cav(1 W),
/// where n_cav is evaluated for `incoupling` watts reaching the cavity mode per
/// watt of measured power.
SpringFit fit_spring_vs_power(std::span<const SpringPoint> points, double detuning, double kappa,
                              double omega_m, const OpticalCavity& cavity,
                              double incoupling = 1.0);

struct DampingPoint {
  double g = 0.0;           ///< rad/s
  double gamma_total = 0.0; ///< rad/s
  double std_error = 0.0;      ///< rad/s; 0 means unweighted
};

struct DampingOffsetFit {
  double offset = 0.0; ///< rad/s
  double offset_stderr = 0.0;
  double residual_norm = 0.0;
};

/// Fits gamma_total = gamma_m + offset + optical_damping(g) with the offset the single free parameter.
DampingOffsetFit fit_damping_offset(std::span<const DampingPoint> points, double gamma_m,
                                    double detuning, double kappa, double omega_m);

} // namespace optocool
