#pragma once

// Closed-form occupancy limits for sideband and feedback cooling, the
// imprecision-noise budget, and conversions between spectral densities and
// quanta.

#include "optocool/params.hpp"

namespace optocool {

/// An analytic occupancy. Formulas are evaluated as written; `valid` is false
/// when the result is negative, i.e. the inputs sit outside the formula's
/// region of validity. Clamping is left to the reporting layer.
struct Occupancy {
  double n_bar = 0.0;
  bool valid = true;
};

/// Sideband-cooled occupancy (n_th gamma_m (1 + C_q) + n_min_c gamma_c) / gamma_tot.
/// Throws InstabilityError when gamma_tot <= 0.
double sideband_occupancy(double n_th, double gamma_m, double c_q_probe, double n_min_c,
                          double gamma_c, double gamma_tot);

/// Quantum-backaction floor of sideband cooling ((W + D)^2 + (k/2)^2) / (-4 D W).
/// Throws DomainError for D >= 0.
double min_sideband_occupancy(double detuning, double kappa, double omega_m);

struct OptimalDetuning {
  double detuning = 0.0; ///< rad/s
  double n_min = 0.0;
};

/// Analytic minimiser D* = -sqrt(W^2 + k^2/4).
OptimalDetuning optimal_detuning(double kappa, double omega_m);

/// Bracketed numerical minimisation of min_sideband_occupancy over D < 0.
OptimalDetuning optimal_detuning_numeric(double kappa, double omega_m, double rel_tol = 1e-13);

/// sqrt(S_FF S_imp / (4 hbar^2)) - 1/2 at the optimal cold-damping gain.
Occupancy feedback_min_occupancy_basic(double s_ff_tot, double s_xx_imp);

/// S_imp,cl n_th gamma_m / (2 x_zpf^2): classical imprecision in units of the quantum-limited term.
double classical_imprecision_term(double s_xx_imp_cl, double n_th, double gamma_m, double x_zpf);

/// sqrt((1 + C_q)(1/(4 eta C_q) + classical term)) - 1/2.
Occupancy feedback_min_occupancy_full(double c_q, double eta_det, double s_xx_imp_cl, double n_th,
                                      double gamma_m, double x_zpf);

struct ImprecisionInputs {
  double c_q = 0.0;
  double eta_det = 0.0;
  double x_zpf = 0.0;         ///< m
  double n_th = 0.0;
  double gamma_m = 0.0;       ///< rad/s
  double g0 = 0.0;            ///< rad/s
  double s_omega_omega = 0.0; ///< laser frequency noise, (rad/s)^2/Hz
  double s_xx_mirror = 0.0;   ///< mirror substrate noise, m^2/Hz
};

struct ImprecisionBudget {
  double s_xx_quantum = 0.0;    ///< m^2/Hz
  double s_xx_laser_freq = 0.0; ///< m^2/Hz
  double s_xx_mirror = 0.0;     ///< m^2/Hz
  double s_omega_omega = 0.0;   ///< (rad/s)^2/Hz
  double freq_pull = 0.0;       ///< d omega_c / dx = g0 / x_zpf, rad/s per m
  double laser_figure = 0.0;    ///< S_ww n_th gamma_m / (2 g0^2)
  double mirror_figure = 0.0;   ///< S_mirror n_th gamma_m / (2 x_zpf^2)

  double total() const { return s_xx_quantum + s_xx_laser_freq + s_xx_mirror; }
};

ImprecisionBudget imprecision_budget(const ImprecisionInputs& in);

struct ForceNoise {
  double s_ff_thermal = 0.0;   ///< N^2/Hz
  double s_ff_radiation = 0.0; ///< N^2/Hz

  double total() const { return s_ff_thermal + s_ff_radiation; }
};

/// Thermal force noise plus quantum-limited radiation pressure C_q S_FF^th.
ForceNoise force_noise(const MechanicalMode& mode, double c_q);

/// Peak displacement PSD of the ground state, 4 x_zpf^2 / gamma_m, m^2/Hz.
double zero_point_peak_psd(const MechanicalMode& mode);

/// n_imp = S_imp / (2 S_xzp).
double imprecision_to_quanta(double s_xx_imp, const MechanicalMode& mode);
double quanta_to_imprecision(double n_imp, const MechanicalMode& mode);

/// n_tot = S_FF S_xzp / (8 hbar^2).
double force_to_quanta(double s_ff, const MechanicalMode& mode);
double quanta_to_force(double n_tot, const MechanicalMode& mode);

} // namespace optocool
