#include "optocool/limits.hpp"

#include "checks.hpp"
#include "optocool/constants.hpp"
#include "optocool/error.hpp"

#include <cmath>

namespace optocool {

using constants::hbar;

namespace {

Occupancy shifted_root(double radicand) {
  const double n = std::sqrt(radicand) - 0.5;
  return {n, n >= 0.0};
}

} // namespace

double sideband_occupancy(double n_th, double gamma_m, double c_q_probe, double n_min_c,
                          double gamma_c, double gamma_tot) {
  if (!(gamma_tot > 0.0))
    throw InstabilityError("total damping " + detail::fmt_value(gamma_tot) +
                           " rad/s is not positive; no steady-state occupancy exists");
  return (n_th * gamma_m * (1.0 + c_q_probe) + n_min_c * gamma_c) / gamma_tot;
}

double min_sideband_occupancy(double detuning, double kappa, double omega_m) {
  if (!(detuning < 0.0))
    throw DomainError("sideband cooling requires red detuning, got " + detail::fmt_value(detuning) +
                      " rad/s");
  detail::require_positive("omega_m", omega_m);
  const double s = omega_m + detuning;
  const double hk = 0.5 * kappa;
  return (s * s + hk * hk) / (-4.0 * detuning * omega_m);
}

OptimalDetuning optimal_detuning(double kappa, double omega_m) {
  detail::require_positive("kappa", kappa);
  detail::require_positive("omega_m", omega_m);
  const double d = -std::hypot(omega_m, 0.5 * kappa);
  return {d, min_sideband_occupancy(d, kappa, omega_m)};
}

OptimalDetuning optimal_detuning_numeric(double kappa, double omega_m, double rel_tol) {
  detail::require_positive("kappa", kappa);
  detail::require_positive("omega_m", omega_m);
  // Bisection on the sign of dn/dD inside a bracket that always holds the
  // minimum. The objective is too flat near its minimum for a value-only
  // search to locate it beyond sqrt(machine epsilon).
  const double hk = 0.5 * kappa;
  auto slope = [&](double d) { return (omega_m * omega_m + hk * hk - d * d) / (4.0 * omega_m * d * d); };
  double a = -(omega_m + kappa); // slope < 0
  double b = -0.5 * omega_m;     // slope > 0
  for (int i = 0; i < 200 && std::abs(b - a) > rel_tol * std::abs(0.5 * (a + b)); ++i) {
    const double m = 0.5 * (a + b);
    if (slope(m) < 0.0)
      a = m;
    else
      b = m;
  }
  const double x = 0.5 * (a + b);
  return {x, min_sideband_occupancy(x, kappa, omega_m)};
}

Occupancy feedback_min_occupancy_basic(double s_ff_tot, double s_xx_imp) {
  detail::require_non_negative("s_ff_tot", s_ff_tot);
  detail::require_non_negative("s_xx_imp", s_xx_imp);
  return shifted_root(s_ff_tot * s_xx_imp / (4.0 * hbar * hbar));
}

double classical_imprecision_term(double s_xx_imp_cl, double n_th, double gamma_m, double x_zpf) {
  detail::require_non_negative("s_xx_imp_cl", s_xx_imp_cl);
  detail::require_positive("x_zpf", x_zpf);
  return s_xx_imp_cl * n_th * gamma_m / (2.0 * x_zpf * x_zpf);
}

Occupancy feedback_min_occupancy_full(double c_q, double eta_det, double s_xx_imp_cl, double n_th,
                                      double gamma_m, double x_zpf) {
  detail::require_positive("c_q", c_q);
  detail::require_positive("eta_det", eta_det);
  if (eta_det > 1.0) throw DomainError("eta_det must not exceed 1, got " + detail::fmt_value(eta_det));
  const double classical = classical_imprecision_term(s_xx_imp_cl, n_th, gamma_m, x_zpf);
  return shifted_root((1.0 + c_q) * (1.0 / (4.0 * eta_det * c_q) + classical));
}

ImprecisionBudget imprecision_budget(const ImprecisionInputs& in) {
  detail::require_positive("c_q", in.c_q);
  detail::require_positive("eta_det", in.eta_det);
  detail::require_positive("x_zpf", in.x_zpf);
  detail::require_positive("g0", in.g0);
  detail::require_non_negative("s_omega_omega", in.s_omega_omega);
  detail::require_non_negative("s_xx_mirror", in.s_xx_mirror);
  const double gamma = in.n_th * in.gamma_m;
  detail::require_positive("n_th * gamma_m", gamma);

  ImprecisionBudget b;
  b.s_xx_quantum = in.x_zpf * in.x_zpf / (2.0 * in.eta_det * in.c_q * gamma);
  b.freq_pull = in.g0 / in.x_zpf;
  b.s_omega_omega = in.s_omega_omega;
  b.s_xx_laser_freq = in.s_omega_omega / (b.freq_pull * b.freq_pull);
  b.s_xx_mirror = in.s_xx_mirror;
  b.laser_figure = in.s_omega_omega * gamma / (2.0 * in.g0 * in.g0);
  b.mirror_figure = classical_imprecision_term(in.s_xx_mirror, in.n_th, in.gamma_m, in.x_zpf);
  return b;
}

ForceNoise force_noise(const MechanicalMode& mode, double c_q) {
  detail::require_non_negative("c_q", c_q);
  const double th = thermal_force_psd(mode);
  return {th, c_q * th};
}

double zero_point_peak_psd(const MechanicalMode& mode) {
  const double x = zero_point_amplitude(mode);
  return 4.0 * x * x / mode.gamma_m;
}

double imprecision_to_quanta(double s_xx_imp, const MechanicalMode& mode) {
  return s_xx_imp / (2.0 * zero_point_peak_psd(mode));
}

double quanta_to_imprecision(double n_imp, const MechanicalMode& mode) {
  return 2.0 * n_imp * zero_point_peak_psd(mode);
}

double force_to_quanta(double s_ff, const MechanicalMode& mode) {
  return s_ff * zero_point_peak_psd(mode) / (8.0 * hbar * hbar);
}

double quanta_to_force(double n_tot, const MechanicalMode& mode) {
  return n_tot * 8.0 * hbar * hbar / zero_point_peak_psd(mode);
}

} // namespace optocool
