#pragma once

// Closed-loop model of the feedback-cooled mode: susceptibilities, displacement
// and in-loop spectra, occupancy integration, the analytic cold-damping limit,
// and stability/gain scans.

#include "optocool/filter.hpp"
#include "optocool/params.hpp"
#include "optocool/spectrum.hpp"

#include <span>
#include <vector>

namespace optocool {

/// A mode under feedback. `mode` carries the backaction-shifted frequency and
/// total damping. The filter is dimensionless; it is converted into a
/// displacement-to-force response by loop_scale() = m_eff Omega_tot Gamma_tot,
/// so that a gain G with phase pi/2 at resonance matches cold damping with g_fb = G.
struct LoopModel {
  MechanicalMode mode;
  FeedbackFilter filter;
  double s_ff_tot = 0.0; ///< N^2/Hz
  double s_xx_imp = 0.0; ///< m^2/Hz

  void validate() const;
  double loop_scale() const { return mode.m_eff * mode.omega_m * mode.gamma_m; }
};

/// Bare susceptibility 1 / (m (W_tot^2 - W^2 - i G_tot W)), m/N.
cplx mechanical_susceptibility(const MechanicalMode& mode, double omega);

/// Feedback response in N/m.
cplx loop_response(const LoopModel& model, double omega);

/// chi / (1 - chi h).
cplx closed_loop_susceptibility(const LoopModel& model, double omega);

/// Pointwise S_xx = |chi_fb|^2 (S_FF + |h|^2 S_imp).
double displacement_psd_at(const LoopModel& model, double omega);

/// Pointwise S_yy = |chi_fb|^2 (S_FF + |chi|^-2 S_imp).
double inloop_psd_at(const LoopModel& model, double omega);

/// Minimum number of grid points per total linewidth accepted by the spectrum builders.
inline constexpr double min_points_per_linewidth = 20.0;

/// Displacement spectrum on a grid in Hz. Throws InputError when the grid
/// resolves the total linewidth with fewer than min_points_per_linewidth points.
Spectrum closed_loop_displacement_psd(const LoopModel& model, const FrequencyGrid& grid);
Spectrum inloop_psd(const LoopModel& model, const FrequencyGrid& grid);

/// int S_xx / (2 x_zpf^2) df - 1/2 using integrate_psd. Requires m2/Hz units.
double occupancy_from_psd(const Spectrum& spectrum, double x_zpf);

/// Analytic occupancy for an ideal differentiator h = i m Gamma g W (cold damping),
/// with mode = (Omega, Gamma, m_eff).
double cold_damping_occupancy(double s_ff_tot, double g_fb, const MechanicalMode& mode,
                              double s_xx_imp);

/// Closed-form integrals over W in (0, inf) of |chi_fb|^2 and |chi_fb|^2 W^2
/// for the ideal differentiator.
struct ColdDampingIntegrals {
  double plain = 0.0;    ///< pi / (2 m^2 W^2 G (1 + g))
  double weighted = 0.0; ///< pi / (2 m^2 G (1 + g))
};
ColdDampingIntegrals cold_damping_integrals(const MechanicalMode& mode, double g_fb);

/// g* = sqrt(S_FF / S_imp) / (m W G).
double optimal_gain(const MechanicalMode& mode, double s_ff_tot, double s_xx_imp);

/// Another mode that the loop also drives, such as a mode outside the bandgap.
struct SpuriousMode {
  double omega = 0.0;    ///< rad/s
  double gamma = 0.0;    ///< rad/s
  double m_eff = 0.0;    ///< kg
  double coupling = 1.0; ///< relative detection x actuation overlap; negative when out of phase

  bool operator==(const SpuriousMode&) const = default;
};

struct StabilityPoint {
  double gain = 0.0;
  bool stable = true;
  double min_damping = 0.0; ///< smallest effective damping over all modeled modes, rad/s
  int encirclements = 0;    ///< net Nyquist encirclements of the origin by 1 - P h
};

/// Number of closed-loop poles in the unstable half-plane, from the winding of
/// 1 - P(W) h(W) along the real frequency axis, where P sums the main mode and
/// the spurious modes weighted by their coupling.
int nyquist_encirclements(const LoopModel& model, std::span<const SpuriousMode> spurious = {});

/// A gain is unstable when any mode's effective damping
/// Gamma_k + coupling Im h(W_k) / (m_k W_k) is not positive, or when the
/// Nyquist test finds an unstable closed-loop pole away from the modes.
std::vector<StabilityPoint> loop_stability_scan(const LoopModel& model, std::span<const double> gains,
                                                std::span<const SpuriousMode> spurious = {});

struct GainPoint {
  double gain = 0.0;
  double n_bar = 0.0;
  bool stable = true;
};

/// Integrated occupancy of the displacement spectrum for each gain. The phase
/// offset stays as configured.
std::vector<GainPoint> gain_sweep(const LoopModel& model, std::span<const double> gains,
                                  const FrequencyGrid& grid,
                                  std::span<const SpuriousMode> spurious = {});

/// Log-spaced gains from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

} // namespace optocool
