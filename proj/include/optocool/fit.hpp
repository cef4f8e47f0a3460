#pragma once

// Regression and calibration procedures on measured (or synthetic) spectra:
// Lorentzian fits, anchor calibration, closed-loop spectrum fits, heating and
// gas-damping tests, cavity reflection lineshape, and frequency-noise calibration.

#include "optocool/error.hpp"
#include "optocool/filter.hpp"
#include "optocool/params.hpp"
#include "optocool/spectrum.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace optocool {

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> std_error; ///< empty when the normal matrix is singular
  double residual_norm = 0.0; ///< in the units the fit minimises (relative for spectra)
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> flags; ///< e.g. "gain_at_bound"

  double value(std::string_view name) const;
  double error(std::string_view name) const;
  bool has_std_error() const { return !std_error.empty(); }
  bool has_flag(std::string_view flag) const;
};

// ---------------------------------------------------------------- Lorentzian

/// floor + area (fwhm / 2pi) / ((f - center)^2 + (fwhm/2)^2), all in Hz.
struct Lorentzian {
  double center = 0.0;
  double fwhm = 0.0;
  double area = 0.0;
  double floor = 0.0;

  double operator()(double f) const;
};

/// Fits center, fwhm, area and floor (names "center_hz", "fwhm_hz", "area", "floor").
/// Throws RankDeficiencyError for a spectrum without a peak above its floor and
/// InputError when the span is narrower than five linewidths.
FitResult fit_lorentzian(const Spectrum& spectrum);

// ------------------------------------------------------- anchor calibration

struct CalibrationConstant {
  double k = 0.0;                ///< (m^2/Hz) per (V^2/Hz)
  double anchor_occupancy = 0.0; ///< occupancy the anchor was pinned to
  double floor = 0.0;            ///< subtracted background, V^2/Hz
};

/// K such that K (S_VV - floor) integrates to occupancy n_bar. The floor is
/// taken from a Lorentzian fit when not supplied. Throws CalibrationError
/// when the background-subtracted area is not positive.
CalibrationConstant calibrate_anchor(const Spectrum& spectrum_vv, double n_bar, double x_zpf,
                                     std::optional<double> floor = {});

/// K S_VV in m2/Hz; with subtract_floor, K (S_VV - floor).
Spectrum apply_calibration(const Spectrum& spectrum_vv, const CalibrationConstant& cal,
                           bool subtract_floor);

class CalibrationError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

// ------------------------------------------------------ closed-loop fitting

/// Quantities held fixed while fitting an in-loop spectrum.
struct ClosedLoopFixed {
  MechanicalMode mode;   ///< Omega_tot, Gamma_tot, m_eff
  FeedbackFilter filter; ///< shape: delay, centre, bandwidth, aux stages
  double s_ff_tot = 0.0; ///< N^2/Hz
  double s_xzp = 0.0;    ///< zero-point peak PSD that defines n_imp, m^2/Hz
};

struct ClosedLoopGuess {
  double gain = 1.0;
  double phase = 0.0;
  double n_imp = 1e-5;
  double gain_max = 1e12;
};

/// Fits gain, phase and n_imp of the in-loop spectrum with relative residuals.
/// Adds the flag "gain_at_bound" when the gain ends on a bound.
FitResult fit_closed_loop(const Spectrum& syy, const ClosedLoopFixed& fixed, const ClosedLoopGuess& guess);

struct LineFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double residual_norm = 0.0;
};

/// Least-squares line through the origin.
LineFit fit_zero_intercept(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------- heating

enum class HeatingModelKind { dba_only, dba_heating };

/// (A/A0)^-1 = (a_dba P + gamma0) / ((1 + a_eh P) gamma0).
struct HeatingModel {
  double a_dba = 0.0;  ///< rad/s per W
  double a_eh = 0.0;   ///< 1/W
  double gamma0 = 0.0; ///< rad/s
  double area0 = 1.0;

  double inverse_area(double power) const;
};

struct AreaPoint {
  double power = 0.0; ///< W
  double area = 0.0;
};

/// Fits a_dba (and a_eh for dba_heating). area0 defaults to the first point's area.
FitResult fit_inverse_area(std::span<const AreaPoint> points, HeatingModelKind kind, double gamma0,
                           std::optional<double> area0 = {});

// ------------------------------------------------------------ gas damping

struct GasMaterial {
  double density = 0.0;     ///< kg/m^3
  double thickness = 0.0;   ///< m
  double molar_mass = 0.0;  ///< kg/mol
  double temperature = 0.0; ///< K
};

/// Q_D(p) = (rho h W / 4) sqrt(pi/2) sqrt(R T / M) / p.
double gas_damping_q(const GasMaterial& material, double omega_m, double pressure);

struct PressurePoint {
  double pressure = 0.0; ///< Pa
  double q = 0.0;
};

struct GasDampingModel {
  double q0 = 0.0;
  double a_q = 0.0;
  double q0_stderr = 0.0;
  double a_q_stderr = 0.0;
  GasMaterial material;
  double omega_m = 0.0;

  /// 1/Q = 1/Q0 + a_Q / Q_D(p).
  double quality(double pressure) const;
};

/// Linear fit of 1/Q against 1/Q_D(p). Needs two or more points spanning at least a decade in pressure.
GasDampingModel fit_q_vs_pressure(std::span<const PressurePoint> points, const GasMaterial& material,
                                  double omega_m);

// ----------------------------------------------------- reflection lineshape

struct ReflectionModel {
  double eta_r = 0.0; ///< off-resonance level
  double eta_L = 0.0; ///< Lorentzian dip amplitude
  double asym = 0.0;  ///< dispersive fraction
  double kappa = 0.0; ///< rad/s

  void validate() const;
};

/// P_out/P_in = eta_r - eta_L (1/(1+u^2) - asym u/(1+u^2)), u = 2 D / kappa.
double reflection_at(const ReflectionModel& model, double detuning);

struct ReflectionCurve {
  std::vector<double> detuning;   ///< rad/s
  std::vector<double> total;
  std::vector<double> lorentzian; ///< eta_L / (1 + u^2)
  std::vector<double> dispersive; ///< eta_L asym u / (1 + u^2), odd in D
};

ReflectionCurve reflection_dip(const ReflectionModel& model, std::span<const double> detunings);

/// Fits kappa, eta_L and asym with eta_r fixed. The scan's frequency column is
/// the detuning in Hz. Names "kappa_hz", "eta_L", "asym".
FitResult fit_reflection_dip(const Spectrum& scan, double eta_r);

// ---------------------------------------------------- frequency-noise cal

struct FrequencyNoiseCal {
  double ratio = 0.0;       ///< locked / unlocked tone power
  double lambda_low = 0.0;  ///< (1 - sqrt(ratio)) / 2
  double lambda_high = 0.0; ///< (1 + sqrt(ratio)) / 2
  double phi_mod = 0.0;     ///< calibration tone phase depth, rad
  double omega_mod = 0.0;   ///< rad/s
  double kappa = 0.0;       ///< rad/s

  /// The smaller non-zero root, which yields the larger noise estimate.
  double less_favourable_lambda() const;
};

/// Solves ratio = (1 - 2 Lambda)^2 for both roots. Throws InputError unless 0 <= ratio <= 1.
FrequencyNoiseCal frequency_noise_calibration(double ratio, double phi_mod, double omega_mod, double kappa);

/// Area of a calibration tone near `center_hz` above the median level of the
/// surrounding window, integrated over +-half_width_hz.
double tone_area(const Spectrum& spectrum, double center_hz, double half_width_hz);

struct CalibratedNoise {
  Spectrum phase;        ///< detected phase, 1/Hz (rad^2/Hz)
  Spectrum frequency;    ///< cavity frequency noise, (rad/s)^2/Hz
  Spectrum displacement; ///< equivalent displacement, m^2/Hz
};

/// Converts a voltage spectrum: S_phi = S_VV phi_mod^2 / tone_area,
/// S_ww = kappa^2 S_phi / (16 Lambda^2), S_xx = S_ww / freq_pull^2.
CalibratedNoise calibrate_frequency_noise(const Spectrum& spectrum_vv, const FrequencyNoiseCal& cal,
                                          double lambda, double tone_area_vv, double freq_pull);

} // namespace optocool
