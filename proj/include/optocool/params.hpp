#pragma once

// Physical parameters of the membrane-in-the-middle system and the scalar
// quantities derived directly from them.
//
// Every rate and frequency is stored in angular units (rad/s). Conversion to
// and from Hz happens only at the I/O boundary (config files, reports, CSV).

#include <optional>
#include <string_view>

namespace optocool {

/// A single mechanical mode coupled to a thermal bath.
struct MechanicalMode {
  double omega_m = 0.0;     ///< resonance frequency, rad/s
  double gamma_m = 0.0;     ///< energy damping rate (FWHM), rad/s
  double m_eff = 0.0;       ///< effective mass, kg
  double temperature = 0.0; ///< bath temperature, K

  /// Throws DomainError unless every field is strictly positive and finite.
  void validate() const;

  /// Same mode with the temperature chosen so that k_B T / (hbar omega_m) == n_th.
  MechanicalMode with_bath_occupancy(double n_th) const;

  bool operator==(const MechanicalMode&) const = default;
};

struct ModeQuantities {
  double x_zpf = 0.0;             ///< m
  double q_factor = 0.0;          ///< omega_m / gamma_m
  double n_th = 0.0;              ///< classical bath occupancy k_B T / hbar omega_m
  double gamma_decoherence = 0.0; ///< n_th * gamma_m, rad/s
};

ModeQuantities derive_mode_quantities(const MechanicalMode& mode);

double zero_point_amplitude(const MechanicalMode& mode);
double bath_occupancy(const MechanicalMode& mode);

/// Thermal Langevin force PSD 4 m_eff gamma_m k_B T, single-sided, N^2/Hz.
double thermal_force_psd(const MechanicalMode& mode);

/// Fabry-Perot cavity driven through the more transmissive mirror.
struct OpticalCavity {
  double kappa = 0.0;      ///< FWHM linewidth, rad/s
  double length = 0.0;     ///< m
  double wavelength = 0.0; ///< m
  double eta_c = 0.0;      ///< overcoupling, input-port fraction of kappa
  std::optional<double> t_f; ///< input (fiber) mirror power transmissivity
  std::optional<double> t_e; ///< end mirror power transmissivity

  /// Absolute tolerance on |eta_c - t_f / (t_f + t_e)| when both are set.
  static constexpr double overcoupling_tolerance = 0.01;

  void validate() const;
  double omega_c() const; ///< optical angular frequency 2 pi c / lambda
  double free_spectral_range() const; ///< c / 2L, Hz
  double finesse() const; ///< free_spectral_range / (kappa / 2 pi)

  bool operator==(const OpticalCavity&) const = default;
};

enum class BeamRole { probe, cooling };

std::string_view to_string(BeamRole role);

struct OpticalBeam {
  double power_in = 0.0; ///< power coupled towards the cavity mode, W
  double detuning = 0.0; ///< laser minus cavity frequency, rad/s
  double g = 0.0;        ///< field-enhanced coupling g0 sqrt(n_cav), rad/s
  BeamRole label = BeamRole::probe;

  void validate() const;
  bool operator==(const OpticalBeam&) const = default;
};

/// Quantum cooperativity 4 g^2 / (kappa gamma).
double quantum_cooperativity(double g, double kappa, double gamma_decoherence);

struct CouplingConfig {
  double g0 = 0.0;                    ///< vacuum coupling, rad/s
  double membrane_reflectivity = 0.0; ///< field reflectivity |r|
  double overlap = 1.0;               ///< transverse overlap xi

  void validate() const;
  bool operator==(const CouplingConfig&) const = default;
};

/// Chain of efficiencies between intracavity photons and detector photocurrent.
struct DetectionChain {
  double mode_matching = 1.0;      ///< epsilon
  double overcoupling = 1.0;       ///< eta_c
  double fiber_loss = 1.0;         ///< eta_r = |beta|^2, off-resonant fiber recoupling
  double visibility = 1.0;         ///< homodyne fringe visibility
  double quantum_efficiency = 1.0; ///< photodiode quantum efficiency

  void validate() const;
  bool operator==(const DetectionChain&) const = default;
};

/// How the fiber recoupling factor enters the detection efficiency.
enum class FiberLossConvention {
  power_ratio, ///< use eta_r directly
  amplitude,   ///< use |beta| = sqrt(eta_r)
};

/// Mean intracavity photon number of a steady-state coherent drive.
double intracavity_photons(const OpticalCavity& cavity, const OpticalBeam& beam);

/// Vacuum coupling at the optimal membrane position, 2 (omega_c / L) |r| x_zpf xi.
double g0_max(const OpticalCavity& cavity, const MechanicalMode& mode,
              const CouplingConfig& coupling);

double detection_efficiency(const DetectionChain& chain,
                            FiberLossConvention convention = FiberLossConvention::power_ratio);

/// Cavity mode-matching efficiency from resonant transmission, P_t / P_in = 4 eps eta_c (1 - eta_c).
double mode_matching_from_transmission(double transmitted_fraction, double eta_c);

} // namespace optocool
