#include "optocool/params.hpp"

#include "checks.hpp"
#include "optocool/constants.hpp"

#include <cmath>

namespace optocool {

using namespace constants;
using detail::require_positive;
using detail::require_unit_interval;

void MechanicalMode::validate() const {
  require_positive("omega_m", omega_m);
  require_positive("gamma_m", gamma_m);
  require_positive("m_eff", m_eff);
  require_positive("temperature", temperature);
  if (!std::isfinite(omega_m / gamma_m))
    throw DomainError("quality factor omega_m/gamma_m is not finite");
}

MechanicalMode MechanicalMode::with_bath_occupancy(double n_th) const {
  require_positive("n_th", n_th);
  MechanicalMode out = *this;
  out.temperature = n_th * hbar * omega_m / k_boltzmann;
  return out;
}

double zero_point_amplitude(const MechanicalMode& mode) {
  mode.validate();
  return std::sqrt(hbar / (2.0 * mode.m_eff * mode.omega_m));
}

double bath_occupancy(const MechanicalMode& mode) {
  mode.validate();
  return k_boltzmann * mode.temperature / (hbar * mode.omega_m);
}

double thermal_force_psd(const MechanicalMode& mode) {
  mode.validate();
  return 4.0 * mode.m_eff * mode.gamma_m * k_boltzmann * mode.temperature;
}

ModeQuantities derive_mode_quantities(const MechanicalMode& mode) {
  mode.validate();
  ModeQuantities q;
  q.x_zpf = zero_point_amplitude(mode);
  q.q_factor = mode.omega_m / mode.gamma_m;
  q.n_th = bath_occupancy(mode);
  q.gamma_decoherence = q.n_th * mode.gamma_m;
  return q;
}

void OpticalCavity::validate() const {
  require_positive("kappa", kappa);
  require_positive("length", length);
  require_positive("wavelength", wavelength);
  require_unit_interval("eta_c", eta_c);
  if (t_f) require_unit_interval("t_f", *t_f);
  if (t_e) require_unit_interval("t_e", *t_e);
  if (t_f && t_e) {
    const double sum = *t_f + *t_e;
    if (!(sum > 0.0))
      throw DomainError("t_f + t_e must be positive when both transmissivities are set");
    const double implied = *t_f / sum;
    if (std::abs(implied - eta_c) > overcoupling_tolerance)
      throw DomainError("eta_c = " + detail::fmt_value(eta_c) +
                        " inconsistent with t_f/(t_f+t_e) = " + detail::fmt_value(implied));
  }
}

double OpticalCavity::omega_c() const {
  require_positive("wavelength", wavelength);
  return two_pi * speed_of_light / wavelength;
}

double OpticalCavity::free_spectral_range() const {
  require_positive("length", length);
  return speed_of_light / (2.0 * length);
}

double OpticalCavity::finesse() const {
  require_positive("kappa", kappa);
  return free_spectral_range() / hertz(kappa);
}

std::string_view to_string(BeamRole role) {
  return role == BeamRole::probe ? "probe" : "cooling";
}

void OpticalBeam::validate() const {
  detail::require_non_negative("power_in", power_in);
  detail::require_finite("detuning", detuning);
  detail::require_non_negative("g", g);
}

double quantum_cooperativity(double g, double kappa, double gamma_decoherence) {
  detail::require_non_negative("g", g);
  require_positive("kappa", kappa);
  require_positive("gamma", gamma_decoherence);
  return 4.0 * g * g / (kappa * gamma_decoherence);
}

void CouplingConfig::validate() const {
  detail::require_non_negative("g0", g0);
  require_unit_interval("membrane_reflectivity", membrane_reflectivity);
  require_unit_interval("overlap", overlap);
}

void DetectionChain::validate() const {
  require_unit_interval("mode_matching", mode_matching);
  require_unit_interval("overcoupling", overcoupling);
  require_unit_interval("fiber_loss", fiber_loss);
  require_unit_interval("visibility", visibility);
  require_unit_interval("quantum_efficiency", quantum_efficiency);
}

double intracavity_photons(const OpticalCavity& cavity, const OpticalBeam& beam) {
  require_positive("kappa", cavity.kappa);
  require_positive("wavelength", cavity.wavelength);
  require_unit_interval("eta_c", cavity.eta_c);
  beam.validate();
  const double photon_flux = beam.power_in / (hbar * cavity.omega_c());
  const double half_kappa = 0.5 * cavity.kappa;
  return cavity.eta_c * cavity.kappa * photon_flux /
         (beam.detuning * beam.detuning + half_kappa * half_kappa);
}

double g0_max(const OpticalCavity& cavity, const MechanicalMode& mode,
              const CouplingConfig& coupling) {
  require_positive("length", cavity.length);
  coupling.validate();
  return 2.0 * (cavity.omega_c() / cavity.length) * coupling.membrane_reflectivity *
         zero_point_amplitude(mode) * coupling.overlap;
}

double detection_efficiency(const DetectionChain& chain, FiberLossConvention convention) {
  chain.validate();
  const double fiber = convention == FiberLossConvention::power_ratio
                           ? chain.fiber_loss
                           : std::sqrt(chain.fiber_loss);
  return chain.mode_matching * chain.overcoupling * fiber * chain.visibility *
         chain.quantum_efficiency;
}

double mode_matching_from_transmission(double transmitted_fraction, double eta_c) {
  detail::require_non_negative("P_t/P_in", transmitted_fraction);
  if (!(eta_c > 0.0 && eta_c < 1.0))
    throw DomainError("mode matching from transmission needs 0 < eta_c < 1 (got " +
                      detail::fmt_value(eta_c) + "); 4 eta_c (1 - eta_c) vanishes");
  return transmitted_fraction / (4.0 * eta_c * (1.0 - eta_c));
}

} // namespace optocool
