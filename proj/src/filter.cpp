#include "optocool/filter.hpp"

#include "checks.hpp"
#include "optocool/constants.hpp"
#include "optocool/error.hpp"

#include <cmath>

namespace optocool {

namespace {

cplx delay_phase(double delay, double omega) { return std::polar(1.0, omega * delay); }

cplx stage_power(cplx bracket, int order) {
  cplx out = 1.0;
  for (int i = 0; i < order; ++i) out *= bracket;
  return out;
}

} // namespace

void FeedbackFilter::validate() const {
  detail::require_finite("gain", gain);
  detail::require_finite("phase_offset", phase_offset);
  detail::require_non_negative("delay", delay);
  detail::require_positive("main_center", main_center);
  detail::require_positive("main_bandwidth", main_bandwidth);
  for (const auto& s : aux_stages) {
    detail::require_positive("aux center", s.center);
    detail::require_positive("aux bandwidth", s.bandwidth);
    detail::require_finite("aux gain", s.gain);
    detail::require_finite("aux phase", s.phase);
    if (s.order < 1) throw DomainError("aux stage order must be at least 1");
  }
}

cplx bandpass(double center, double bandwidth, double omega) {
  return bandwidth * omega / cplx(center * center - omega * omega, -bandwidth * omega);
}

cplx main_response(const FeedbackFilter& f, double omega) {
  const cplx b = bandpass(f.main_center, f.main_bandwidth, omega);
  return f.gain * std::polar(1.0, omega * f.delay - f.phase_offset) * b * b;
}

cplx aux_response(const FeedbackFilter& f, double omega) {
  cplx sum = 0.0;
  for (const auto& s : f.aux_stages)
    sum += s.gain * std::polar(1.0, -s.phase) * stage_power(bandpass(s.center, s.bandwidth, omega), s.order);
  return sum * delay_phase(f.delay, omega);
}

cplx filter_response(const FeedbackFilter& f, double omega) {
  return main_response(f, omega) + aux_response(f, omega);
}

double tune_phase(const FeedbackFilter& f, double omega_target) {
  // h = e^{-i phi} A + B. Ask for h = i t with t > 0: |A| = |i t - B| fixes t,
  // then phi = arg A - arg(i t - B).
  FeedbackFilter unphased = f;
  unphased.phase_offset = 0.0;
  if (unphased.gain == 0.0) unphased.gain = 1.0; // phase is gain independent without aux stages
  const cplx a = main_response(unphased, omega_target);
  const cplx b = aux_response(f, omega_target);
  const double disc = std::norm(a) - b.real() * b.real();
  if (std::abs(a) == 0.0 || disc < 0.0)
    throw NumericalError("cannot reach phase pi/2: auxiliary response dominates the main filter at " +
                         detail::fmt_value(omega_target / constants::two_pi) + " Hz");
  const double t = b.imag() + std::sqrt(disc);
  if (!(t > 0.0))
    throw NumericalError("cannot reach phase pi/2 with positive magnitude at " +
                         detail::fmt_value(omega_target / constants::two_pi) + " Hz");
  const double phi = std::arg(a) - std::arg(cplx(-b.real(), t - b.imag()));
  return std::remainder(phi, constants::two_pi);
}

} // namespace optocool
