#pragma once

// Feedback controller: a squared main bandpass with overall gain, phase offset
// and loop delay, plus optional narrow auxiliary bandpass stages.

#include <complex>
#include <vector>

namespace optocool {

using cplx = std::complex<double>;

/// Narrow bandpass added to the main filter, e.g. to phase-stabilise a spurious mode.
struct AuxStage {
  double center = 0.0;    ///< rad/s
  double bandwidth = 0.0; ///< rad/s
  double gain = 0.0;      ///< relative to the main filter's unit gain
  double phase = 0.0;     ///< rad, subtracted like the main phase offset
  int order = 1;          ///< power of the bandpass bracket

  bool operator==(const AuxStage&) const = default;
};

struct FeedbackFilter {
  double gain = 0.0;           ///< G_fb
  double phase_offset = 0.0;   ///< phi_fb, rad
  double delay = 0.0;          ///< tau_fb, s
  double main_center = 0.0;    ///< Omega_fb, rad/s
  double main_bandwidth = 0.0; ///< Gamma_fb, rad/s
  std::vector<AuxStage> aux_stages;

  void validate() const;
  bool operator==(const FeedbackFilter&) const = default;
};

/// Single bandpass bracket G W / (W0^2 - W^2 - i G W); equals i at the centre.
cplx bandpass(double center, double bandwidth, double omega);

/// G e^{i(W tau - phi)} bracket^2.
cplx main_response(const FeedbackFilter& filter, double omega);

/// Sum of the auxiliary stages including the loop delay.
cplx aux_response(const FeedbackFilter& filter, double omega);

/// Full dimensionless response main + aux.
cplx filter_response(const FeedbackFilter& filter, double omega);

/// Phase offset that makes arg(filter_response(omega_target)) exactly pi/2,
/// returned in (-pi, pi]. Throws NumericalError when the auxiliary stages
/// dominate so strongly that no phase of the main filter achieves this.
double tune_phase(const FeedbackFilter& filter, double omega_target);

} // namespace optocool
