#pragma once

// Thermal intermodulation noise: nonlinear transduction of cavity frequency
// fluctuations into the detected phase quadrature. Fluctuations are assumed
// stationary and Gaussian.

#include "optocool/spectrum.hpp"

#include <array>

namespace optocool {

/// Phase-quadrature signal -2u / (1 + u^2) of a fast cavity at normalised detuning u = 2D/kappa.
double phase_quadrature(double upsilon);

/// Taylor series of the phase quadrature around u0, written as
/// -(2/(1+u0^2)) (c0 + c1 du + c2 du^2 + c3 du^3) with c0 = u0.
struct TransductionExpansion {
  double upsilon0 = 0.0;
  std::array<double, 4> coeffs{};

  /// Series value at u0 + delta.
  double evaluate(double delta) const;
};

TransductionExpansion phase_expansion(double upsilon0);

/// Spectrum of the <du(t) du(t+tau)^3> term, 3 variance S. Same grid and units.
Spectrum cubic_correlation_spectrum(const Spectrum& s_upsilon, double variance);

enum class ConvolutionMethod { fft, direct_serial, direct_parallel };

struct TripleConvolution {
  Spectrum spectrum;          ///< single-sided S*S*S on 0..3 f_max
  double edge_fraction = 0.0; ///< share of input power in the top 5% of the input grid
  bool leakage_warning = false;
};

/// Spectrum of the <du(t) du(t+tau)>^3 term, the twofold self-convolution of S.
///
/// The single-sided input is unfolded into two-sided bin powers (the DC bin
/// keeps its full weight), convolved, and folded back, so total power is
/// conserved: int out df = (int in df)^3. The input grid must sit on multiples
/// of its step (missing bins below the start are taken as zero). The FFT path
/// zero-pads to four times the two-sided length.
TripleConvolution triple_convolution_spectrum(const Spectrum& s_upsilon,
                                              ConvolutionMethod method = ConvolutionMethod::fft);

struct TinBudget {
  double first_order_scaling = 0.0;  ///< (g0/kappa)^2 n_th
  double second_order_scaling = 0.0; ///< (g0/kappa)^4 n_th^2
  double rms_detuning = 0.0;         ///< 2 (g0/kappa) sqrt(n_th)
};

TinBudget tin_budget(double g0, double kappa, double n_th);

} // namespace optocool
