#pragma once

// Stochastic time-domain simulation of the feedback-cooled oscillator, used
// as an independent check of the frequency-domain loop model.

#include "optocool/filter.hpp"
#include "optocool/params.hpp"
#include "optocool/spectrum.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace optocool {

struct SimConfig {
  double dt = 0.0;       ///< s
  double duration = 0.0; ///< s
  std::uint64_t seed = 0;
  MechanicalMode mode;   ///< Omega_tot, Gamma_tot, m_eff
  FeedbackFilter filter; ///< continuous-time design, discretised at 1/dt
  double s_ff_tot = 0.0; ///< N^2/Hz
  double s_xx_imp = 0.0; ///< m^2/Hz

  /// Throws DomainError unless every period holds at least 20 samples, the
  /// run is at least one sample long, and all parameter sets are valid.
  void validate() const;
  std::size_t steps() const;
  double loop_scale() const { return mode.m_eff * mode.omega_m * mode.gamma_m; }
};

/// The feedback filter as the simulation runs it: each second-order stage is
/// bilinear-transformed with pre-warping at its centre, the loop delay becomes
/// an integer sample delay, and the sub-sample remainder (including the half
/// sample of the zero-order hold) is folded into each stage's phase.
class DiscreteController {
public:
  DiscreteController(const FeedbackFilter& filter, double dt);

  /// Feeds one measurement sample and returns the dimensionless filter output.
  double step(double y);
  void reset();

  /// Response seen by the continuous plant, including delay line and zero-order hold.
  cplx response(double omega) const;
  std::size_t delay_samples() const { return delay_; }

private:
  struct Biquad {
    double b0, b1, b2, a1, a2;
    double s1 = 0.0, s2 = 0.0;
    double run(double in);
    cplx at(double omega, double dt) const;
  };
  struct Chain {
    double gain;
    std::vector<Biquad> stages;
  };

  double dt_;
  std::size_t delay_;
  std::vector<double> line_;
  std::size_t head_ = 0;
  std::vector<Chain> chains_;
};

struct TimeSeries {
  double dt = 0.0;
  std::vector<double> x; ///< true displacement, m
  std::vector<double> y; ///< measured displacement x + imprecision, m
};

/// Integrates the oscillator with exact per-step propagation and matched
/// Gaussian force increments; the feedback force is held over each step.
/// Bit-identical for identical configs. Throws InstabilityError naming the
/// first sample where |x| exceeds 1e6 times the open-loop thermal RMS.
TimeSeries simulate(const SimConfig& config);

/// Single-sided Welch estimate with a Hann window; `overlap` is the fraction
/// of each segment shared with the next (0 <= overlap < 1).
Spectrum welch_psd(std::span<const double> samples, double dt, std::size_t segment_length,
                   double overlap = 0.5, SpectrumUnits units = SpectrumUnits::m2_per_hz);

/// Loop spectra predicted for the discrete controller of `config`.
double model_displacement_psd(const SimConfig& config, const DiscreteController& controller, double omega);
double model_inloop_psd(const SimConfig& config, const DiscreteController& controller, double omega);

/// Occupancy of the predicted displacement spectrum, integrated over the band up to Nyquist.
double model_occupancy(const SimConfig& config);

struct SweepPoint {
  double gain = 0.0;
  double n_sim = 0.0;
  double n_model = 0.0;
};

/// Simulates each gain with seed config.seed + index, estimates the occupancy
/// of the Welch spectrum of x, and pairs it with model_occupancy. Gains run in parallel.
std::vector<SweepPoint> occupancy_vs_gain_sweep(const SimConfig& config, std::span<const double> gains,
                                                std::size_t segment_length);

} // namespace optocool
