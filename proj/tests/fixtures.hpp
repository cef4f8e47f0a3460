#pragma once

// Forward models used to synthesise inputs for the estimator tests. Each
// returns data generated from known parameters so a fit can be checked
// against what went in.

#include "optocool/constants.hpp"
#include "optocool/fit.hpp"
#include "optocool/loop.hpp"

#include <random>
#include <vector>

namespace test {

using namespace optocool;

inline Spectrum noisy(Spectrum s, double rel, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, rel);
  for (double& v : s.values) v *= 1.0 + n(rng);
  return s;
}

inline const Lorentzian lorentzian_truth{1.2981e6, 51.7, 2e-7, 4e-12};

inline Spectrum lorentzian_data() {
  const auto& l = lorentzian_truth;
  Spectrum s = Spectrum::on_grid(FrequencyGrid::covering(l.center - 40 * l.fwhm, l.center + 40 * l.fwhm, l.fwhm / 20),
                                 SpectrumUnits::volts2_per_hz);
  for (std::size_t i = 0; i < s.size(); ++i) s.values[i] = l(s.freqs[i]);
  return s;
}

// Dressed mode under feedback with the filter shape used throughout.
inline LoopModel loop_truth() {
  LoopModel m;
  m.mode = {angular(1.29812e6), angular(51.68), 200e-15, 300.0};
  m.filter.delay = 300e-9;
  m.filter.main_center = angular(1.34e6);
  m.filter.main_bandwidth = angular(77.86e3);
  m.filter.phase_offset = tune_phase(m.filter, m.mode.omega_m);
  m.filter.gain = 48.6;
  const double x = zero_point_amplitude(m.mode);
  m.s_ff_tot = 4.0 * m.mode.m_eff * m.mode.gamma_m * constants::hbar * m.mode.omega_m * 1.1e5;
  m.s_xx_imp = 2.0 * 3.2e-5 * 4.0 * x * x / angular(9e-3);
  return m;
}

inline double loop_s_xzp() {
  const double x = zero_point_amplitude(loop_truth().mode);
  return 4.0 * x * x / angular(9e-3);
}

inline Spectrum inloop_data() {
  const LoopModel m = loop_truth();
  const double f0 = hertz(m.mode.omega_m);
  Spectrum s = Spectrum::on_grid(FrequencyGrid::covering(f0 - 30e3, f0 + 30e3, 20.0), SpectrumUnits::m2_per_hz);
  for (std::size_t i = 0; i < s.size(); ++i) s.values[i] = inloop_psd_at(m, angular(s.freqs[i]));
  return s;
}

inline ClosedLoopFixed inloop_fixed() {
  const LoopModel m = loop_truth();
  ClosedLoopFixed f{m.mode, m.filter, m.s_ff_tot, loop_s_xzp()};
  f.filter.gain = 0.0;
  f.filter.phase_offset = 0.0;
  return f;
}

inline const ReflectionModel reflection_truth{0.42, 0.35, 0.15, angular(340e6)};

inline Spectrum reflection_data() {
  Spectrum s = Spectrum::on_grid(FrequencyGrid::covering(-2e9, 2e9, 4e6), SpectrumUnits::ratio);
  for (std::size_t i = 0; i < s.size(); ++i) s.values[i] = reflection_at(reflection_truth, angular(s.freqs[i]));
  return s;
}

inline const HeatingModel heating_truth{angular(47.07) / 780e-6, 300.0, angular(4.609), 1e-6};

inline std::vector<AreaPoint> heating_data() {
  std::vector<AreaPoint> pts;
  for (double p : {0.0, 100e-6, 200e-6, 300e-6, 400e-6, 500e-6, 600e-6, 780e-6})
    pts.push_back({p, heating_truth.area0 / heating_truth.inverse_area(p)});
  return pts;
}

// Relative noise on each area; a_eh in 1/W. 21 powers up to 20 mW, where
// a_eh = 1e-4 per uW bends the inverse area by a factor of three.
inline std::vector<AreaPoint> heating_noisy(double a_eh, double rel, std::uint64_t seed, double p_max = 20e-3) {
  HeatingModel m = heating_truth;
  m.a_eh = a_eh;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, rel);
  std::vector<AreaPoint> pts;
  for (int k = 0; k <= 20; ++k) {
    const double p = p_max * k / 20.0;
    pts.push_back({p, m.area0 / m.inverse_area(p) * (1.0 + n(rng))});
  }
  return pts;
}

inline GasMaterial gas_material() { return {3170.0, 15e-9, 28.97e-3, 300.0}; }

inline GasDampingModel gas_truth() {
  GasDampingModel g;
  g.q0 = 1.55e8;
  g.a_q = 1.0;
  g.material = gas_material();
  g.omega_m = angular(1.3e6);
  return g;
}

inline std::vector<PressurePoint> gas_data() {
  std::vector<PressurePoint> pts;
  for (double p : {1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3}) pts.push_back({p, gas_truth().quality(p)});
  return pts;
}

// Flat background with a single-bin tone of total power `area` at `center`.
inline Spectrum tone_data(double center, double area, double floor) {
  Spectrum s = Spectrum::on_grid(FrequencyGrid::covering(center - 5e3, center + 5e3, 50.0), SpectrumUnits::volts2_per_hz);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.values[i] = floor;
    if (std::abs(s.freqs[i] - center) < 0.5 * s.step()) s.values[i] += area / s.step();
  }
  return s;
}

} // namespace test
