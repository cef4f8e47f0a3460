#include "doctest.h"
#include "support.hpp"

#include "optocool/error.hpp"
#include "optocool/loop.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <random>
#include <vector>

using namespace optocool;

namespace {

// A loud, broad desk-scale mode behind the bandpass filter with a 300 ns delay.
LoopModel desk_loop(double gain) {
  LoopModel m;
  m.mode = {angular(1.3e6), angular(1e3), 200e-15, 300.0};
  m.mode = m.mode.with_bath_occupancy(1e4);
  m.filter.delay = 300e-9;
  m.filter.main_center = angular(1.34e6);
  m.filter.main_bandwidth = angular(77.86e3);
  m.filter.phase_offset = tune_phase(m.filter, m.mode.omega_m);
  m.filter.gain = gain;
  m.s_ff_tot = thermal_force_psd(m.mode);
  m.s_xx_imp = 2.0 * 25.0 * 4.0 * std::pow(zero_point_amplitude(m.mode), 2) / m.mode.gamma_m;
  return m;
}

double quad_abs_chi2(const MechanicalMode& m, double g, bool weighted) {
  using boost::math::quadrature::gauss_kronrod;
  const double w0 = m.omega_m, gt = m.gamma_m * (1.0 + g);
  auto f = [&](double w) {
    const double d = (w0 * w0 - w * w) * (w0 * w0 - w * w) + gt * gt * w * w;
    return (weighted ? w * w : 1.0) / (m.m_eff * m.m_eff * d);
  };
  // Break points cluster at the resonance so each adaptive panel sees a smooth piece.
  std::vector<double> cuts{0.0};
  for (double k : {-50.0, -5.0, -1.0, 0.0, 1.0, 5.0, 50.0})
    if (w0 + k * gt > cuts.back()) cuts.push_back(w0 + k * gt);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    sum += gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-12);
  // Tail through u = 1/w, which keeps the panel on the scale of the resonance.
  auto tail = [&](double u) { return u > 0.0 ? f(1.0 / u) / (u * u) : 0.0; };
  sum += gauss_kronrod<double, 61>::integrate(tail, 0.0, 1.0 / cuts.back(), 15, 1e-12);
  return sum;
}

} // namespace

TEST_CASE("cold-damping integrals agree with adaptive quadrature") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    MechanicalMode m{std::pow(10.0, 3.0 + 4.0 * u(rng)), 0.0, std::pow(10.0, -15.0 + 3.0 * u(rng)), 300.0};
    m.gamma_m = m.omega_m * std::pow(10.0, -4.0 + 2.0 * u(rng));
    const double g = std::pow(10.0, -1.0 + 3.0 * u(rng));
    const auto in = cold_damping_integrals(m, g);
    CAPTURE(k);
    CHECK_REL(in.plain, quad_abs_chi2(m, g, false), 1e-8);
    CHECK_REL(in.weighted, quad_abs_chi2(m, g, true), 1e-8);
  }
  CHECK_THROWS_AS(cold_damping_integrals(test::membrane(), -1.0), DomainError);
}

TEST_CASE("optimal cold-damping gain minimises the analytic occupancy") {
  const auto m = test::membrane();
  const double sff = thermal_force_psd(m);
  const double simp = 1e-3 * 4.0 * std::pow(zero_point_amplitude(m), 2) / m.gamma_m;
  const double g_star = optimal_gain(m, sff, simp);
  REQUIRE(g_star > 100.0);
  auto n = [&](double lg) { return cold_damping_occupancy(sff, std::exp(lg), m, simp); };
  const auto r = boost::math::tools::brent_find_minima(n, std::log(g_star) - 3.0, std::log(g_star) + 3.0, 50);
  CHECK_REL(std::exp(r.first), g_star, 1e-2);
}

TEST_CASE("open-loop spectrum integrates to the bath occupancy") {
  LoopModel m = desk_loop(0.0);
  m.s_xx_imp = 0.0;
  const double f0 = hertz(m.mode.omega_m), w = hertz(m.mode.gamma_m);
  const auto s = closed_loop_displacement_psd(m, FrequencyGrid::covering(f0 - 200 * w, f0 + 200 * w, w / 40));
  CHECK_REL(occupancy_from_psd(s, zero_point_amplitude(m.mode)), 1e4, 2e-3);
}

TEST_CASE("in-loop spectrum is squashed below the imprecision at high gain") {
  const LoopModel m = desk_loop(60.0);
  const double w = m.mode.omega_m;
  CHECK(inloop_psd_at(m, w) < m.s_xx_imp);
  CHECK(displacement_psd_at(m, w) < displacement_psd_at(desk_loop(0.0), w));
}

TEST_CASE("grid must resolve the linewidth") {
  const LoopModel m = desk_loop(1.0);
  const double f0 = hertz(m.mode.omega_m), w = hertz(m.mode.gamma_m);
  CHECK_THROWS_AS(closed_loop_displacement_psd(m, FrequencyGrid::covering(f0 - 10 * w, f0 + 10 * w, w / 5)), InputError);
}

TEST_CASE("occupancy needs a displacement spectrum") {
  Spectrum s = Spectrum::on_grid(FrequencyGrid{0.0, 1.0, 10}, SpectrumUnits::volts2_per_hz);
  CHECK_THROWS_AS(occupancy_from_psd(s, 1e-15), InputError);
}

TEST_CASE("stability: anti-damping phase is caught by both tests") {
  LoopModel m = desk_loop(0.0);
  m.filter.phase_offset += constants::pi;
  // |h| is about 0.45 per unit gain at the mode, so anti-damping wins above g of about 2.
  const std::vector<double> gains{0.5, 5.0};
  const auto scan = loop_stability_scan(m, gains);
  CHECK(scan[0].stable);
  CHECK_FALSE(scan[1].stable);
  CHECK(scan[1].min_damping < 0.0);
  CHECK(scan[1].encirclements == 2);
}

TEST_CASE("stability: the delayed loop loses stability at high gain") {
  const std::vector<double> gains{10.0, 60.0, 100.0, 200.0};
  const auto scan = loop_stability_scan(desk_loop(1.0), gains);
  CHECK(scan[0].stable);
  CHECK(scan[1].stable);
  // Damping at the mode stays positive; the instability is a pole pulled in
  // from the filter, which only the encirclement count sees.
  CHECK(scan[2].min_damping > 0.0);
  CHECK_FALSE(scan[2].stable);
  CHECK_FALSE(scan[3].stable);
}

TEST_CASE("stability: a spurious mode driven with the wrong sign") {
  LoopModel m = desk_loop(1.0);
  // Next to the main mode the filter phase is still close to pure damping, so
  // a coupling of -1 turns it into anti-damping.
  const std::vector<SpuriousMode> spurious{{angular(1.305e6), angular(10.0), 200e-15, -1.0}};
  const std::vector<double> gains{5.0};
  const auto scan = loop_stability_scan(m, gains, spurious);
  CHECK_FALSE(scan[0].stable);
  const auto plain = loop_stability_scan(m, gains);
  CHECK(plain[0].stable);
}

TEST_CASE("gain sweep reports occupancy and stability") {
  const LoopModel m = desk_loop(1.0);
  const double f0 = hertz(m.mode.omega_m), w = hertz(m.mode.gamma_m);
  const auto grid = FrequencyGrid::covering(f0 - 300 * w, f0 + 300 * w, w / 20);
  const std::vector<double> gains{1.0, 10.0, 40.0};
  const auto sweep = gain_sweep(m, gains, grid);
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[0].n_bar > sweep[1].n_bar);
  CHECK(sweep[1].n_bar > sweep[2].n_bar);
  for (const auto& p : sweep) CHECK(p.stable);
}

TEST_CASE("log-spaced gains") {
  const auto g = log_spaced(1.0, 100.0, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[1] == doctest::Approx(10.0));
  CHECK(g[2] == 100.0);
  CHECK_THROWS_AS(log_spaced(0.0, 1.0, 3), DomainError);
}
