// Acceptance run: one PASS/FAIL line per criterion, each with the numbers it
// was judged on. Exit status is non-zero when any criterion fails.

#include "fixtures.hpp"
#include "support.hpp"

#include "optocool/backaction.hpp"
#include "optocool/fit.hpp"
#include "optocool/limits.hpp"
#include "optocool/loop.hpp"
#include "optocool/report.hpp"
#include "optocool/timesim.hpp"
#include "optocool/tin.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace optocool;

namespace {

// Collects sub-checks for one criterion.
struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what, double got, double want, double tol) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << " " << got << " vs " << want << " (tol " << tol << (ok ? ")" : ", FAILED)");
  }
  // |got/want - 1| <= tol
  void rel(const std::string& what, double got, double want, double tol) {
    check(test::rel_err(got, want) <= tol, what, got, want, tol);
  }
  void flag(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? " ok" : " FAILED");
  }
};

const ExperimentConfig& bundled() {
  static const ExperimentConfig c = load_config(test::data_file("paper.cfg"));
  return c;
}

const Scenario& scenario() {
  static const Scenario s = build_scenario(bundled());
  return s;
}

void derived_quantities(Verdict& v) {
  const auto q = derive_mode_quantities(bundled().mechanical);
  v.rel("x_zpf [fm]", q.x_zpf * 1e15, 5.7, 0.02);
  v.rel("Q", q.q_factor, 1.4e8, 0.05);
  v.rel("n_th", q.n_th, 5.1e6, 0.10);
  v.rel("gamma/2pi [kHz]", hertz(q.gamma_decoherence) / 1e3, 48.0, 0.15);
}

void sideband_limits(Verdict& v) {
  const auto& c = bundled();
  const double kappa = c.cavity.kappa, w = c.mechanical.omega_m;
  v.check(std::abs(min_sideband_occupancy(-kappa / 2, kappa, w) - 65.0) <= 2.0, "n_min(-kappa/2)",
          min_sideband_occupancy(-kappa / 2, kappa, w), 65.0, 2.0);
  const auto a = optimal_detuning(kappa, w);
  const auto n = optimal_detuning_numeric(kappa, w);
  v.rel("numeric/analytic optimal detuning", n.detuning, a.detuning, 1e-10);
}

void anchor_occupancy(Verdict& v) {
  const auto& c = bundled();
  const auto& s = scenario();
  const double gm = c.mechanical.gamma_m, gtot = angular(52.0);
  const double gc = gtot - gm - c.probe.damping;
  const double n = sideband_occupancy(s.quantities.n_th, gm, c.probe.cooperativity, s.n_min_cooling, gc, gtot);
  v.rel("anchor n (derived n_th, 52 Hz)", n, 1070.0, 0.10);

  // Calibrate on one synthetic anchor, apply to an independent one.
  const Spectrum anchor = read_spectrum_csv(test::data_file("anchor_vv.csv"));
  const Spectrum target = read_spectrum_csv(test::data_file("anchor_target_vv.csv"));
  const double x = s.quantities.x_zpf;
  const CalibrationConstant cal = calibrate_anchor(anchor, s.anchor_occupancy, x);
  v.rel("round-trip occupancy", occupancy_from_psd(apply_calibration(target, cal, true), x), s.anchor_occupancy, 0.01);
  v.rel("calibration constant k", cal.k, 1e-16, 0.01);
}

double integrated_floor() { return predicted_floor(scenario()).n_bar; }

void feedback_floors(Verdict& v) {
  const auto& c = bundled();
  const auto q = derive_mode_quantities(c.mechanical);
  const auto f = feedback_min_occupancy_full(c.probe.cooperativity, 0.012, 0.0, q.n_th, c.mechanical.gamma_m, q.x_zpf);
  v.check(std::abs(f.n_bar - 15.0) <= 1.0, "quantum-limited floor", f.n_bar, 15.0, 1.0);
  v.rel("integrated closed-loop minimum", integrated_floor(), 30.0, 0.20);
}

void imprecision(Verdict& v) {
  const auto& c = bundled();
  const auto& s = scenario();
  ImprecisionInputs in;
  in.c_q = c.probe.cooperativity;
  in.eta_det = 0.012;
  in.x_zpf = s.quantities.x_zpf;
  in.n_th = s.quantities.n_th;
  in.gamma_m = c.mechanical.gamma_m;
  in.g0 = c.coupling.g0;
  in.s_omega_omega = c.noise.laser_frequency_asd * c.noise.laser_frequency_asd;
  in.s_xx_mirror = c.noise.mirror_displacement_asd * c.noise.mirror_displacement_asd;
  const auto b = imprecision_budget(in);
  v.rel("sqrt(S_imp,q) [am/rtHz]", std::sqrt(b.s_xx_quantum) * 1e18, 210.0, 0.10);
  v.rel("laser-noise figure", b.laser_figure, 0.03, 0.30);
  v.rel("mirror-noise figure", b.mirror_figure, 0.5, 0.30);
  v.rel("sqrt(S_imp(n_imp=3.2e-5)) [am/rtHz]", std::sqrt(quanta_to_imprecision(3.2e-5, c.mechanical)) * 1e18, 370.0,
        0.10);
}

double quad_chi2(const MechanicalMode& m, double g, bool weighted) {
  using boost::math::quadrature::gauss_kronrod;
  const double w0 = m.omega_m, gt = m.gamma_m * (1.0 + g);
  auto f = [&](double w) {
    const double d = (w0 * w0 - w * w) * (w0 * w0 - w * w) + gt * gt * w * w;
    return (weighted ? w * w : 1.0) / (m.m_eff * m.m_eff * d);
  };
  // Break points cluster at the resonance; the tail runs in u = 1/w.
  std::vector<double> cuts{0.0};
  for (double k : {-50.0, -5.0, -1.0, 0.0, 1.0, 5.0, 50.0})
    if (w0 + k * gt > cuts.back()) cuts.push_back(w0 + k * gt);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    sum += gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-12);
  auto tail = [&](double u) { return u > 0.0 ? f(1.0 / u) / (u * u) : 0.0; };
  return sum + gauss_kronrod<double, 61>::integrate(tail, 0.0, 1.0 / cuts.back(), 15, 1e-12);
}

void cold_damping(Verdict& v) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    MechanicalMode m{std::pow(10.0, 3.0 + 4.0 * u(rng)), 0.0, std::pow(10.0, -15.0 + 3.0 * u(rng)), 300.0};
    m.gamma_m = m.omega_m * std::pow(10.0, -4.0 + 2.0 * u(rng));
    const double g = std::pow(10.0, -1.0 + 3.0 * u(rng));
    const auto in = cold_damping_integrals(m, g);
    worst = std::max({worst, test::rel_err(in.plain, quad_chi2(m, g, false)),
                      test::rel_err(in.weighted, quad_chi2(m, g, true))});
  }
  v.check(worst <= 1e-8, "worst integral vs quadrature (10 sets)", worst, 0.0, 1e-8);

  const auto m = bundled().mechanical;
  const double sff = thermal_force_psd(m);
  const double simp = quanta_to_imprecision(1e-3, m);
  const double g_star = optimal_gain(m, sff, simp);
  auto n = [&](double lg) { return cold_damping_occupancy(sff, std::exp(lg), m, simp); };
  const auto r = boost::math::tools::brent_find_minima(n, std::log(g_star) - 3.0, std::log(g_star) + 3.0, 50);
  v.rel("optimal gain vs numeric minimum (g*=" + std::to_string(g_star) + ")", std::exp(r.first), g_star, 0.01);
}

void simulation(Verdict& v) {
  const SimConfig base = simulation_config(bundled());
  const auto seg = static_cast<std::size_t>(bundled().simulation.segment_length);
  const double overlap = bundled().simulation.overlap;

  // Closed loop at the configured gain: average Welch spectra over seeds.
  const DiscreteController ctl(base.filter, base.dt);
  SimConfig c = base;
  c.duration = 0.1;
  Spectrum sx, sy;
  const int seeds = 20;
  for (int k = 0; k < seeds; ++k) {
    c.seed = base.seed + 100 + static_cast<std::uint64_t>(k);
    const TimeSeries ts = simulate(c);
    const Spectrum a = welch_psd(ts.x, ts.dt, seg, overlap), b = welch_psd(ts.y, ts.dt, seg, overlap);
    if (k == 0) {
      sx = a;
      sy = b;
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) {
        sx.values[i] += a.values[i];
        sy.values[i] += b.values[i];
      }
    }
  }
  // response() already carries the filter gain.
  const double g_eff = std::abs(ctl.response(base.mode.omega_m));
  const double width = hertz(base.mode.gamma_m) * (1.0 + g_eff);
  const double f0 = hertz(base.mode.omega_m);
  double worst_x = 0.0, worst_y = 0.0;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    const double f = sx.freqs[i];
    if (std::abs(f - f0) > 5.0 * width) continue;
    worst_x = std::max(worst_x, test::rel_err(sx.values[i] / seeds, model_displacement_psd(base, ctl, angular(f))));
    worst_y = std::max(worst_y, test::rel_err(sy.values[i] / seeds, model_inloop_psd(base, ctl, angular(f))));
  }
  v.check(worst_x <= 0.10, "S_xx worst bin within 5 linewidths", worst_x, 0.0, 0.10);
  v.check(worst_y <= 0.10, "S_yy worst bin within 5 linewidths", worst_y, 0.0, 0.10);

  // Open loop equipartition.
  SimConfig open = base;
  open.filter.gain = 0.0;
  open.s_xx_imp = 0.0;
  open.duration = 0.2;
  const double x = zero_point_amplitude(open.mode);
  double mean = 0.0, worst_seed = 0.0;
  for (int k = 0; k < 10; ++k) {
    open.seed = base.seed + 1000 + static_cast<std::uint64_t>(k);
    const TimeSeries ts = simulate(open);
    double var = 0.0;
    for (double s : ts.x) var += s * s;
    const double n = var / static_cast<double>(ts.x.size()) / (2.0 * x * x) - 0.5;
    mean += n / 10.0;
    worst_seed = std::max(worst_seed, test::rel_err(n, bundled().simulation.n_th));
  }
  v.rel("open-loop occupancy, mean of 10 seeds", mean, bundled().simulation.n_th, 0.05);
  v.detail << " (worst single seed " << worst_seed << ")";

  // Gain sweep: simulated minimum against the minimum of the frequency-domain model.
  const auto gains = log_spaced(base.filter.gain / 10.0, base.filter.gain * 1.5, 9);
  const auto sweep = occupancy_vs_gain_sweep(base, gains, seg);
  double n_sim = sweep.front().n_sim;
  for (const auto& p : sweep) n_sim = std::min(n_sim, p.n_sim);
  auto model = [&](double lg) {
    SimConfig m = base;
    m.filter.gain = std::exp(lg);
    return model_occupancy(m);
  };
  const auto best = boost::math::tools::brent_find_minima(model, std::log(gains.front()), std::log(gains.back()), 30);
  v.rel("simulated sweep minimum vs model minimum", n_sim, best.second, 0.10);
}

template <class F>
void monte_carlo(Verdict& v, const std::string& name, double truth, F estimate, int trials = 20) {
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < trials; ++k) {
    const double e = estimate(static_cast<std::uint64_t>(k)) / truth - 1.0;
    sum += e;
    sum2 += e * e;
  }
  const double bias = sum / trials, spread = std::sqrt(std::max(sum2 / trials - bias * bias, 0.0));
  v.check(std::abs(bias) <= 0.05, name + " MC bias", bias, 0.0, 0.05);
  v.check(spread <= 0.10, name + " MC spread", spread, 0.0, 0.10);
}

void fitting(Verdict& v) {
  // Noiseless recovery.
  const auto& lt = test::lorentzian_truth;
  const FitResult lf = fit_lorentzian(test::lorentzian_data());
  v.rel("Lorentzian fwhm", lf.value("fwhm_hz"), lt.fwhm, 1e-8);
  v.rel("Lorentzian area", lf.value("area"), lt.area, 1e-8);

  const LoopModel loop = test::loop_truth();
  ClosedLoopGuess guess;
  guess.gain = 30.0;
  guess.phase = loop.filter.phase_offset + 0.2;
  const FitResult cf = fit_closed_loop(test::inloop_data(), test::inloop_fixed(), guess);
  v.rel("closed-loop gain", cf.value("gain"), loop.filter.gain, 1e-8);
  v.rel("closed-loop n_imp", cf.value("n_imp"), 3.2e-5, 1e-8);

  const auto& ht = test::heating_truth;
  const FitResult hf = fit_inverse_area(test::heating_data(), HeatingModelKind::dba_heating, ht.gamma0, ht.area0);
  v.rel("heating a_dba", hf.value("a_dba"), ht.a_dba, 1e-8);
  v.rel("heating a_eh", hf.value("a_eh"), ht.a_eh, 1e-8);

  const auto gf = fit_q_vs_pressure(test::gas_data(), test::gas_material(), angular(1.3e6));
  v.rel("gas Q0", gf.q0, 1.55e8, 1e-8);
  v.rel("gas a_Q", gf.a_q, 1.0, 1e-8);

  const auto& rt = test::reflection_truth;
  const FitResult rf = fit_reflection_dip(test::reflection_data(), rt.eta_r);
  v.rel("reflection kappa", rf.value("kappa_hz"), hertz(rt.kappa), 1e-8);
  v.rel("reflection asym", rf.value("asym"), rt.asym, 1e-8);

  v.rel("tone area", tone_area(test::tone_data(1.5e6, 1e-9, 1e-14), 1.5e6, 500.0), 1e-9, 1e-8);

  // Noisy recovery, 3% multiplicative noise.
  monte_carlo(v, "Lorentzian fwhm", lt.fwhm, [](std::uint64_t s) {
    return fit_lorentzian(test::noisy(test::lorentzian_data(), 0.03, s)).value("fwhm_hz");
  });
  monte_carlo(v, "closed-loop n_imp", 3.2e-5, [&](std::uint64_t s) {
    return fit_closed_loop(test::noisy(test::inloop_data(), 0.03, 100 + s), test::inloop_fixed(), guess).value("n_imp");
  }, 10);
  monte_carlo(v, "reflection kappa", hertz(rt.kappa), [&](std::uint64_t s) {
    Spectrum d = test::reflection_data();
    std::mt19937_64 rng(200 + s);
    std::normal_distribution<double> n(0.0, 0.02 * rt.eta_L);
    for (double& x : d.values) x += n(rng);
    return fit_reflection_dip(d, rt.eta_r).value("kappa_hz");
  });
  monte_carlo(v, "heating a_dba", ht.a_dba, [&](std::uint64_t s) {
    std::mt19937_64 rng(300 + s);
    std::normal_distribution<double> n(0.0, 0.02);
    auto pts = test::heating_data();
    for (auto& p : pts) p.area *= 1.0 + n(rng);
    return fit_inverse_area(pts, HeatingModelKind::dba_heating, ht.gamma0, ht.area0).value("a_dba");
  });
  monte_carlo(v, "heating a_eh (1e-4/uW, 5% noise)", 100.0, [&](std::uint64_t s) {
    return fit_inverse_area(test::heating_noisy(100.0, 0.05, 350 + s), HeatingModelKind::dba_heating, ht.gamma0,
                            ht.area0)
        .value("a_eh");
  });
  monte_carlo(v, "gas Q0", 1.55e8, [&](std::uint64_t s) {
    std::mt19937_64 rng(400 + s);
    std::normal_distribution<double> n(0.0, 0.02);
    auto pts = test::gas_data();
    for (auto& p : pts) p.q *= 1.0 + n(rng);
    return fit_q_vs_pressure(pts, test::gas_material(), angular(1.3e6)).q0;
  });

  // Zero-intercept gain line with 3% noise.
  std::mt19937_64 rng(500);
  std::normal_distribution<double> n(0.0, 0.03);
  std::vector<double> x, y;
  for (int i = 1; i <= 20; ++i) {
    x.push_back(i * 0.5);
    y.push_back(2.5 * x.back() * (1.0 + n(rng)));
  }
  v.rel("zero-intercept slope", fit_zero_intercept(x, y).slope, 2.5, 0.02);
}

void tin(Verdict& v) {
  const auto e = phase_expansion(0.0);
  const bool exact = e.coeffs[0] == 0.0 && e.coeffs[1] == 1.0 && e.coeffs[2] == 0.0 && e.coeffs[3] == 1.0;
  std::ostringstream got;
  got << "(" << e.coeffs[0] + 0.0 << "," << e.coeffs[1] + 0.0 << "," << e.coeffs[2] + 0.0 << ","
      << e.coeffs[3] + 0.0 << ")";
  // Independent third derivative of the exact quadrature at resonance, in the
  // same normalisation: q = -2 (c1 d + c3 d^3 + ...).
  const double h = 1e-2;
  const double d3 = (phase_quadrature(2 * h) - 2 * phase_quadrature(h) + 2 * phase_quadrature(-h) -
                     phase_quadrature(-2 * h)) / (2 * h * h * h);
  got << "; finite-difference c3 " << d3 / 6.0 / -2.0;
  v.flag(exact, "expansion at 0 = " + got.str() + ", expected (0,1,0,1)");

  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  const double rho = 0.6, c = std::sqrt(1.0 - rho * rho);
  double x = n(rng), acc = 0.0;
  const int count = 1'000'000;
  for (int i = 0; i < count; ++i) {
    const double next = rho * x + c * n(rng);
    acc += x * next * next * next;
    x = next;
  }
  v.rel("<x x'^3> / (3 sigma^2 <x x'>)", acc / count / (3.0 * rho), 1.0, 0.05);

  const Spectrum s = read_spectrum_csv(test::data_file("detuning_spectrum.csv"));
  double p = 0.0;
  for (double val : s.values) p += val * s.step();
  const auto t = triple_convolution_spectrum(s);
  double p3 = 0.0;
  for (double val : t.spectrum.values) p3 += val * t.spectrum.step();
  v.rel("triple convolution power / input power^3", p3, p * p * p, 0.01);
}

void lineshape(Verdict& v) {
  const Spectrum scan = read_spectrum_csv(test::data_file("reflection_dip.csv"));
  const FitResult f = fit_reflection_dip(scan, bundled().calibration.eta_r);
  v.rel("fitted kappa/2pi [MHz]", f.value("kappa_hz") / 1e6, hertz(bundled().cavity.kappa) / 1e6, 0.01);

  const ReflectionModel m{bundled().calibration.eta_r, f.value("eta_L"), f.value("asym"), angular(f.value("kappa_hz"))};
  std::vector<double> d;
  for (int i = -2000; i <= 2000; ++i) d.push_back(angular(1e6) * i);
  const ReflectionCurve c = reflection_dip(m, d);
  double odd = 0.0, scale = 0.0, recon = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    odd += c.dispersive[i];
    scale += std::abs(c.dispersive[i]);
    recon = std::max(recon, std::abs(m.eta_r - c.lorentzian[i] + c.dispersive[i] - c.total[i]));
  }
  v.check(std::abs(odd) <= 1e-12 * scale, "dispersive part sum / |sum|", std::abs(odd) / scale, 0.0, 1e-12);
  v.check(recon <= 1e-15, "Lorentzian + dispersive reconstruction", recon, 0.0, 1e-15);
}

void gas(Verdict& v) {
  const auto& c = bundled();
  const GasMaterial mat{c.gas.density, c.gas.thickness, c.gas.molar_mass, c.gas.temperature};
  v.rel("Q_D(2e-5 Pa)", gas_damping_q(mat, c.mechanical.omega_m, 2e-5), 1785447833.8094653, 1e-10);
  GasDampingModel g;
  g.q0 = c.mechanical.omega_m / c.mechanical.gamma_m;
  g.a_q = 1.0;
  g.material = mat;
  g.omega_m = c.mechanical.omega_m;
  const double inc = g.quality(c.gas.pressure_low) / g.quality(c.gas.pressure_high) - 1.0;
  v.check(inc >= 0.05 && inc <= 0.12, "Q increase", inc, 0.085, 0.035);
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"derived quantities", derived_quantities},
      {"sideband limits", sideband_limits},
      {"anchor occupancy", anchor_occupancy},
      {"feedback floors", feedback_floors},
      {"imprecision budget", imprecision},
      {"cold-damping analytics", cold_damping},
      {"simulation oracle", simulation},
      {"fitting estimators", fitting},
      {"intermodulation oracles", tin},
      {"lineshape", lineshape},
      {"gas damping", gas},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " threw: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failed;
    std::printf("%-4s criterion %2zu %-24s [%.1f s] %s\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), secs, v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
