// Writes the deterministic synthetic data sets under data/ that the CLI
// examples and golden tests run on. Usage: gen_example_data <paper.cfg> <outdir>

#include "optocool/config.hpp"
#include "optocool/constants.hpp"
#include "optocool/fit.hpp"
#include "optocool/loop.hpp"
#include "optocool/report.hpp"
#include "optocool/spectrum.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

using namespace optocool;

namespace {

std::mt19937_64 rng(20230601);

double jitter(double value, double rel) {
  std::normal_distribution<double> n(0.0, rel);
  return value * (1.0 + n(rng));
}

void save(const std::string& dir, const std::string& name, const Spectrum& s) {
  write_spectrum_csv(dir + "/" + name, s);
  std::cout << "wrote " << dir << "/" << name << " (" << s.size() << " points)\n";
}

Spectrum lorentzian_spectrum(const Scenario& s) {
  const Lorentzian l{hertz(s.omega_total), hertz(s.gamma_total), 2e-7, 4e-12};
  const FrequencyGrid grid = FrequencyGrid::covering(l.center - 40.0 * l.fwhm, l.center + 40.0 * l.fwhm, l.fwhm / 20.0);
  Spectrum out = Spectrum::on_grid(grid, SpectrumUnits::volts2_per_hz);
  for (std::size_t i = 0; i < grid.count; ++i) out.values[i] = jitter(l(out.freqs[i]), 0.03);
  out.metadata.emplace_back("source", "synthetic Lorentzian with 3% noise");
  return out;
}

// Sideband-cooled anchor in volts: S_xx / k + floor.
Spectrum anchor_spectrum(const Scenario& s, double k) {
  LoopModel open = s.loop;
  open.filter.gain = 0.0;
  const double f0 = hertz(s.omega_total), w = hertz(s.gamma_total);
  const FrequencyGrid grid = FrequencyGrid::covering(f0 - 100.0 * w, f0 + 100.0 * w, w / 20.0);
  Spectrum out = Spectrum::on_grid(grid, SpectrumUnits::volts2_per_hz);
  for (std::size_t i = 0; i < grid.count; ++i)
    out.values[i] = jitter(displacement_psd_at(open, angular(out.freqs[i])) / k, 0.02) + 1e-13;
  out.metadata.emplace_back("source", "synthetic anchor spectrum, k=1e-16 m2/V2, floor 1e-13 V2/Hz");
  return out;
}

Spectrum inloop_spectrum(const Scenario& s, double gain) {
  LoopModel m = s.loop;
  m.filter.gain = gain;
  const double f0 = hertz(s.omega_total);
  const FrequencyGrid grid = FrequencyGrid::covering(f0 - 30e3, f0 + 30e3, 20.0);
  Spectrum out = Spectrum::on_grid(grid, SpectrumUnits::m2_per_hz);
  for (std::size_t i = 0; i < grid.count; ++i) out.values[i] = jitter(inloop_psd_at(m, angular(out.freqs[i])), 0.02);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", gain);
  out.metadata.emplace_back("filter_gain", buf);
  return out;
}

Spectrum reflection_scan(const ExperimentConfig& cfg) {
  const ReflectionModel m{cfg.calibration.eta_r, 0.35, 0.15, cfg.cavity.kappa};
  const FrequencyGrid grid = FrequencyGrid::covering(-2e9, 2e9, 4e6);
  Spectrum out = Spectrum::on_grid(grid, SpectrumUnits::ratio);
  std::normal_distribution<double> n(0.0, 2e-3);
  for (std::size_t i = 0; i < grid.count; ++i) out.values[i] = reflection_at(m, angular(out.freqs[i])) + n(rng);
  out.metadata.emplace_back("source", "synthetic reflection dip, eta_L=0.35, asym=0.15");
  return out;
}

Spectrum freqnoise_spectrum(const ExperimentConfig& cfg) {
  const double tone_hz = hertz(cfg.calibration.omega_mod);
  const FrequencyGrid grid = FrequencyGrid::covering(tone_hz - 5e5, tone_hz + 5e5, 50.0);
  Spectrum out = Spectrum::on_grid(grid, SpectrumUnits::volts2_per_hz);
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double f = out.freqs[i];
    out.values[i] = jitter(1e-14 * (1.0 + 2e5 / f), 0.05);
    if (std::abs(f - tone_hz) < 0.5 * grid.step) out.values[i] += 1e-9 / grid.step;
  }
  out.metadata.emplace_back("source", "synthetic cavity noise with a 1e-9 V2 calibration tone");
  return out;
}

Spectrum detuning_spectrum() {
  const FrequencyGrid grid = FrequencyGrid::covering(0.0, 5e6, 500.0);
  Spectrum out = Spectrum::on_grid(grid, SpectrumUnits::per_hz);
  const double peaks[][3] = {{1.3e6, 2e3, 1e-9}, {1.9e6, 3e3, 4e-10}, {2.45e6, 3e3, 2e-10}};
  for (std::size_t i = 0; i < grid.count; ++i) {
    double v = 1e-19;
    for (const auto& p : peaks) {
      const Lorentzian l{p[0], p[1], p[2], 0.0};
      v += l(out.freqs[i]);
    }
    out.values[i] = v;
  }
  out.metadata.emplace_back("source", "synthetic normalised detuning spectrum, three thermal peaks");
  return out;
}

void write_table(const std::string& path, const std::string& header,
                 const std::vector<std::pair<double, double>>& rows, const std::string& comment) {
  std::ofstream out(path);
  out << "# " << comment << "\n" << header << "\n";
  char buf[80];
  for (const auto& [a, b] : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", a, b);
    out << buf;
  }
  std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";
}

} // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: gen_example_data <paper.cfg> <outdir>\n";
    return 2;
  }
  try {
    const ExperimentConfig cfg = load_config(argv[1]);
    const Scenario s = build_scenario(cfg);
    const std::string dir = argv[2];

    save(dir, "lorentzian_vv.csv", lorentzian_spectrum(s));
    save(dir, "anchor_vv.csv", anchor_spectrum(s, 1e-16));
    save(dir, "anchor_target_vv.csv", anchor_spectrum(s, 1e-16));
    save(dir, "inloop_syy.csv", inloop_spectrum(s, 0.3 * s.optimal_filter_gain));
    save(dir, "reflection_dip.csv", reflection_scan(cfg));
    save(dir, "freqnoise_vv.csv", freqnoise_spectrum(cfg));
    save(dir, "detuning_spectrum.csv", detuning_spectrum());

    const GasMaterial mat{cfg.gas.density, cfg.gas.thickness, cfg.gas.molar_mass, cfg.gas.temperature};
    GasDampingModel gas;
    gas.q0 = 1.55e8;
    gas.a_q = 1.0;
    gas.material = mat;
    gas.omega_m = cfg.mechanical.omega_m;
    std::vector<std::pair<double, double>> qp;
    for (double p : {1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3}) qp.emplace_back(p, jitter(gas.quality(p), 0.02));
    write_table(dir + "/q_vs_pressure.csv", "pressure_Pa,q", qp, "synthetic Q versus pressure, Q0=1.55e8, a_Q=1");

    HeatingModel heat;
    heat.gamma0 = s.mode.gamma_m + s.gamma_probe;
    heat.a_dba = (s.gamma_total - heat.gamma0) / cfg.cooling.power;
    heat.area0 = 1e-6;
    std::vector<std::pair<double, double>> areas;
    for (double p : {0.0, 100e-6, 200e-6, 300e-6, 400e-6, 500e-6, 600e-6, 780e-6})
      areas.emplace_back(p, jitter(heat.area0 / heat.inverse_area(p), 0.03));
    write_table(dir + "/heating_areas.csv", "power_W,area", areas,
                "synthetic spectral areas (V2) versus cooling power, no excess heating");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
