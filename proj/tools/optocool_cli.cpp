// Command-line front end. Every subcommand reads the experiment config and
// prints JSON or CSV on stdout; see `optocool --help`.

#include "optocool/config.hpp"
#include "optocool/constants.hpp"
#include "optocool/error.hpp"
#include "optocool/fit.hpp"
#include "optocool/report.hpp"
#include "optocool/spectrum.hpp"
#include "optocool/timesim.hpp"
#include "optocool/tin.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace optocool;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

// Plain numeric table: optional '#' comments, one header row, comma-separated numbers.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw InputError("table has no column '" + name + "'");
  }
};

Table read_table(const std::string& path, std::size_t expected_columns) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  Table t;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != expected_columns)
      throw InputError(path + ":" + std::to_string(n) + ": expected " + std::to_string(expected_columns) +
                       " columns, found " + std::to_string(cells.size()));
    if (t.columns.empty()) {
      t.columns = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (c.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(c);
      } catch (const std::logic_error&) {
        throw InputError(path + ":" + std::to_string(n) + ": cannot parse number '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw InputError(path + ": no data rows");
  return t;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw InputError("cannot write '" + out_path + "'");
  out << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string format_row(std::initializer_list<double> values) {
  std::string row;
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    if (!row.empty()) row += ",";
    row += buf;
  }
  return row + "\n";
}

ordered_json spectrum_summary(const Spectrum& s) {
  ordered_json j;
  j["units"] = std::string(to_string(s.units));
  j["points"] = s.size();
  j["start"] = quantity(s.freqs.front(), "Hz");
  j["step"] = quantity(s.step(), "Hz");
  return j;
}

struct Options {
  std::string config;
  std::string data;
  std::string out;
  bool text = false;
  // simulate
  std::optional<double> dt, duration, gain, n_th, gamma_hz, n_imp, delay, phase;
  std::optional<std::int64_t> seed, segment;
  std::string series, channel = "x";
  // loop, sweep-gain
  std::vector<double> gains;
  std::optional<double> gain_min, gain_max, grid_min_hz, grid_max_hz, grid_step_hz;
  std::optional<std::int64_t> gain_points;
  // calibrate
  std::optional<double> occupancy;
  std::string apply;
  // fit-loop
  std::optional<double> gain_guess, phase_guess, n_imp_guess;
  // fit-heating
  std::optional<double> gamma0_hz;
  // cal-freqnoise
  std::string lambda = "less-favourable";
};

int cmd_report(const Options& o) {
  emit(dump(full_report(build_scenario(load_config(o.config)))), o.out);
  return exit_ok;
}

int cmd_limits(const Options& o) {
  const Scenario s = build_scenario(load_config(o.config));
  emit(o.text ? limits_text(s) : dump(limits_report(s)), o.out);
  return exit_ok;
}

int cmd_backaction(const Options& o) {
  emit(dump(backaction_report(build_scenario(load_config(o.config)))), o.out);
  return exit_ok;
}

int cmd_loop(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  auto& l = cfg.loop;
  if (o.gain_min) l.gain_min = *o.gain_min;
  if (o.gain_max) l.gain_max = *o.gain_max;
  if (o.gain_points) l.gain_points = *o.gain_points;
  if (o.grid_min_hz) l.grid_min = angular(*o.grid_min_hz);
  if (o.grid_max_hz) l.grid_max = angular(*o.grid_max_hz);
  if (o.grid_step_hz) l.grid_step = angular(*o.grid_step_hz);
  if ((o.gain_min && !(*o.gain_min > 0.0)) || (o.gain_max && !(*o.gain_max > 0.0)))
    throw DomainError("sweep gains must be positive");
  if (l.gain_min > 0.0 && l.gain_max > 0.0 && !(l.gain_max > l.gain_min))
    throw DomainError("gain_max must exceed gain_min");
  if (o.gain_points && *o.gain_points < 2) throw DomainError("gain_points must be at least 2");
  if ((o.grid_min_hz && !(*o.grid_min_hz >= 0.0)) || (o.grid_step_hz && !(*o.grid_step_hz > 0.0)))
    throw DomainError("grid_min must be non-negative and grid_step positive");
  if ((o.grid_min_hz || o.grid_max_hz) && !(l.grid_max > l.grid_min))
    throw DomainError("grid_max must exceed grid_min");
  const Scenario s = build_scenario(cfg);
  const auto gains = o.gains.empty() ? gain_values(s) : o.gains;
  const auto sweep = gain_sweep(s.loop, gains, loop_grid(s), s.config.loop.spurious);
  std::string csv = "# units=quanta\n# integrated closed-loop occupancy versus filter gain\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "# optimal_filter_gain=%.10g unit_filter_response=%.10g\n", s.optimal_filter_gain,
                s.unit_response);
  csv += buf;
  csv += "gain,n_bar,stable\n";
  for (const auto& p : sweep) csv += format_row({p.gain, p.n_bar, p.stable ? 1.0 : 0.0});
  emit(csv, o.out);
  return exit_ok;
}

SimConfig sim_from(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  auto& sim = cfg.simulation;
  if (o.dt) sim.dt = *o.dt;
  if (o.duration) sim.duration = *o.duration;
  if (o.seed) sim.seed = *o.seed;
  if (o.n_th) sim.n_th = *o.n_th;
  if (o.gamma_hz) sim.gamma = angular(*o.gamma_hz);
  if (o.n_imp) sim.n_imp = *o.n_imp;
  if (o.gain) sim.gain = *o.gain;
  if (o.delay) cfg.loop.delay = *o.delay;
  if (o.phase) cfg.loop.phase = *o.phase;
  if (o.segment) sim.segment_length = *o.segment;
  return simulation_config(cfg);
}

std::size_t segment_from(const Options& o) {
  const ExperimentConfig cfg = load_config(o.config);
  const std::int64_t seg = o.segment ? *o.segment : cfg.simulation.segment_length;
  if (seg < 16) throw DomainError("segment_length must be at least 16 samples");
  return static_cast<std::size_t>(seg);
}

int cmd_simulate(const Options& o) {
  const SimConfig c = sim_from(o);
  const std::size_t seg = segment_from(o);
  const TimeSeries ts = simulate(c);
  if (!o.series.empty()) {
    std::ofstream out(o.series);
    if (!out) throw InputError("cannot write '" + o.series + "'");
    out << "# units=m\n# dt=" << ts.dt << " s\nt_s,x_m,y_m\n";
    char buf[96];
    for (std::size_t i = 0; i < ts.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", ts.dt * static_cast<double>(i), ts.x[i], ts.y[i]);
      out << buf;
    }
  }
  if (o.channel != "x" && o.channel != "y") throw InputError("--channel must be x or y");
  const auto& samples = o.channel == "x" ? ts.x : ts.y;
  Spectrum psd = welch_psd(samples, ts.dt, seg, load_config(o.config).simulation.overlap);
  psd.metadata.emplace_back("channel", o.channel);
  psd.metadata.emplace_back("filter_gain", std::to_string(c.filter.gain));
  std::ostringstream csv;
  write_spectrum_csv(csv, psd);
  emit(csv.str(), o.out);
  return exit_ok;
}

int cmd_sweep_gain(const Options& o) {
  const SimConfig c = sim_from(o);
  const std::size_t seg = segment_from(o);
  std::vector<double> gains = o.gains;
  if (gains.empty()) gains = log_spaced(c.filter.gain / 10.0, c.filter.gain * 1.5, 7);
  const auto sweep = occupancy_vs_gain_sweep(c, gains, seg);
  std::string csv = "# units=quanta\n# simulated and modelled occupancy versus filter gain\n";
  csv += "gain,n_sim,n_model\n";
  for (const auto& p : sweep) csv += format_row({p.gain, p.n_sim, p.n_model});
  emit(csv, o.out);
  return exit_ok;
}

int cmd_fit_lorentzian(const Options& o) {
  const Spectrum s = read_spectrum_csv(o.data);
  ordered_json j;
  j["command"] = "fit-lorentzian";
  j["input"] = spectrum_summary(s);
  j["fit"] = fit_json(fit_lorentzian(s));
  // A density integrated over Hz: V2/Hz -> V2, 1/Hz -> 1.
  std::string area_unit(to_string(s.units));
  if (area_unit.ends_with("/Hz")) area_unit.resize(area_unit.size() - 3);
  j["units"] = {{"center_hz", "Hz"}, {"fwhm_hz", "Hz"}, {"area", area_unit},
                {"floor", std::string(to_string(s.units))}};
  emit(dump(j), o.out);
  return exit_ok;
}

int cmd_calibrate(const Options& o) {
  const Scenario s = build_scenario(load_config(o.config));
  const Spectrum vv = read_spectrum_csv(o.data);
  const double n = o.occupancy ? *o.occupancy : s.anchor_occupancy;
  const CalibrationConstant cal = calibrate_anchor(vv, n, s.quantities.x_zpf);
  ordered_json j;
  j["command"] = "calibrate";
  j["input"] = spectrum_summary(vv);
  j["anchor_occupancy"] = n;
  j["k"] = quantity(cal.k, "m2/V2");
  j["floor"] = quantity(cal.floor, std::string(to_string(vv.units)));
  if (!o.apply.empty()) {
    const Spectrum calibrated = apply_calibration(read_spectrum_csv(o.apply), cal, true);
    j["applied_to"] = spectrum_summary(calibrated);
    j["applied_occupancy"] = occupancy_from_psd(calibrated, s.quantities.x_zpf);
  }
  emit(dump(j), o.out);
  return exit_ok;
}

int cmd_fit_loop(const Options& o) {
  const Scenario s = build_scenario(load_config(o.config));
  const Spectrum syy = read_spectrum_csv(o.data);
  ClosedLoopFixed fixed{s.loop.mode, s.loop.filter, s.loop.s_ff_tot, zero_point_peak_psd(s.mode)};
  ClosedLoopGuess guess;
  guess.gain = o.gain_guess ? *o.gain_guess : s.loop.filter.gain;
  guess.phase = o.phase_guess ? *o.phase_guess : s.loop.filter.phase_offset;
  guess.n_imp = o.n_imp_guess ? *o.n_imp_guess : s.n_imp;
  ordered_json j;
  j["command"] = "fit-loop";
  j["input"] = spectrum_summary(syy);
  j["fit"] = fit_json(fit_closed_loop(syy, fixed, guess));
  j["units"] = {{"gain", "1"}, {"phase", "rad"}, {"n_imp", "quanta"}};
  emit(dump(j), o.out);
  return exit_ok;
}

int cmd_fit_dip(const Options& o) {
  const ExperimentConfig cfg = load_config(o.config);
  const Spectrum scan = read_spectrum_csv(o.data);
  const FitResult fit = fit_reflection_dip(scan, cfg.calibration.eta_r);
  ordered_json j;
  j["command"] = "fit-dip";
  j["eta_r"] = cfg.calibration.eta_r;
  j["fit"] = fit_json(fit);
  j["units"] = {{"kappa_hz", "Hz"}, {"eta_L", "1"}, {"asym", "1"}};
  j["finesse"] = cfg.cavity.free_spectral_range() / fit.value("kappa_hz");
  emit(dump(j), o.out);
  return exit_ok;
}

int cmd_fit_qp(const Options& o) {
  const ExperimentConfig cfg = load_config(o.config);
  if (!cfg.has_section("gas")) throw InputError("fit-qp needs a [gas] section");
  const Table t = read_table(o.data, 2);
  const std::size_t ip = t.column("pressure_Pa"), iq = t.column("q");
  std::vector<PressurePoint> pts;
  for (const auto& r : t.rows) pts.push_back({r[ip], r[iq]});
  const GasMaterial mat{cfg.gas.density, cfg.gas.thickness, cfg.gas.molar_mass, cfg.gas.temperature};
  const GasDampingModel m = fit_q_vs_pressure(pts, mat, cfg.mechanical.omega_m);
  ordered_json j;
  j["command"] = "fit-qp";
  j["q0"] = {{"value", m.q0}, {"std_error", m.q0_stderr}};
  j["a_q"] = {{"value", m.a_q}, {"std_error", m.a_q_stderr}};
  if (cfg.gas.pressure_low > 0.0 && cfg.gas.pressure_high > 0.0) {
    const double q_low = m.quality(cfg.gas.pressure_low), q_high = m.quality(cfg.gas.pressure_high);
    j["q_at_pressure_low"] = q_low;
    j["q_at_pressure_high"] = q_high;
    j["q_increase"] = q_low / q_high - 1.0;
    j["gas_q_at_pressure_high"] = gas_damping_q(mat, cfg.mechanical.omega_m, cfg.gas.pressure_high);
  }
  emit(dump(j), o.out);
  return exit_ok;
}

int cmd_fit_heating(const Options& o) {
  const Scenario s = build_scenario(load_config(o.config));
  const Table t = read_table(o.data, 2);
  const std::size_t ip = t.column("power_W"), ia = t.column("area");
  std::vector<AreaPoint> pts;
  for (const auto& r : t.rows) pts.push_back({r[ip], r[ia]});
  const double gamma0 = o.gamma0_hz ? angular(*o.gamma0_hz) : s.mode.gamma_m + s.gamma_probe;
  ordered_json j;
  j["command"] = "fit-heating";
  j["gamma0"] = quantity(hertz(gamma0), "Hz");
  j["dba_only"] = fit_json(fit_inverse_area(pts, HeatingModelKind::dba_only, gamma0));
  j["dba_heating"] = fit_json(fit_inverse_area(pts, HeatingModelKind::dba_heating, gamma0));
  j["units"] = {{"a_dba", "rad/s/W"}, {"a_eh", "1/W"}};
  emit(dump(j), o.out);
  return exit_ok;
}

int cmd_cal_freqnoise(const Options& o) {
  const Scenario s = build_scenario(load_config(o.config));
  const auto& c = s.config.calibration;
  const Spectrum vv = read_spectrum_csv(o.data);
  const FrequencyNoiseCal cal = frequency_noise_calibration(c.lock_ratio, c.phi_mod, c.omega_mod, s.config.cavity.kappa);
  double lambda = cal.less_favourable_lambda();
  if (o.lambda == "low") lambda = cal.lambda_low;
  else if (o.lambda == "high") lambda = cal.lambda_high;
  else if (o.lambda != "less-favourable") throw InputError("--lambda must be low, high or less-favourable");
  const double area = tone_area(vv, hertz(c.omega_mod), hertz(c.tone_half_width));
  const double pull = s.config.coupling.g0 / s.quantities.x_zpf;
  const CalibratedNoise noise = calibrate_frequency_noise(vv, cal, lambda, area, pull);
  ordered_json j;
  j["command"] = "cal-freqnoise";
  j["lambda_low"] = cal.lambda_low;
  j["lambda_high"] = cal.lambda_high;
  j["lambda_used"] = lambda;
  j["tone_area"] = quantity(area, "V2");
  j["frequency_pull"] = quantity(pull, "rad/s/m");
  j["displacement"] = spectrum_summary(noise.displacement);
  emit(dump(j), o.out);
  if (!o.series.empty()) write_spectrum_csv(o.series, noise.displacement);
  return exit_ok;
}

int cmd_tin(const Options& o) {
  const Scenario s = build_scenario(load_config(o.config));
  ordered_json j = tin_report(s);
  if (!o.data.empty()) {
    const Spectrum su = read_spectrum_csv(o.data);
    const TripleConvolution t = triple_convolution_spectrum(su);
    j["triple_convolution"] = spectrum_summary(t.spectrum);
    j["triple_convolution"]["input_power"] = integrate_psd(su, false);
    j["triple_convolution"]["output_power"] = integrate_psd(t.spectrum, false);
    j["triple_convolution"]["edge_fraction"] = t.edge_fraction;
    j["triple_convolution"]["leakage_warning"] = t.leakage_warning;
    if (!o.series.empty()) write_spectrum_csv(o.series, t.spectrum);
  }
  emit(dump(j), o.out);
  return exit_ok;
}

int run(int argc, char** argv) {
  CLI::App app{"optocool: optomechanical cooling budgets, feedback loop models and fits"};
  app.require_subcommand(1);
  Options o;

  struct Entry {
    const char* name;
    const char* help;
    std::function<int(const Options&)> fn;
    bool needs_config;
    bool needs_data;
  };
  const std::vector<Entry> entries{
      {"report", "full cooling budget as JSON", cmd_report, true, false},
      {"limits", "sideband and feedback occupancy limits", cmd_limits, true, false},
      {"loop", "closed-loop occupancy versus gain (CSV gain,n_bar,stable)", cmd_loop, true, false},
      {"sweep-gain", "time-domain occupancy versus gain (CSV gain,n_sim,n_model)", cmd_sweep_gain, true, false},
      {"simulate", "time-domain closed-loop run; Welch PSD CSV on stdout", cmd_simulate, true, false},
      {"fit-lorentzian", "Lorentzian plus floor fit of a spectrum CSV", cmd_fit_lorentzian, false, true},
      {"calibrate", "voltage-to-displacement calibration from an anchor spectrum", cmd_calibrate, true, true},
      {"fit-loop", "fit gain, phase and imprecision to an in-loop spectrum", cmd_fit_loop, true, true},
      {"fit-dip", "fit the asymmetric cavity reflection dip", cmd_fit_dip, true, true},
      {"fit-qp", "fit quality factor versus pressure", cmd_fit_qp, true, true},
      {"fit-heating", "fit inverse spectral area versus cooling power", cmd_fit_heating, true, true},
      {"cal-freqnoise", "calibrate a cavity noise spectrum with a phase-modulation tone", cmd_cal_freqnoise, true, true},
      {"tin", "thermal intermodulation scalings; optional triple convolution", cmd_tin, true, false},
      {"backaction", "optical spring and damping of the configured beams", cmd_backaction, true, false},
  };

  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    if (e.needs_config) sub->add_option("config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
    if (e.needs_data) sub->add_option("data", o.data, "input data file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", o.out, "write the main output here instead of stdout");
    subs.emplace_back(sub, &e);
  }
  const auto find = [&](const char* name) { return app.get_subcommand(name); };

  find("limits")->add_flag("--text", o.text, "aligned plain-text table instead of JSON");
  {
    CLI::App* loop = find("loop");
    loop->add_option("--gains", o.gains, "explicit filter gains")->delimiter(',');
    loop->add_option("--gain-min", o.gain_min, "lowest gain of the log sweep");
    loop->add_option("--gain-max", o.gain_max, "highest gain of the log sweep");
    loop->add_option("--gain-points", o.gain_points, "number of sweep gains");
    loop->add_option("--grid-min", o.grid_min_hz, "frequency grid start, Hz");
    loop->add_option("--grid-max", o.grid_max_hz, "frequency grid end, Hz");
    loop->add_option("--grid-step", o.grid_step_hz, "frequency grid resolution, Hz");
  }

  for (const char* name : {"simulate", "sweep-gain"}) {
    CLI::App* sub = find(name);
    sub->add_option("--dt", o.dt, "time step, s");
    sub->add_option("--duration", o.duration, "duration, s");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--n-th", o.n_th, "bath occupancy");
    sub->add_option("--gamma", o.gamma_hz, "intrinsic linewidth, Hz");
    sub->add_option("--n-imp", o.n_imp, "imprecision in quanta");
    sub->add_option("--delay", o.delay, "loop delay, s");
    sub->add_option("--phase", o.phase, "filter phase offset, rad");
    sub->add_option("--segment", o.segment, "Welch segment length");
  }
  find("simulate")->add_option("--gain", o.gain, "filter gain");
  find("simulate")->add_option("--series", o.series, "also write the time series CSV here");
  find("simulate")->add_option("--channel", o.channel, "spectrum of x (true motion) or y (measured)");
  find("sweep-gain")->add_option("--gains", o.gains, "explicit filter gains")->delimiter(',');

  find("calibrate")->add_option("--occupancy", o.occupancy, "anchor occupancy; default from the config");
  find("calibrate")->add_option("--apply", o.apply, "voltage spectrum to convert with the calibration")->check(CLI::ExistingFile);
  find("fit-loop")->add_option("--gain-guess", o.gain_guess, "starting filter gain");
  find("fit-loop")->add_option("--phase-guess", o.phase_guess, "starting phase offset, rad");
  find("fit-loop")->add_option("--n-imp-guess", o.n_imp_guess, "starting imprecision, quanta");
  find("fit-heating")->add_option("--gamma0", o.gamma0_hz, "linewidth without cooling beam, Hz");
  find("cal-freqnoise")->add_option("--lambda", o.lambda, "low, high or less-favourable");
  find("cal-freqnoise")->add_option("--spectrum-out", o.series, "write the displacement spectrum CSV here");
  find("tin")->add_option("--spectrum", o.data, "normalised detuning spectrum to convolve")->check(CLI::ExistingFile);
  find("tin")->add_option("--spectrum-out", o.series, "write the triple convolution CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const bool known = argc > 1 && std::any_of(entries.begin(), entries.end(),
                                               [&](const auto& x) { return x.name == argv[1]; });
    if (argc > 1 && argv[1][0] != '-' && !known)
      std::cerr << "error: unknown subcommand '" << argv[1] << "'\n";
    else
      std::cerr << "error: " << e.what() << "\n";
    std::cerr << "subcommands:";
    for (const auto& e2 : entries) std::cerr << " " << e2.name;
    std::cerr << "\nrun 'optocool --help' for usage\n";
    return exit_validation;
  }

  for (const auto& [sub, entry] : subs)
    if (sub->parsed()) return entry->fn(o);
  return exit_validation;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_validation;
  } catch (const DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return exit_validation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
