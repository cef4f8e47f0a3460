#include "optocool/report.hpp"

#include "checks.hpp"
#include "optocool/constants.hpp"
#include "optocool/error.hpp"
#include "optocool/tin.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace optocool {

using constants::two_pi;

ordered_json quantity(double value, const std::string& unit) {
  ordered_json q;
  q["value"] = value;
  q["unit"] = unit;
  return q;
}

namespace {

ordered_json hz(double angular) { return quantity(hertz(angular), "Hz"); }

ordered_json conventions() {
  ordered_json c;
  c["psd"] = "single-sided";
  c["linewidths"] = "FWHM energy decay rates";
  c["frequencies"] = "reported in Hz (ordinary frequency); stored internally in rad/s";
  c["occupancy"] = "phonon quanta; integrated spectra subtract the zero-point 1/2";
  return c;
}

} // namespace

Scenario build_scenario(const ExperimentConfig& config) {
  Scenario s;
  s.config = config;
  s.mode = config.mechanical;
  s.quantities = derive_mode_quantities(s.mode);
  s.eta_det = detection_efficiency(config.detection, config.fiber_convention);

  const double kappa = config.cavity.kappa;
  const double g0 = config.coupling.g0;

  s.cooling.label = BeamRole::cooling;
  s.cooling.detuning = config.cooling.detuning;
  s.cooling.power_in = config.cooling.power;
  s.cooling_photons = intracavity_photons(config.cavity, s.cooling);
  if (config.cooling.g > 0.0) {
    s.cooling.g = config.cooling.g;
    if (s.cooling_photons > 0.0)
      s.incoupling = s.cooling.g * s.cooling.g / (g0 * g0 * s.cooling_photons);
  } else {
    s.cooling.g = g0 * std::sqrt(s.cooling_photons);
  }

  s.probe.label = BeamRole::probe;
  s.probe.detuning = config.probe.detuning;
  s.probe.power_in = config.probe.power;
  s.probe.g = std::sqrt(config.probe.cooperativity * kappa * s.quantities.gamma_decoherence / 4.0);

  const OpticalBeam beams[] = {s.cooling, s.probe};
  s.cooling_backaction = backaction(s.mode, kappa, beams);
  // The measured probe damping stands in for the probe's own backaction, which
  // vanishes at zero detuning but is finite in practice.
  const double probe_formula = optical_damping(s.probe.g, s.probe.detuning, kappa, s.mode.omega_m);
  s.gamma_probe = config.probe.damping > 0.0 ? config.probe.damping : probe_formula;
  const double gamma_cooling = s.cooling_backaction.gamma_opt - probe_formula;
  s.gamma_total = s.mode.gamma_m + s.gamma_probe + gamma_cooling;
  s.omega_total = s.mode.omega_m + s.cooling_backaction.delta_omega;
  if (!(s.gamma_total > 0.0))
    throw InstabilityError("total damping " + detail::fmt_value(hertz(s.gamma_total)) +
                           " Hz is not positive; the configured beams anti-damp the mode");

  s.n_min_cooling = min_sideband_occupancy(s.cooling.detuning < 0.0 ? s.cooling.detuning : -kappa / 2.0,
                                           kappa, s.mode.omega_m);
  s.n_min_half_kappa = min_sideband_occupancy(-kappa / 2.0, kappa, s.mode.omega_m);
  s.optimal = optimal_detuning(kappa, s.mode.omega_m);

  if (config.loop.anchor_occupancy) {
    s.anchor_occupancy = *config.loop.anchor_occupancy;
    s.anchor_from_config = true;
  } else {
    s.anchor_occupancy = sideband_occupancy(s.quantities.n_th, s.mode.gamma_m, config.probe.cooperativity,
                                            s.n_min_cooling, gamma_cooling, s.gamma_total);
  }

  ImprecisionInputs in;
  in.c_q = config.probe.cooperativity;
  in.eta_det = s.eta_det;
  in.x_zpf = s.quantities.x_zpf;
  in.n_th = s.quantities.n_th;
  in.gamma_m = s.mode.gamma_m;
  in.g0 = g0;
  in.s_omega_omega = config.noise.laser_frequency_asd * config.noise.laser_frequency_asd;
  in.s_xx_mirror = config.noise.mirror_displacement_asd * config.noise.mirror_displacement_asd;
  if (in.c_q > 0.0 && in.eta_det > 0.0) {
    s.imprecision = imprecision_budget(in);
    s.feedback_basic = feedback_min_occupancy_full(in.c_q, in.eta_det, 0.0, in.n_th, in.gamma_m, in.x_zpf);
    s.feedback_full = feedback_min_occupancy_full(in.c_q, in.eta_det, in.s_xx_mirror, in.n_th, in.gamma_m,
                                                  in.x_zpf);
  }

  // Closed loop around the optically dressed mode. The total force noise follows
  // from the anchor occupancy, n_tot = (n + 1/2) gamma_total / gamma_m.
  s.n_tot = (s.anchor_occupancy + 0.5) * s.gamma_total / s.mode.gamma_m;
  s.n_imp = config.noise.n_imp > 0.0 ? config.noise.n_imp
                                      : imprecision_to_quanta(s.imprecision.total(), s.mode);
  s.loop.mode = s.mode;
  s.loop.mode.omega_m = s.omega_total;
  s.loop.mode.gamma_m = s.gamma_total;
  s.loop.s_ff_tot = quanta_to_force(s.n_tot, s.mode);
  s.loop.s_xx_imp = quanta_to_imprecision(s.n_imp, s.mode);

  FeedbackFilter& f = s.loop.filter;
  f.delay = config.loop.delay;
  f.main_center = config.loop.center > 0.0 ? config.loop.center : s.omega_total;
  f.main_bandwidth = config.loop.bandwidth > 0.0 ? config.loop.bandwidth : s.mode.omega_m / 10.0;
  f.aux_stages = config.loop.aux;
  f.gain = 1.0;
  f.phase_offset = config.loop.phase ? *config.loop.phase : tune_phase(f, s.omega_total);
  {
    FeedbackFilter main_only = f;
    main_only.aux_stages.clear();
    s.unit_response = std::abs(filter_response(main_only, s.omega_total));
  }
  if (s.loop.s_xx_imp > 0.0 && s.loop.s_ff_tot > 0.0) {
    s.optimal_cold_damping = optimal_gain(s.loop.mode, s.loop.s_ff_tot, s.loop.s_xx_imp);
    s.optimal_filter_gain = s.optimal_cold_damping / s.unit_response;
  }
  f.gain = config.loop.gain ? *config.loop.gain : s.optimal_filter_gain;
  return s;
}

FrequencyGrid loop_grid(const Scenario& s) {
  const auto& l = s.config.loop;
  double lo = l.grid_min, hi = l.grid_max, step = l.grid_step;
  if (!(hi > lo)) {
    lo = 0.5 * s.omega_total;
    hi = 1.5 * s.omega_total;
  }
  if (!(step > 0.0)) step = s.gamma_total / min_points_per_linewidth;
  return FrequencyGrid::covering(hertz(lo), hertz(hi), hertz(step));
}

std::vector<double> gain_values(const Scenario& s) {
  const auto& l = s.config.loop;
  const double lo = l.gain_min > 0.0 ? l.gain_min : s.optimal_filter_gain / 1e3;
  const double hi = l.gain_max > 0.0 ? l.gain_max : s.optimal_filter_gain * 1e2;
  const auto n = l.gain_points > 1 ? static_cast<std::size_t>(l.gain_points) : std::size_t{31};
  return log_spaced(lo, hi, n);
}

FloorPrediction predicted_floor(const Scenario& s) {
  const FrequencyGrid grid = loop_grid(s);
  const auto gains = gain_values(s);
  const auto sweep = gain_sweep(s.loop, gains, grid, s.config.loop.spurious);
  std::size_t best = sweep.size();
  for (std::size_t i = 0; i < sweep.size(); ++i)
    if (sweep[i].stable && std::isfinite(sweep[i].n_bar) && (best == sweep.size() || sweep[i].n_bar < sweep[best].n_bar))
      best = i;
  if (best == sweep.size()) throw InstabilityError("no stable gain in the configured sweep");

  const auto occupancy = [&](double log_gain) {
    LoopModel m = s.loop;
    m.filter.gain = std::exp(log_gain);
    return occupancy_from_psd(closed_loop_displacement_psd(m, grid), zero_point_amplitude(m.mode));
  };
  // Golden-section refinement between the neighbours of the coarse minimum.
  double a = std::log(gains[best > 0 ? best - 1 : 0]);
  double b = std::log(gains[std::min(best + 1, gains.size() - 1)]);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = occupancy(c), fd = occupancy(d);
  for (int it = 0; it < 40 && b - a > 1e-6; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - r * (b - a);
      fc = occupancy(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + r * (b - a);
      fd = occupancy(d);
    }
  }
  FloorPrediction p;
  p.gain = std::exp(fc < fd ? c : d);
  p.n_bar = std::min(fc, fd);
  if (sweep[best].n_bar < p.n_bar) {
    p.gain = sweep[best].gain;
    p.n_bar = sweep[best].n_bar;
  }
  p.cold_damping = p.gain * s.unit_response;
  return p;
}

SimConfig simulation_config(const ExperimentConfig& config) {
  if (!config.has_section("simulation")) throw InputError("config has no [simulation] section");
  const auto& sim = config.simulation;
  SimConfig c;
  c.dt = sim.dt;
  c.duration = sim.duration;
  c.seed = static_cast<std::uint64_t>(sim.seed);
  c.mode = config.mechanical;
  c.mode.gamma_m = sim.gamma;
  c.mode = c.mode.with_bath_occupancy(sim.n_th);
  c.s_ff_tot = thermal_force_psd(c.mode);
  c.s_xx_imp = quanta_to_imprecision(sim.n_imp, c.mode);

  FeedbackFilter& f = c.filter;
  f.delay = config.loop.delay;
  f.main_center = config.loop.center > 0.0 ? config.loop.center : c.mode.omega_m;
  f.main_bandwidth = config.loop.bandwidth > 0.0 ? config.loop.bandwidth : c.mode.omega_m / 10.0;
  f.aux_stages = config.loop.aux;
  f.gain = 1.0;
  f.phase_offset = config.loop.phase ? *config.loop.phase : tune_phase(f, c.mode.omega_m);
  if (sim.gain) {
    f.gain = *sim.gain;
  } else {
    FeedbackFilter main_only = f;
    main_only.aux_stages.clear();
    f.gain = optimal_gain(c.mode, c.s_ff_tot, c.s_xx_imp) / std::abs(filter_response(main_only, c.mode.omega_m));
  }
  return c;
}

ordered_json inputs_json(const ExperimentConfig& config) {
  ordered_json out = ordered_json::object();
  for (const auto& e : config_entries(config)) {
    ordered_json item;
    if (e.text == "auto") item["value"] = "auto";
    else if (!e.value) continue;
    else if (e.unit.empty() && e.text.find_first_not_of("0123456789.eE+-") != std::string::npos)
      item["value"] = e.text; // named choice
    else item["value"] = *e.value;
    item["unit"] = e.unit;
    item["provenance"] = e.provenance;
    out[e.section][e.key] = item;
  }
  return out;
}

ExperimentConfig config_from_report(const ordered_json& report) {
  if (!report.contains("inputs")) throw InputError("report has no 'inputs' block");
  std::string text;
  for (const auto& [section, keys] : report.at("inputs").items()) {
    text += "[" + section + "]\n";
    for (const auto& [key, item] : keys.items()) {
      const auto& v = item.at("value");
      std::string value;
      if (v.is_string()) {
        value = v.get<std::string>();
      } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        value = buf;
        const auto unit = item.at("unit").get<std::string>();
        if (!unit.empty()) value += " " + unit;
      }
      text += key + " = " + value + "\n";
    }
  }
  ExperimentConfig cfg = parse_config(text, "<report>");
  // Restore provenance as recorded rather than as re-parsed.
  for (const auto& [section, keys] : report.at("inputs").items())
    for (const auto& [key, item] : keys.items())
      if (item.contains("provenance")) cfg.provenance[section + "." + key] = item.at("provenance").get<std::string>();
  return cfg;
}

namespace {

ordered_json derived_json(const Scenario& s) {
  ordered_json d;
  d["x_zpf"] = quantity(s.quantities.x_zpf, "m");
  d["q_factor"] = s.quantities.q_factor;
  d["n_th"] = s.quantities.n_th;
  d["gamma_decoherence"] = hz(s.quantities.gamma_decoherence);
  d["finesse"] = s.config.cavity.finesse();
  d["free_spectral_range"] = quantity(s.config.cavity.free_spectral_range(), "Hz");
  d["eta_det"] = s.eta_det;
  d["fiber_convention"] = s.config.fiber_convention == FiberLossConvention::power_ratio ? "power_ratio" : "amplitude";
  if (s.config.coupling.membrane_reflectivity > 0.0)
    d["g0_max"] = hz(g0_max(s.config.cavity, s.mode, s.config.coupling));
  d["probe_g"] = hz(s.probe.g);
  return d;
}

ordered_json backaction_json(const Scenario& s) {
  const double kappa = s.config.cavity.kappa, w = s.mode.omega_m;
  ordered_json b;
  ordered_json c;
  c["g"] = hz(s.cooling.g);
  c["detuning"] = hz(s.cooling.detuning);
  c["power"] = quantity(s.cooling.power_in, "W");
  c["intracavity_photons"] = s.cooling_photons;
  c["implied_incoupling"] = s.incoupling;
  c["spring_shift"] = hz(optical_spring(s.cooling.g, s.cooling.detuning, kappa, w));
  c["damping"] = hz(optical_damping(s.cooling.g, s.cooling.detuning, kappa, w));
  b["cooling"] = c;
  ordered_json p;
  p["g"] = hz(s.probe.g);
  p["detuning"] = hz(s.probe.detuning);
  p["spring_shift"] = hz(optical_spring(s.probe.g, s.probe.detuning, kappa, w));
  p["damping"] = hz(s.gamma_probe);
  b["probe"] = p;
  b["omega_total"] = hz(s.omega_total);
  b["gamma_total"] = hz(s.gamma_total);
  b["stable"] = s.gamma_total > 0.0;
  return b;
}

ordered_json sideband_json(const Scenario& s) {
  ordered_json l;
  l["n_min_at_cooling_detuning"] = s.n_min_cooling;
  l["n_min_at_half_kappa"] = s.n_min_half_kappa;
  l["optimal_detuning"] = hz(s.optimal.detuning);
  l["n_min_at_optimal_detuning"] = s.optimal.n_min;
  l["anchor_occupancy"] = s.anchor_occupancy;
  l["anchor_source"] = s.anchor_from_config ? "config" : "sideband prediction";
  return l;
}

ordered_json imprecision_json(const Scenario& s) {
  const auto& b = s.imprecision;
  ordered_json i;
  i["quantum_asd"] = quantity(std::sqrt(b.s_xx_quantum), "m/rtHz");
  i["laser_frequency_asd"] = quantity(std::sqrt(b.s_xx_laser_freq), "m/rtHz");
  i["mirror_asd"] = quantity(std::sqrt(b.s_xx_mirror), "m/rtHz");
  i["total_asd"] = quantity(std::sqrt(b.total()), "m/rtHz");
  i["frequency_pull"] = quantity(b.freq_pull, "rad/s/m");
  i["laser_figure"] = b.laser_figure;
  i["mirror_figure"] = b.mirror_figure;
  i["zero_point_peak_psd"] = quantity(zero_point_peak_psd(s.mode), "m2/Hz");
  return i;
}

ordered_json feedback_json(const Scenario& s) {
  ordered_json f;
  f["n_min_quantum_imprecision"] = s.feedback_basic.n_bar;
  f["n_min_with_mirror_noise"] = s.feedback_full.n_bar;
  f["n_tot"] = s.n_tot;
  f["n_imp"] = s.n_imp;
  f["imprecision_asd"] = quantity(std::sqrt(s.loop.s_xx_imp), "m/rtHz");
  f["force_asd"] = quantity(std::sqrt(s.loop.s_ff_tot), "N/rtHz");
  f["n_min_ideal_cold_damping"] = feedback_min_occupancy_basic(s.loop.s_ff_tot, s.loop.s_xx_imp).n_bar;
  f["optimal_cold_damping"] = s.optimal_cold_damping;
  f["optimal_filter_gain"] = s.optimal_filter_gain;
  f["filter_phase"] = quantity(s.loop.filter.phase_offset, "rad");
  f["unit_filter_response"] = s.unit_response;
  return f;
}

} // namespace

ordered_json full_report(const Scenario& s) {
  ordered_json r;
  r["command"] = "report";
  r["conventions"] = conventions();
  r["inputs"] = inputs_json(s.config);
  r["derived"] = derived_json(s);
  r["backaction"] = backaction_json(s);
  r["sideband"] = sideband_json(s);
  r["imprecision"] = imprecision_json(s);
  ordered_json fb = feedback_json(s);
  const FloorPrediction p = predicted_floor(s);
  ordered_json floor;
  floor["n_bar"] = p.n_bar;
  floor["filter_gain"] = p.gain;
  floor["cold_damping"] = p.cold_damping;
  floor["closed_loop_linewidth"] = hz(s.gamma_total * (1.0 + p.cold_damping));
  fb["predicted_floor"] = floor;
  r["feedback"] = fb;
  return r;
}

ordered_json limits_report(const Scenario& s) {
  ordered_json r;
  r["command"] = "limits";
  r["conventions"] = conventions();
  r["sideband"] = sideband_json(s);
  r["feedback"] = feedback_json(s);
  r["imprecision"] = imprecision_json(s);
  return r;
}

std::string limits_text(const Scenario& s) {
  std::ostringstream out;
  char line[160];
  const auto row = [&](const char* name, double value, const char* unit) {
    if (*unit)
      std::snprintf(line, sizeof line, "%-36s %16.6g  %s\n", name, value, unit);
    else
      std::snprintf(line, sizeof line, "%-36s %16.6g\n", name, value);
    out << line;
  };
  row("sideband limit at cooling detuning", s.n_min_cooling, "quanta");
  row("sideband limit at -kappa/2", s.n_min_half_kappa, "quanta");
  row("optimal detuning", hertz(s.optimal.detuning), "Hz");
  row("sideband limit at optimal detuning", s.optimal.n_min, "quanta");
  row("anchor occupancy", s.anchor_occupancy, "quanta");
  row("feedback limit, quantum imprecision", s.feedback_basic.n_bar, "quanta");
  row("feedback limit, with mirror noise", s.feedback_full.n_bar, "quanta");
  row("quantum imprecision", std::sqrt(s.imprecision.s_xx_quantum), "m/rtHz");
  row("laser noise figure", s.imprecision.laser_figure, "");
  row("mirror noise figure", s.imprecision.mirror_figure, "");
  row("total force noise", s.n_tot, "quanta");
  row("measured imprecision", s.n_imp, "quanta");
  row("optimal cold-damping gain", s.optimal_cold_damping, "");
  return out.str();
}

ordered_json backaction_report(const Scenario& s) {
  ordered_json r;
  r["command"] = "backaction";
  r["conventions"] = conventions();
  r["backaction"] = backaction_json(s);
  return r;
}

ordered_json tin_report(const Scenario& s) {
  const TinBudget b = tin_budget(s.config.coupling.g0, s.config.cavity.kappa, s.quantities.n_th);
  const double upsilon0 = 2.0 * s.probe.detuning / s.config.cavity.kappa;
  const TransductionExpansion e = phase_expansion(upsilon0);
  ordered_json r;
  r["command"] = "tin";
  r["first_order_scaling"] = b.first_order_scaling;
  r["second_order_scaling"] = b.second_order_scaling;
  r["rms_normalised_detuning"] = b.rms_detuning;
  r["probe_upsilon0"] = upsilon0;
  std::vector<double> coeffs(e.coeffs.begin(), e.coeffs.end());
  for (double& c : coeffs) c += 0.0; // no "-0" in the output
  r["expansion_coefficients"] = coeffs;
  return r;
}

ordered_json fit_json(const FitResult& fit) {
  ordered_json r;
  ordered_json params;
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    ordered_json p;
    p["value"] = fit.values[i];
    if (fit.has_std_error()) p["std_error"] = fit.std_error[i];
    else p["std_error"] = nullptr;
    params[fit.names[i]] = p;
  }
  r["parameters"] = params;
  r["residual_norm"] = fit.residual_norm;
  r["converged"] = fit.converged;
  r["iterations"] = fit.iterations;
  r["flags"] = fit.flags;
  return r;
}

} // namespace optocool
