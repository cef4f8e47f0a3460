#pragma once

// Assembles the cooling scenario described by an ExperimentConfig and renders
// the machine-readable reports behind the CLI subcommands.

#include "optocool/backaction.hpp"
#include "optocool/config.hpp"
#include "optocool/fit.hpp"
#include "optocool/limits.hpp"
#include "optocool/loop.hpp"
#include "optocool/timesim.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace optocool {

using ordered_json = nlohmann::ordered_json;

/// Every quantity the budget needs, computed once from a config.
struct Scenario {
  ExperimentConfig config;
  MechanicalMode mode; ///< intrinsic mode
  ModeQuantities quantities;
  double eta_det = 0.0;

  OpticalBeam cooling;
  OpticalBeam probe;
  double cooling_photons = 0.0; ///< intracavity photons at the configured cooling power
  double incoupling = 1.0;      ///< fraction of the cooling power reaching the cavity, implied by g

  BackactionResult cooling_backaction;
  double gamma_probe = 0.0; ///< rad/s
  double gamma_total = 0.0; ///< rad/s
  double omega_total = 0.0; ///< rad/s

  double n_min_cooling = 0.0;  ///< sideband limit at the cooling detuning
  double n_min_half_kappa = 0.0;
  OptimalDetuning optimal;
  double anchor_occupancy = 0.0;
  bool anchor_from_config = false;

  ImprecisionBudget imprecision;
  Occupancy feedback_basic; ///< quantum imprecision only
  Occupancy feedback_full;  ///< with mirror noise

  double n_tot = 0.0; ///< total force noise in quanta of the intrinsic mode
  double n_imp = 0.0;
  LoopModel loop; ///< dressed mode, tuned filter, configured or optimal gain
  double unit_response = 0.0; ///< |filter response| at omega_total for unit gain
  double optimal_cold_damping = 0.0; ///< g* of the ideal loop, relative to gamma_total
  double optimal_filter_gain = 0.0;  ///< filter gain producing g*
};

Scenario build_scenario(const ExperimentConfig& config);

FrequencyGrid loop_grid(const Scenario& s);
std::vector<double> gain_values(const Scenario& s);

struct FloorPrediction {
  double gain = 0.0;  ///< filter gain at the minimum
  double n_bar = 0.0; ///< integrated occupancy at the minimum
  double cold_damping = 0.0; ///< equivalent g = gain * unit_response
};

/// Minimum over filter gain of the integrated closed-loop occupancy.
FloorPrediction predicted_floor(const Scenario& s);

/// Desk-scale time-domain setup from the [simulation] section.
SimConfig simulation_config(const ExperimentConfig& config);

ordered_json inputs_json(const ExperimentConfig& config);
ExperimentConfig config_from_report(const ordered_json& report);

ordered_json full_report(const Scenario& s);
ordered_json limits_report(const Scenario& s);
std::string limits_text(const Scenario& s);
ordered_json backaction_report(const Scenario& s);
ordered_json tin_report(const Scenario& s);
ordered_json fit_json(const FitResult& fit);

/// {"value": v, "unit": u}
ordered_json quantity(double value, const std::string& unit);

} // namespace optocool
