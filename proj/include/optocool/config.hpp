#pragma once

// Experiment configuration: a flat, sectioned key = value file with unit
// suffixes, normalised to SI / angular units on load.
//
//   [mechanical]
//   omega_m = 1.3 MHz        # frequencies in Hz-family units become rad/s
//   m_eff   = 200 pg
//
// Values may be followed by a unit; dimensional keys require one. `auto`
// is accepted where a key can be derived.

#include "optocool/filter.hpp"
#include "optocool/loop.hpp"
#include "optocool/params.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace optocool {

struct ProbeSettings {
  double detuning = 0.0;      ///< rad/s
  double cooperativity = 0.0; ///< C_q of the probe
  double damping = 0.0;       ///< measured probe damping offset, rad/s
  double power = 0.0;         ///< W

  bool operator==(const ProbeSettings&) const = default;
};

struct CoolingSettings {
  double detuning = 0.0; ///< rad/s
  double power = 0.0;    ///< W incident
  double g = 0.0;        ///< field-enhanced coupling, rad/s

  bool operator==(const CoolingSettings&) const = default;
};

struct NoiseSettings {
  double laser_frequency_asd = 0.0;     ///< rad/s per sqrt(Hz)
  double mirror_displacement_asd = 0.0; ///< m per sqrt(Hz)
  double n_imp = 0.0;                   ///< measured imprecision in quanta

  bool operator==(const NoiseSettings&) const = default;
};

struct LoopSettings {
  std::optional<double> gain;  ///< unset: cold-damping optimum
  std::optional<double> phase; ///< unset: tuned to pi/2 at the mode
  double delay = 0.0;          ///< s
  double center = 0.0;         ///< rad/s
  double bandwidth = 0.0;      ///< rad/s
  double gain_min = 0.0;
  double gain_max = 0.0;
  std::int64_t gain_points = 0;
  double grid_min = 0.0;  ///< rad/s
  double grid_max = 0.0;  ///< rad/s
  double grid_step = 0.0; ///< rad/s
  std::optional<double> anchor_occupancy; ///< unset: sideband-cooling prediction
  std::vector<AuxStage> aux;
  std::vector<SpuriousMode> spurious;

  bool operator==(const LoopSettings&) const = default;
};

struct SimulationSettings {
  double dt = 0.0;       ///< s
  double duration = 0.0; ///< s
  std::int64_t seed = 0;
  double n_th = 0.0;    ///< bath occupancy of the scaled-down mode
  double gamma = 0.0;   ///< intrinsic damping of the scaled-down mode, rad/s
  double n_imp = 0.0;
  std::optional<double> gain; ///< unset: cold-damping optimum
  std::int64_t segment_length = 0;
  double overlap = 0.0;

  bool operator==(const SimulationSettings&) const = default;
};

struct GasSettings {
  double density = 0.0;     ///< kg/m^3
  double thickness = 0.0;   ///< m
  double molar_mass = 0.0;  ///< kg/mol
  double temperature = 0.0; ///< K
  double pressure_low = 0.0;  ///< Pa
  double pressure_high = 0.0; ///< Pa

  bool operator==(const GasSettings&) const = default;
};

struct CalibrationSettings {
  double eta_r = 0.0;          ///< off-resonance reflection level
  double lock_ratio = 0.0;     ///< locked / unlocked calibration tone
  double phi_mod = 0.0;        ///< rad
  double omega_mod = 0.0;      ///< rad/s
  double tone_half_width = 0.0; ///< rad/s

  bool operator==(const CalibrationSettings&) const = default;
};

struct ExperimentConfig {
  MechanicalMode mechanical;
  OpticalCavity cavity;
  CouplingConfig coupling;
  ProbeSettings probe;
  CoolingSettings cooling;
  DetectionChain detection;
  FiberLossConvention fiber_convention = FiberLossConvention::power_ratio;
  NoiseSettings noise;
  LoopSettings loop;
  SimulationSettings simulation;
  GasSettings gas;
  CalibrationSettings calibration;

  /// "section.key" -> "user" or "default"; not part of equality.
  std::map<std::string, std::string> provenance;

  bool has_section(const std::string& name) const;

  bool operator==(const ExperimentConfig& o) const;
};

/// Parses and validates. Errors carry "source:line:" positions.
ExperimentConfig parse_config(const std::string& text, const std::string& source_name = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Canonical text in internal units (rad/s, SI) that parses back to an equal config.
std::string to_config_text(const ExperimentConfig& config);

/// One echoed input: value in internal units, the unit name, and provenance.
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string text; ///< value as written by to_config_text
  std::string unit; ///< internal unit, empty for dimensionless
  std::optional<double> value;
  std::string provenance;
};

std::vector<ConfigEntry> config_entries(const ExperimentConfig& config);

} // namespace optocool
