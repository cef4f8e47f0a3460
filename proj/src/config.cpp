#include "optocool/config.hpp"

#include "checks.hpp"
#include "optocool/constants.hpp"
#include "optocool/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace optocool {

namespace {

enum class Dim {
  none,
  count,
  choice,
  frequency,
  time,
  mass,
  power,
  length,
  pressure,
  temperature,
  angle,
  density,
  molar_mass,
  displacement_asd,
  frequency_asd,
};

struct UnitScale {
  const char* name;
  double scale;
};

const std::vector<UnitScale>& units_for(Dim d) {
  using constants::two_pi;
  using constants::pi;
  static const std::vector<UnitScale> none{};
  static const std::vector<UnitScale> frequency{
      {"rad/s", 1.0},         {"mHz", two_pi * 1e-3}, {"Hz", two_pi},
      {"kHz", two_pi * 1e3},  {"MHz", two_pi * 1e6},  {"GHz", two_pi * 1e9}};
  static const std::vector<UnitScale> time{
      {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
  static const std::vector<UnitScale> mass{{"kg", 1.0},   {"g", 1e-3},    {"mg", 1e-6},
                                           {"ug", 1e-9},  {"ng", 1e-12},  {"pg", 1e-15},
                                           {"fg", 1e-18}};
  static const std::vector<UnitScale> power{
      {"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}, {"nW", 1e-9}};
  static const std::vector<UnitScale> length{{"m", 1.0},   {"mm", 1e-3},  {"um", 1e-6},
                                             {"nm", 1e-9}, {"pm", 1e-12}, {"fm", 1e-15},
                                             {"am", 1e-18}};
  static const std::vector<UnitScale> pressure{
      {"Pa", 1.0}, {"hPa", 100.0}, {"kPa", 1e3}, {"mbar", 100.0}, {"bar", 1e5}};
  static const std::vector<UnitScale> temperature{{"K", 1.0}, {"mK", 1e-3}};
  static const std::vector<UnitScale> angle{{"rad", 1.0}, {"deg", pi / 180.0}};
  static const std::vector<UnitScale> density{{"kg/m3", 1.0}, {"g/cm3", 1e3}};
  static const std::vector<UnitScale> molar{{"kg/mol", 1.0}, {"g/mol", 1e-3}};
  static const std::vector<UnitScale> disp_asd{{"m/rtHz", 1.0},
                                               {"fm/rtHz", 1e-15},
                                               {"am/rtHz", 1e-18}};
  static const std::vector<UnitScale> freq_asd{{"rad/s/rtHz", 1.0},
                                               {"Hz/rtHz", two_pi},
                                               {"mHz/rtHz", two_pi * 1e-3}};
  switch (d) {
  case Dim::frequency: return frequency;
  case Dim::time: return time;
  case Dim::mass: return mass;
  case Dim::power: return power;
  case Dim::length: return length;
  case Dim::pressure: return pressure;
  case Dim::temperature: return temperature;
  case Dim::angle: return angle;
  case Dim::density: return density;
  case Dim::molar_mass: return molar;
  case Dim::displacement_asd: return disp_asd;
  case Dim::frequency_asd: return freq_asd;
  default: return none;
  }
}

// First entry of each table is the internal unit used when writing configs back out.
std::string internal_unit(Dim d) {
  const auto& u = units_for(d);
  return u.empty() ? std::string{} : std::string(u.front().name);
}

enum class Check { none, positive, non_negative, unit_interval, finite };

void apply_check(Check c, const std::string& name, double v) {
  switch (c) {
  case Check::positive: detail::require_positive(name.c_str(), v); break;
  case Check::non_negative: detail::require_non_negative(name.c_str(), v); break;
  case Check::unit_interval: detail::require_unit_interval(name.c_str(), v); break;
  case Check::finite: detail::require_finite(name.c_str(), v); break;
  case Check::none: break;
  }
}

// std::nullopt stands for "auto" / not set.
using Setter = std::function<void(ExperimentConfig&, std::size_t, std::optional<double>)>;
using Getter = std::function<std::optional<double>(const ExperimentConfig&, std::size_t)>;

struct Field {
  std::string key;
  Dim dim;
  Check check;
  bool required;
  bool allow_auto; ///< "auto" accepted and written back
  Setter set;
  Getter get;
  std::vector<std::string> choices{};
};

struct Section {
  std::string name;
  bool required;
  bool indexed; ///< [aux1], [aux2], ...
  std::vector<Field> fields;
};

template <class Get>
Field plain(std::string key, Dim dim, Check check, bool required, Get ref) {
  return Field{std::move(key), dim, check, required, false,
               [ref](ExperimentConfig& c, std::size_t, std::optional<double> v) {
                 ref(c) = v.value_or(0.0);
               },
               [ref](const ExperimentConfig& c, std::size_t) -> std::optional<double> {
                 return ref(const_cast<ExperimentConfig&>(c));
               }};
}

template <class Get>
Field maybe(std::string key, Dim dim, Check check, bool allow_auto, Get ref) {
  return Field{std::move(key), dim, check, false, allow_auto,
               [ref](ExperimentConfig& c, std::size_t, std::optional<double> v) { ref(c) = v; },
               [ref](const ExperimentConfig& c, std::size_t) -> std::optional<double> {
                 return ref(const_cast<ExperimentConfig&>(c));
               }};
}

template <class Get>
Field integer(std::string key, Check check, Get ref) {
  return Field{std::move(key), Dim::count, check, false, false,
               [ref](ExperimentConfig& c, std::size_t, std::optional<double> v) {
                 ref(c) = static_cast<std::int64_t>(v.value_or(0.0));
               },
               [ref](const ExperimentConfig& c, std::size_t) -> std::optional<double> {
                 return static_cast<double>(ref(const_cast<ExperimentConfig&>(c)));
               }};
}

template <class Elem, class Vec>
Field indexed(std::string key, Dim dim, Check check, bool required, Vec vec, double Elem::* member) {
  return Field{std::move(key), dim, check, required, false,
               [vec, member](ExperimentConfig& c, std::size_t i, std::optional<double> v) {
                 vec(c)[i].*member = v.value_or(0.0);
               },
               [vec, member](const ExperimentConfig& c, std::size_t i) -> std::optional<double> {
                 return vec(const_cast<ExperimentConfig&>(c))[i].*member;
               }};
}

const std::vector<Section>& schema() {
  using C = ExperimentConfig;
  using D = Dim;
  using K = Check;
  static const std::vector<Section> sections = [] {
    std::vector<Section> s;
    s.push_back({"mechanical", true, false,
                 {plain("omega_m", D::frequency, K::positive, true, [](C& c) -> double& { return c.mechanical.omega_m; }),
                  plain("gamma_m", D::frequency, K::positive, true, [](C& c) -> double& { return c.mechanical.gamma_m; }),
                  plain("m_eff", D::mass, K::positive, true, [](C& c) -> double& { return c.mechanical.m_eff; }),
                  plain("temperature", D::temperature, K::positive, true, [](C& c) -> double& { return c.mechanical.temperature; })}});
    s.push_back({"cavity", true, false,
                 {plain("kappa", D::frequency, K::positive, true, [](C& c) -> double& { return c.cavity.kappa; }),
                  plain("length", D::length, K::positive, true, [](C& c) -> double& { return c.cavity.length; }),
                  plain("wavelength", D::length, K::positive, true, [](C& c) -> double& { return c.cavity.wavelength; }),
                  plain("eta_c", D::none, K::unit_interval, true, [](C& c) -> double& { return c.cavity.eta_c; }),
                  maybe("t_f", D::none, K::unit_interval, false, [](C& c) -> std::optional<double>& { return c.cavity.t_f; }),
                  maybe("t_e", D::none, K::unit_interval, false, [](C& c) -> std::optional<double>& { return c.cavity.t_e; })}});
    s.push_back({"coupling", true, false,
                 {plain("g0", D::frequency, K::positive, true, [](C& c) -> double& { return c.coupling.g0; }),
                  plain("membrane_reflectivity", D::none, K::unit_interval, false, [](C& c) -> double& { return c.coupling.membrane_reflectivity; }),
                  plain("overlap", D::none, K::unit_interval, false, [](C& c) -> double& { return c.coupling.overlap; })}});
    s.push_back({"probe", false, false,
                 {plain("detuning", D::frequency, K::finite, false, [](C& c) -> double& { return c.probe.detuning; }),
                  plain("cooperativity", D::none, K::non_negative, false, [](C& c) -> double& { return c.probe.cooperativity; }),
                  plain("damping", D::frequency, K::non_negative, false, [](C& c) -> double& { return c.probe.damping; }),
                  plain("power", D::power, K::non_negative, false, [](C& c) -> double& { return c.probe.power; })}});
    s.push_back({"cooling", false, false,
                 {plain("detuning", D::frequency, K::finite, false, [](C& c) -> double& { return c.cooling.detuning; }),
                  plain("power", D::power, K::non_negative, false, [](C& c) -> double& { return c.cooling.power; }),
                  plain("g", D::frequency, K::non_negative, false, [](C& c) -> double& { return c.cooling.g; })}});
    Field convention{"fiber_convention", D::choice, K::none, false, false,
                     [](C& c, std::size_t, std::optional<double> v) {
                       c.fiber_convention = v.value_or(0.0) == 0.0 ? FiberLossConvention::power_ratio
                                                                   : FiberLossConvention::amplitude;
                     },
                     [](const C& c, std::size_t) -> std::optional<double> {
                       return c.fiber_convention == FiberLossConvention::power_ratio ? 0.0 : 1.0;
                     },
                     {"power_ratio", "amplitude"}};
    s.push_back({"detection", false, false,
                 {plain("mode_matching", D::none, K::unit_interval, false, [](C& c) -> double& { return c.detection.mode_matching; }),
                  plain("overcoupling", D::none, K::unit_interval, false, [](C& c) -> double& { return c.detection.overcoupling; }),
                  plain("fiber_loss", D::none, K::unit_interval, false, [](C& c) -> double& { return c.detection.fiber_loss; }),
                  plain("visibility", D::none, K::unit_interval, false, [](C& c) -> double& { return c.detection.visibility; }),
                  plain("quantum_efficiency", D::none, K::unit_interval, false, [](C& c) -> double& { return c.detection.quantum_efficiency; }),
                  convention}});
    s.push_back({"noise", false, false,
                 {plain("laser_frequency_asd", D::frequency_asd, K::non_negative, false, [](C& c) -> double& { return c.noise.laser_frequency_asd; }),
                  plain("mirror_displacement_asd", D::displacement_asd, K::non_negative, false, [](C& c) -> double& { return c.noise.mirror_displacement_asd; }),
                  plain("n_imp", D::none, K::non_negative, false, [](C& c) -> double& { return c.noise.n_imp; })}});
    s.push_back({"loop", false, false,
                 {maybe("gain", D::none, K::non_negative, true, [](C& c) -> std::optional<double>& { return c.loop.gain; }),
                  maybe("phase", D::angle, K::finite, true, [](C& c) -> std::optional<double>& { return c.loop.phase; }),
                  plain("delay", D::time, K::non_negative, false, [](C& c) -> double& { return c.loop.delay; }),
                  plain("center", D::frequency, K::positive, false, [](C& c) -> double& { return c.loop.center; }),
                  plain("bandwidth", D::frequency, K::positive, false, [](C& c) -> double& { return c.loop.bandwidth; }),
                  plain("gain_min", D::none, K::non_negative, false, [](C& c) -> double& { return c.loop.gain_min; }),
                  plain("gain_max", D::none, K::non_negative, false, [](C& c) -> double& { return c.loop.gain_max; }),
                  integer("gain_points", K::non_negative, [](C& c) -> std::int64_t& { return c.loop.gain_points; }),
                  plain("grid_min", D::frequency, K::non_negative, false, [](C& c) -> double& { return c.loop.grid_min; }),
                  plain("grid_max", D::frequency, K::non_negative, false, [](C& c) -> double& { return c.loop.grid_max; }),
                  plain("grid_step", D::frequency, K::non_negative, false, [](C& c) -> double& { return c.loop.grid_step; }),
                  maybe("anchor_occupancy", D::none, K::positive, true, [](C& c) -> std::optional<double>& { return c.loop.anchor_occupancy; })}});

    auto aux = [](C& c) -> std::vector<AuxStage>& { return c.loop.aux; };
    Field order{"order", D::count, K::positive, false, false,
                [aux](C& c, std::size_t i, std::optional<double> v) {
                  aux(c)[i].order = static_cast<int>(v.value_or(1.0));
                },
                [aux](const C& c, std::size_t i) -> std::optional<double> {
                  return static_cast<double>(aux(const_cast<C&>(c))[i].order);
                }};
    s.push_back({"aux", false, true,
                 {indexed("center", D::frequency, K::positive, true, aux, &AuxStage::center),
                  indexed("bandwidth", D::frequency, K::positive, true, aux, &AuxStage::bandwidth),
                  indexed("gain", D::none, K::non_negative, true, aux, &AuxStage::gain),
                  indexed("phase", D::angle, K::finite, false, aux, &AuxStage::phase),
                  order}});
    auto spur = [](C& c) -> std::vector<SpuriousMode>& { return c.loop.spurious; };
    s.push_back({"spurious", false, true,
                 {indexed("omega", D::frequency, K::positive, true, spur, &SpuriousMode::omega),
                  indexed("gamma", D::frequency, K::positive, true, spur, &SpuriousMode::gamma),
                  indexed("m_eff", D::mass, K::positive, true, spur, &SpuriousMode::m_eff),
                  indexed("coupling", D::none, K::finite, false, spur, &SpuriousMode::coupling)}});

    s.push_back({"simulation", false, false,
                 {plain("dt", D::time, K::positive, true, [](C& c) -> double& { return c.simulation.dt; }),
                  plain("duration", D::time, K::positive, true, [](C& c) -> double& { return c.simulation.duration; }),
                  integer("seed", K::non_negative, [](C& c) -> std::int64_t& { return c.simulation.seed; }),
                  plain("n_th", D::none, K::positive, true, [](C& c) -> double& { return c.simulation.n_th; }),
                  plain("gamma", D::frequency, K::positive, true, [](C& c) -> double& { return c.simulation.gamma; }),
                  plain("n_imp", D::none, K::positive, true, [](C& c) -> double& { return c.simulation.n_imp; }),
                  maybe("gain", D::none, K::non_negative, true, [](C& c) -> std::optional<double>& { return c.simulation.gain; }),
                  integer("segment_length", K::non_negative, [](C& c) -> std::int64_t& { return c.simulation.segment_length; }),
                  plain("overlap", D::none, K::unit_interval, false, [](C& c) -> double& { return c.simulation.overlap; })}});
    s.push_back({"gas", false, false,
                 {plain("density", D::density, K::positive, true, [](C& c) -> double& { return c.gas.density; }),
                  plain("thickness", D::length, K::positive, true, [](C& c) -> double& { return c.gas.thickness; }),
                  plain("molar_mass", D::molar_mass, K::positive, true, [](C& c) -> double& { return c.gas.molar_mass; }),
                  plain("temperature", D::temperature, K::positive, true, [](C& c) -> double& { return c.gas.temperature; }),
                  plain("pressure_low", D::pressure, K::positive, false, [](C& c) -> double& { return c.gas.pressure_low; }),
                  plain("pressure_high", D::pressure, K::positive, false, [](C& c) -> double& { return c.gas.pressure_high; })}});
    s.push_back({"calibration", false, false,
                 {plain("eta_r", D::none, K::unit_interval, false, [](C& c) -> double& { return c.calibration.eta_r; }),
                  plain("lock_ratio", D::none, K::positive, false, [](C& c) -> double& { return c.calibration.lock_ratio; }),
                  plain("phi_mod", D::angle, K::non_negative, false, [](C& c) -> double& { return c.calibration.phi_mod; }),
                  plain("omega_mod", D::frequency, K::non_negative, false, [](C& c) -> double& { return c.calibration.omega_mod; }),
                  plain("tone_half_width", D::frequency, K::non_negative, false, [](C& c) -> double& { return c.calibration.tone_half_width; })}});
    return s;
  }();
  return sections;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Accept both micro signs and plain "u".
std::string normalise_unit(std::string u) {
  for (const std::string mu : {"\xC2\xB5", "\xCE\xBC"}) {
    std::size_t pos;
    while ((pos = u.find(mu)) != std::string::npos) u.replace(pos, mu.size(), "u");
  }
  u.erase(std::remove(u.begin(), u.end(), ' '), u.end());
  return u;
}

class Parser {
public:
  Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw InputError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  [[noreturn]] void invalid(int line, const std::string& msg) const {
    throw DomainError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::optional<double> value(int line, const Field& f, const std::string& raw) const {
    if (raw == "auto") {
      if (!f.allow_auto) fail(line, "'" + f.key + "' does not accept auto");
      return std::nullopt;
    }
    if (f.dim == Dim::choice) {
      const auto it = std::find(f.choices.begin(), f.choices.end(), raw);
      if (it == f.choices.end()) {
        std::string list;
        for (const auto& c : f.choices) list += (list.empty() ? "" : ", ") + c;
        fail(line, "'" + f.key + "' must be one of: " + list + " (got '" + raw + "')");
      }
      return static_cast<double>(it - f.choices.begin());
    }
    double number = 0.0;
    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    if (!raw.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, number);
    if (ec != std::errc{}) fail(line, "cannot parse a number from '" + raw + "'");
    const std::string unit = normalise_unit(trim(std::string_view(ptr, static_cast<std::size_t>(last - ptr))));
    if (f.dim == Dim::none || f.dim == Dim::count) {
      if (!unit.empty()) fail(line, "'" + f.key + "' is dimensionless but has unit '" + unit + "'");
      if (f.dim == Dim::count && number != std::floor(number))
        fail(line, "'" + f.key + "' must be an integer (got " + raw + ")");
      return number;
    }
    const auto& table = units_for(f.dim);
    if (unit.empty()) fail(line, "'" + f.key + "' needs a unit (e.g. " + table[std::min<std::size_t>(2, table.size() - 1)].name + ")");
    for (const auto& u : table)
      if (unit == u.name) return number * u.scale;
    std::string list;
    for (const auto& u : table) list += (list.empty() ? "" : ", ") + std::string(u.name);
    fail(line, "unknown unit '" + unit + "' for '" + f.key + "' (expected one of: " + list + ")");
  }

  ExperimentConfig parse(const std::string& text) {
    ExperimentConfig cfg;
    apply_defaults(cfg);

    std::istringstream in(text);
    std::string raw_line;
    int line = 0;
    const Section* current = nullptr;
    std::size_t index = 0;
    std::string current_name;
    std::map<std::string, int> section_line;
    std::set<std::string> seen_keys;

    while (std::getline(in, raw_line)) {
      ++line;
      std::string_view view(raw_line);
      if (const auto hash = view.find_first_of("#;"); hash != std::string_view::npos)
        view = view.substr(0, hash);
      const std::string content = trim(view);
      if (content.empty()) continue;

      if (content.front() == '[') {
        if (content.back() != ']') fail(line, "malformed section header '" + content + "'");
        current_name = trim(std::string_view(content).substr(1, content.size() - 2));
        if (section_line.count(current_name)) fail(line, "duplicate section [" + current_name + "]");
        section_line[current_name] = line;
        current = find_section(line, current_name, index, cfg);
        cfg.provenance["[" + current_name + "]"] = "user";
        continue;
      }
      if (!current) fail(line, "key outside of any section");
      const auto eq = content.find('=');
      if (eq == std::string::npos) fail(line, "expected 'key = value'");
      const std::string key = trim(std::string_view(content).substr(0, eq));
      const std::string raw = trim(std::string_view(content).substr(eq + 1));
      if (raw.empty()) fail(line, "missing value for '" + key + "'");

      const auto fit = std::find_if(current->fields.begin(), current->fields.end(),
                                    [&](const Field& f) { return f.key == key; });
      if (fit == current->fields.end()) fail(line, "unknown key '" + key + "' in [" + current_name + "]");
      const std::string qualified = current_name + "." + key;
      if (!seen_keys.insert(qualified).second) fail(line, "duplicate key '" + key + "' in [" + current_name + "]");

      const auto v = value(line, *fit, raw);
      if (v) {
        try {
          apply_check(fit->check, key, *v);
        } catch (const DomainError& e) {
          invalid(line, std::string("[") + current_name + "] " + e.what());
        }
      }
      fit->set(cfg, index, v);
      cfg.provenance[qualified] = "user";
    }

    if (section_line.empty()) fail(line, "no sections found; [mechanical], [cavity] and [coupling] are required");
    for (const auto& sec : schema()) {
      if (sec.indexed) continue;
      const bool present = section_line.count(sec.name) > 0;
      if (sec.required && !present) fail(line, "missing section [" + sec.name + "]");
      if (present) require_keys(sec, sec.name, section_line[sec.name], seen_keys);
    }
    for (const auto& [name, at] : section_line) {
      const Section* sec = base_section(name);
      if (sec && sec->indexed) require_keys(*sec, name, at, seen_keys);
    }

    cross_check(cfg, section_line);
    return cfg;
  }

private:
  std::string source_;

  static const Section* base_section(const std::string& name) {
    for (const auto& s : schema()) {
      if (!s.indexed && s.name == name) return &s;
      if (s.indexed && name.size() > s.name.size() && name.compare(0, s.name.size(), s.name) == 0 &&
          std::all_of(name.begin() + static_cast<std::ptrdiff_t>(s.name.size()), name.end(),
                      [](char ch) { return ch >= '0' && ch <= '9'; }))
        return &s;
    }
    return nullptr;
  }

  const Section* find_section(int line, const std::string& name, std::size_t& index,
                              ExperimentConfig& cfg) const {
    const Section* sec = base_section(name);
    if (!sec) fail(line, "unknown section [" + name + "]");
    index = 0;
    if (sec->indexed) {
      if (sec->name == "aux") {
        index = cfg.loop.aux.size();
        cfg.loop.aux.emplace_back();
      } else {
        index = cfg.loop.spurious.size();
        cfg.loop.spurious.emplace_back();
      }
    }
    return sec;
  }

  void require_keys(const Section& sec, const std::string& name, int at,
                    const std::set<std::string>& seen) const {
    for (const auto& f : sec.fields)
      if (f.required && !seen.count(name + "." + f.key))
        fail(at, "section [" + name + "] is missing required key '" + f.key + "'");
  }

  static void apply_defaults(ExperimentConfig& cfg) {
    cfg.coupling.overlap = 1.0;
    cfg.simulation.overlap = 0.5;
    for (const auto& sec : schema())
      if (!sec.indexed)
        for (const auto& f : sec.fields) cfg.provenance[sec.name + "." + f.key] = "default";
  }

  void cross_check(const ExperimentConfig& cfg, const std::map<std::string, int>& at) const {
    const auto guard = [&](const std::string& section, auto&& fn) {
      try {
        fn();
      } catch (const DomainError& e) {
        invalid(at.at(section), "[" + section + "] " + e.what());
      }
    };
    guard("mechanical", [&] { cfg.mechanical.validate(); });
    guard("cavity", [&] { cfg.cavity.validate(); });
    guard("coupling", [&] { cfg.coupling.validate(); });
    if (at.count("detection")) guard("detection", [&] { cfg.detection.validate(); });
    if (at.count("loop") && cfg.loop.gain_max < cfg.loop.gain_min)
      invalid(at.at("loop"), "[loop] gain_max must not be below gain_min");
    if (at.count("loop") && cfg.loop.grid_max < cfg.loop.grid_min)
      invalid(at.at("loop"), "[loop] grid_max must not be below grid_min");
    if (at.count("gas") && cfg.gas.pressure_high < cfg.gas.pressure_low)
      invalid(at.at("gas"), "[gas] pressure_high must not be below pressure_low");
  }
};

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return mechanical == o.mechanical && cavity == o.cavity && coupling == o.coupling &&
         probe == o.probe && cooling == o.cooling && detection == o.detection &&
         fiber_convention == o.fiber_convention && noise == o.noise && loop == o.loop &&
         simulation == o.simulation && gas == o.gas && calibration == o.calibration;
}

bool ExperimentConfig::has_section(const std::string& name) const {
  const auto it = provenance.find("[" + name + "]");
  return it != provenance.end() && it->second == "user";
}

ExperimentConfig parse_config(const std::string& text, const std::string& source_name) {
  return Parser(source_name).parse(text);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::vector<ConfigEntry> config_entries(const ExperimentConfig& config) {
  std::vector<ConfigEntry> out;
  const auto emit = [&](const Section& sec, const std::string& name, std::size_t index) {
    for (const auto& f : sec.fields) {
      ConfigEntry e;
      e.section = name;
      e.key = f.key;
      e.unit = internal_unit(f.dim);
      e.value = f.get(config, index);
      if (!e.value) {
        if (!f.allow_auto) continue; // unset optional without an "auto" meaning
        e.text = "auto";
      } else if (f.dim == Dim::choice) {
        e.text = f.choices[static_cast<std::size_t>(*e.value)];
      } else {
        e.text = format_number(*e.value);
      }
      const auto p = sec.indexed ? config.provenance.find("[" + name + "]")
                                 : config.provenance.find(name + "." + f.key);
      e.provenance = p == config.provenance.end() ? "default" : p->second;
      out.push_back(std::move(e));
    }
  };
  for (const auto& sec : schema()) {
    if (!sec.indexed) {
      if (sec.required || config.has_section(sec.name)) emit(sec, sec.name, 0);
      continue;
    }
    const std::size_t n = sec.name == "aux" ? config.loop.aux.size() : config.loop.spurious.size();
    for (std::size_t i = 0; i < n; ++i) emit(sec, sec.name + std::to_string(i + 1), i);
  }
  return out;
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string text;
  std::string section;
  for (const auto& e : config_entries(config)) {
    if (e.section != section) {
      if (!section.empty()) text += "\n";
      section = e.section;
      text += "[" + section + "]\n";
    }
    text += e.key + " = " + e.text;
    if (e.value && !e.unit.empty() && e.text != "auto") text += " " + e.unit;
    text += "\n";
  }
  return text;
}

} // namespace optocool
