#include "doctest.h"
#include "support.hpp"

#include "optocool/backaction.hpp"
#include "optocool/error.hpp"
#include "optocool/limits.hpp"
#include "optocool/report.hpp"

using namespace optocool;

namespace {
const ExperimentConfig& bundled() {
  static const ExperimentConfig c = load_config(test::data_file("paper.cfg"));
  return c;
}
const Scenario& scenario() {
  static const Scenario s = build_scenario(bundled());
  return s;
}
} // namespace

TEST_CASE("scenario assembles the dressed mode from its parts") {
  const auto& s = scenario();
  const auto& c = bundled();
  const double spring = optical_spring(c.cooling.g, c.cooling.detuning, c.cavity.kappa, c.mechanical.omega_m);
  const double damping = optical_damping(c.cooling.g, c.cooling.detuning, c.cavity.kappa, c.mechanical.omega_m);
  CHECK_REL(s.omega_total, c.mechanical.omega_m + spring, 1e-12);
  CHECK_REL(s.gamma_total, c.mechanical.gamma_m + c.probe.damping + damping, 1e-12);
  CHECK_REL(s.eta_det, 0.0108864, 1e-14);
  CHECK_REL(s.n_min_half_kappa, 64.886527149321267, 1e-12);
  CHECK(s.loop.mode.omega_m == s.omega_total);
  CHECK(s.loop.mode.gamma_m == s.gamma_total);
}

TEST_CASE("the loop filter is tuned for damping at the dressed frequency") {
  const auto& s = scenario();
  CHECK(std::arg(filter_response(s.loop.filter, s.omega_total)) == doctest::Approx(constants::pi / 2).epsilon(1e-12));
  CHECK_REL(s.optimal_filter_gain * s.unit_response, s.optimal_cold_damping, 1e-12);
}

TEST_CASE("predicted floor is a stable minimum of the swept occupancy") {
  const auto& s = scenario();
  const auto f = predicted_floor(s);
  const std::vector<double> around{0.8 * f.gain, f.gain, 1.25 * f.gain};
  const auto sweep = gain_sweep(s.loop, around, loop_grid(s));
  CHECK(sweep[1].stable);
  CHECK(sweep[1].n_bar <= sweep[0].n_bar);
  CHECK(sweep[1].n_bar <= sweep[2].n_bar);
  CHECK_REL(sweep[1].n_bar, f.n_bar, 1e-9);
}

TEST_CASE("report inputs rebuild the config") {
  const auto j = full_report(scenario());
  CHECK(j["command"] == "report");
  const ExperimentConfig back = config_from_report(j);
  CHECK(back == bundled());
}

TEST_CASE("report keys keep a stable order") {
  const auto j = limits_report(scenario());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  REQUIRE(keys.size() >= 2);
  CHECK(keys.front() == "command");
}

TEST_CASE("simulation setup from the config") {
  const SimConfig c = simulation_config(bundled());
  CHECK_REL(bath_occupancy(c.mode), 1e4, 1e-12);
  CHECK_REL(imprecision_to_quanta(c.s_xx_imp, c.mode), 25.0, 1e-12);
  CHECK(c.filter.gain > 0.0);
  ExperimentConfig no_sim = parse_config(to_config_text(bundled()));
  no_sim.provenance.erase("[simulation]");
  CHECK_THROWS_AS(simulation_config(no_sim), InputError);
}
