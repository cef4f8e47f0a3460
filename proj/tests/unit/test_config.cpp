#include "doctest.h"
#include "support.hpp"

#include "optocool/config.hpp"
#include "optocool/error.hpp"

#include <string>

using namespace optocool;

namespace {

const std::string minimal = R"(
[mechanical]
omega_m = 1.3 MHz
gamma_m = 9 mHz
m_eff = 200 pg
temperature = 300 K

[cavity]
kappa = 340 MHz
length = 95 um
wavelength = 1542 nm
eta_c = 0.9

[coupling]
g0 = 2.3 kHz
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.cfg");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("units convert to internal SI and angular rates") {
  const auto c = parse_config(minimal);
  CHECK_REL(c.mechanical.omega_m, angular(1.3e6), 1e-15);
  CHECK_REL(c.mechanical.gamma_m, angular(9e-3), 1e-15);
  CHECK_REL(c.mechanical.m_eff, 200e-15, 1e-15);
  CHECK_REL(c.cavity.length, 95e-6, 1e-15);
  CHECK_REL(c.coupling.g0, angular(2.3e3), 1e-15);
  CHECK(c.has_section("mechanical"));
  CHECK_FALSE(c.has_section("loop"));
}

TEST_CASE("micro sign spellings are equivalent") {
  std::string a = minimal, b = minimal;
  a.replace(a.find("95 um"), 5, "95 µm");
  b.replace(b.find("95 um"), 5, "95 μm");
  CHECK(parse_config(a) == parse_config(minimal));
  CHECK(parse_config(b) == parse_config(minimal));
}

TEST_CASE("bundled config loads with every section") {
  const auto c = load_config(test::data_file("paper.cfg"));
  for (const char* s : {"probe", "cooling", "detection", "noise", "loop", "simulation", "gas", "calibration"})
    CHECK(c.has_section(s));
  CHECK_FALSE(c.loop.gain.has_value());
  CHECK_FALSE(c.loop.phase.has_value());
  CHECK_REL(c.loop.delay, 300e-9, 1e-15);
  CHECK_REL(c.gas.pressure_low, 2e-6, 1e-12);
  CHECK(c.fiber_convention == FiberLossConvention::power_ratio);
}

TEST_CASE("text round trip is lossless") {
  const auto c = load_config(test::data_file("paper.cfg"));
  const auto back = parse_config(to_config_text(c), "round-trip");
  CHECK(back == c);
}

TEST_CASE("errors name the file and line") {
  CHECK(error_of("").find("no sections") != std::string::npos);
  CHECK(error_of(minimal + "[bogus]\n").find("t.cfg:") != std::string::npos);
  CHECK(error_of(minimal + "[probe]\nflavour = 3\n").find("flavour") != std::string::npos);

  std::string neg = minimal;
  neg.replace(neg.find("1.3 MHz"), 7, "-1 MHz");
  const std::string msg = error_of(neg);
  CHECK(msg.find("t.cfg:3") != std::string::npos);
  CHECK(msg.find("omega_m") != std::string::npos);
  CHECK_THROWS_AS(parse_config(neg), DomainError);

  std::string unit = minimal;
  unit.replace(unit.find("200 pg"), 6, "200 furlongs");
  CHECK_THROWS_AS(parse_config(unit), InputError);

  std::string missing = minimal;
  missing.erase(missing.find("g0 = 2.3 kHz"));
  CHECK_THROWS_AS(parse_config(missing), InputError);

  CHECK_THROWS_AS(parse_config(minimal + "[cooling]\npower = 1 mW\npower = 2 mW\n"), InputError);
  CHECK_THROWS_AS(load_config("/nonexistent.cfg"), InputError);
}

TEST_CASE("range orderings are cross-checked") {
  CHECK_THROWS_AS(parse_config(minimal + "[loop]\ngain_min = 10\ngain_max = 1\n"), DomainError);
  CHECK_THROWS_AS(parse_config(minimal + "[loop]\ngrid_min = 2 MHz\ngrid_max = 1 MHz\n"), DomainError);
}

TEST_CASE("entries carry unit and provenance") {
  const auto c = load_config(test::data_file("paper.cfg"));
  bool seen_gain = false;
  for (const auto& e : config_entries(c)) {
    if (e.section == "loop" && e.key == "gain") {
      seen_gain = true;
      CHECK(e.text == "auto");
    }
    if (e.section == "mechanical" && e.key == "omega_m") CHECK(e.provenance == "user");
  }
  CHECK(seen_gain);
}
