#include "doctest.h"
#include "support.hpp"

#include "optocool/error.hpp"
#include "optocool/spectrum.hpp"

#include <sstream>

using namespace optocool;

namespace {

// |chi|^2-shaped spectrum with a closed-form integral over (0, inf): pi / (2 g f0^2).
Spectrum oscillator(double f0, double g, double span_widths, double step) {
  Spectrum s = Spectrum::on_grid(FrequencyGrid::covering(f0 - span_widths * g, f0 + span_widths * g, step),
                                 SpectrumUnits::m2_per_hz);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = s.freqs[i];
    s.values[i] = 1.0 / ((f0 * f0 - f * f) * (f0 * f0 - f * f) + g * g * f * f);
  }
  return s;
}

} // namespace

TEST_CASE("grid covering") {
  const auto g = FrequencyGrid::covering(0.0, 10.0, 3.0);
  CHECK(g.start == 0.0);
  CHECK(g.step <= 3.0);
  CHECK(g.stop() >= 10.0 - 1e-12);
  CHECK_THROWS_AS(FrequencyGrid::covering(1.0, 1.0, 0.1), InputError);
}

TEST_CASE("integration with oscillator tails") {
  const double f0 = 1e6, g = 50.0, exact = constants::pi / (2.0 * g * f0 * f0);
  const Spectrum s = oscillator(f0, g, 20.0, g / 20.0);
  CHECK_REL(integrate_psd(s), exact, 1e-4);
  // The bare grid integral misses the wings.
  CHECK(test::rel_err(integrate_psd(s, false), exact) > 1e-2);
}

TEST_CASE("peak location refined between bins") {
  const Spectrum s = oscillator(1e6 + 0.37, 50.0, 20.0, 2.0);
  CHECK(std::abs(peak_frequency(s) - (1e6 + 0.37)) < 0.05);
}

TEST_CASE("CSV round trip keeps units, metadata and values") {
  Spectrum s = oscillator(1e3, 2.0, 10.0, 0.1);
  s.metadata.emplace_back("channel", "x");
  std::stringstream io;
  write_spectrum_csv(io, s);
  const Spectrum r = parse_spectrum_csv(io, "memory");
  CHECK(r.units == SpectrumUnits::m2_per_hz);
  REQUIRE(r.size() == s.size());
  CHECK(r.values == s.values);
  CHECK(r.freqs == s.freqs);
  REQUIRE(r.metadata.size() == 1);
  CHECK(r.metadata[0].second == "x");
}

TEST_CASE("CSV errors") {
  std::stringstream no_units("frequency_Hz,psd\n1,1\n2,1\n3,1\n");
  CHECK_THROWS_AS(parse_spectrum_csv(no_units, "a"), InputError);
  std::stringstream bad_units("# units=furlongs\n1,1\n2,1\n3,1\n");
  CHECK_THROWS_AS(parse_spectrum_csv(bad_units, "b"), InputError);
  std::stringstream uneven("# units=V2/Hz\n1,1\n2,1\n4,1\n");
  CHECK_THROWS_AS(parse_spectrum_csv(uneven, "c"), InputError);
  std::stringstream negative("# units=V2/Hz\n1,1\n2,-1\n3,1\n");
  CHECK_THROWS_AS(parse_spectrum_csv(negative, "d"), InputError);
  CHECK_THROWS_AS(read_spectrum_csv("/nonexistent/spectrum.csv"), InputError);
}

TEST_CASE("unit tags round trip") {
  for (auto u : {SpectrumUnits::volts2_per_hz, SpectrumUnits::m2_per_hz, SpectrumUnits::rad2_per_s2_per_hz,
                 SpectrumUnits::quanta, SpectrumUnits::per_hz, SpectrumUnits::ratio})
    CHECK(units_from_string(to_string(u)) == u);
}
