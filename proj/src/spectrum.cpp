#include "optocool/spectrum.hpp"

#include "checks.hpp"
#include "optocool/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace optocool {

namespace {

struct UnitName {
  SpectrumUnits units;
  std::string_view tag;
};

constexpr UnitName unit_names[] = {
    {SpectrumUnits::volts2_per_hz, "V2/Hz"},
    {SpectrumUnits::m2_per_hz, "m2/Hz"},
    {SpectrumUnits::rad2_per_s2_per_hz, "(rad/s)2/Hz"},
    {SpectrumUnits::quanta, "quanta"},
    {SpectrumUnits::per_hz, "1/Hz"},
    {SpectrumUnits::ratio, "ratio"},
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  // from_chars for double is available in libstdc++ 11.
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// int_{hi}^{inf} df / (f^2 - a^2)^2 for hi > a > 0.
double upper_wing(double a, double hi) {
  if (hi > 10.0 * a) {
    double sum = 0.0, term = 1.0 / (hi * hi * hi);
    const double r = (a / hi) * (a / hi);
    for (int k = 0; k < 30; ++k, term *= r) sum += (k + 1) * term / (2 * k + 3);
    return sum;
  }
  return hi / (2.0 * a * a * (hi * hi - a * a)) + std::log1p(-2.0 * a / (hi + a)) / (4.0 * a * a * a);
}

// int_0^{lo} df / (f^2 - a^2)^2 for 0 <= lo < a.
double lower_wing(double a, double lo) {
  if (lo < 0.1 * a) {
    double sum = 0.0, term = lo / (a * a * a * a);
    const double r = (lo / a) * (lo / a);
    for (int k = 0; k < 30; ++k, term *= r) sum += (k + 1) * term / (2 * k + 1);
    return sum;
  }
  return -lo / (2.0 * a * a * (lo * lo - a * a)) - std::log((a - lo) / (a + lo)) / (4.0 * a * a * a);
}

} // namespace

std::string_view to_string(SpectrumUnits units) {
  for (const auto& u : unit_names)
    if (u.units == units) return u.tag;
  return "?";
}

SpectrumUnits units_from_string(std::string_view tag) {
  tag = trim(tag);
  for (const auto& u : unit_names)
    if (u.tag == tag) return u.units;
  std::string known;
  for (const auto& u : unit_names) known += (known.empty() ? "" : ", ") + std::string(u.tag);
  throw InputError("unknown spectrum units '" + std::string(tag) + "' (known: " + known + ")");
}

FrequencyGrid FrequencyGrid::covering(double lo, double hi, double max_step) {
  if (!(hi > lo)) throw InputError("frequency grid needs hi > lo");
  detail::require_positive("grid step", max_step);
  const auto intervals = static_cast<std::size_t>(std::ceil((hi - lo) / max_step));
  const std::size_t n = std::max<std::size_t>(intervals, 2) + 1;
  return {lo, (hi - lo) / static_cast<double>(n - 1), n};
}

void Spectrum::validate() const {
  validate_grid();
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]) || values[i] < 0.0)
      throw InputError("spectrum value at row " + std::to_string(i) + " is negative or not finite");
}

void Spectrum::validate_grid() const {
  if (freqs.size() != values.size())
    throw InputError("spectrum has " + std::to_string(freqs.size()) + " frequencies but " +
                     std::to_string(values.size()) + " values");
  if (freqs.size() < 3) throw InputError("spectrum needs at least 3 points");
  const double df = freqs[1] - freqs[0];
  if (!(df > 0.0)) throw InputError("spectrum frequencies must be strictly increasing");
  for (std::size_t i = 1; i < freqs.size(); ++i) {
    const double d = freqs[i] - freqs[i - 1];
    if (!(d > 0.0))
      throw InputError("spectrum frequencies must be strictly increasing (row " + std::to_string(i) + ")");
    if (std::abs(d - df) > 1e-6 * df + 1e-12 * std::abs(freqs[i]))
      throw InputError("spectrum grid is not uniform at row " + std::to_string(i));
  }
}

Spectrum Spectrum::on_grid(const FrequencyGrid& grid, SpectrumUnits units) {
  Spectrum s;
  s.units = units;
  s.freqs.resize(grid.count);
  for (std::size_t i = 0; i < grid.count; ++i) s.freqs[i] = grid.at(i);
  s.values.assign(grid.count, 0.0);
  return s;
}

Spectrum parse_spectrum_csv(std::istream& in, const std::string& source_name) {
  Spectrum s;
  bool have_units = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const std::string_view body = trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(trim(body.substr(0, eq)));
      const std::string value(trim(body.substr(eq + 1)));
      if (key == "units") {
        s.units = units_from_string(value);
        have_units = true;
      } else {
        s.metadata.emplace_back(key, value);
      }
      continue;
    }
    const auto comma = t.find(',');
    double f = 0.0, v = 0.0;
    const bool numeric = comma != std::string_view::npos && parse_double(t.substr(0, comma), f) &&
                         parse_double(t.substr(comma + 1), v);
    if (!numeric) {
      if (s.freqs.empty() && comma != std::string_view::npos) continue; // column header
      throw InputError(source_name + ":" + std::to_string(line_no) + ": expected two numeric columns");
    }
    s.freqs.push_back(f);
    s.values.push_back(v);
  }
  if (!have_units) throw InputError(source_name + ": missing '# units=<tag>' header");
  try {
    s.validate();
  } catch (const InputError& e) {
    throw InputError(source_name + ": " + e.what());
  }
  return s;
}

Spectrum read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open spectrum file '" + path + "'");
  return parse_spectrum_csv(in, path);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  out << "# units=" << to_string(s.units) << '\n';
  for (const auto& [k, v] : s.metadata) out << "# " << k << '=' << v << '\n';
  out << "frequency_Hz,psd\n";
  char buf[80];
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.freqs[i], s.values[i]);
    out << buf;
  }
}

void write_spectrum_csv(const std::string& path, const Spectrum& s) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write spectrum file '" + path + "'");
  write_spectrum_csv(out, s);
}

double peak_frequency(const Spectrum& s) {
  const auto it = std::max_element(s.values.begin(), s.values.end());
  const auto i = static_cast<std::size_t>(it - s.values.begin());
  if (i == 0 || i + 1 == s.size()) return s.freqs[i];
  const double y0 = s.values[i - 1], y1 = s.values[i], y2 = s.values[i + 1];
  const double denom = y0 - 2.0 * y1 + y2;
  if (denom >= 0.0) return s.freqs[i];
  return s.freqs[i] + 0.5 * (y0 - y2) / denom * s.step();
}

double integrate_psd(const Spectrum& s, bool tails) {
  s.validate_grid();
  for (double v : s.values)
    if (!std::isfinite(v)) throw InputError("cannot integrate a spectrum with non-finite values");
  const std::size_t n = s.size();
  double sum = 0.5 * (s.values.front() + s.values.back());
  for (std::size_t i = 1; i + 1 < n; ++i) sum += s.values[i];
  double area = sum * s.step();
  if (!tails) return area;

  const double a = peak_frequency(s);
  const double lo = s.freqs.front(), hi = s.freqs.back();
  if (a > 0.0 && hi > a) {
    const double amp = s.values.back() * (hi * hi - a * a) * (hi * hi - a * a);
    area += amp * upper_wing(a, hi);
  }
  if (lo > 0.0 && lo < a) {
    const double amp = s.values.front() * (a * a - lo * lo) * (a * a - lo * lo);
    area += amp * lower_wing(a, lo);
  }
  return area;
}

} // namespace optocool
