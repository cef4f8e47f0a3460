#pragma once

// Single-sided spectra on uniform frequency grids, their CSV representation,
// and the quadrature used for every area and occupancy computation.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace optocool {

enum class SpectrumUnits {
  volts2_per_hz,      ///< raw detector PSD
  m2_per_hz,          ///< displacement PSD
  rad2_per_s2_per_hz, ///< angular frequency noise PSD
  quanta,             ///< displacement PSD normalised to the zero-point peak
  per_hz,             ///< PSD of a dimensionless variable
  ratio,              ///< dimensionless curve such as a reflection scan
};

std::string_view to_string(SpectrumUnits units);
SpectrumUnits units_from_string(std::string_view tag);

/// Uniform grid start + i * step, i in [0, count), in Hz.
struct FrequencyGrid {
  double start = 0.0;
  double step = 0.0;
  std::size_t count = 0;

  double at(std::size_t i) const { return start + step * static_cast<double>(i); }
  double stop() const { return at(count - 1); }

  /// Grid from lo to at least hi with spacing at most max_step.
  static FrequencyGrid covering(double lo, double hi, double max_step);
};

struct Spectrum {
  std::vector<double> freqs;  ///< Hz, strictly increasing and uniform
  std::vector<double> values; ///< single-sided PSD in `units`
  SpectrumUnits units = SpectrumUnits::per_hz;
  std::vector<std::pair<std::string, std::string>> metadata;

  /// Throws InputError on mismatched lengths, fewer than 3 points, a
  /// non-increasing or non-uniform grid, or negative / non-finite values.
  void validate() const;
  /// Grid and length checks only; values may be negative (e.g. background-subtracted).
  void validate_grid() const;

  std::size_t size() const { return freqs.size(); }
  double step() const { return freqs[1] - freqs[0]; }
  FrequencyGrid grid() const { return {freqs.front(), step(), freqs.size()}; }

  static Spectrum on_grid(const FrequencyGrid& grid, SpectrumUnits units);
};

/// Parses `# units=<tag>` and `# key=value` comment lines, an optional
/// non-numeric column header, then two comma-separated columns.
Spectrum read_spectrum_csv(const std::string& path);
Spectrum parse_spectrum_csv(std::istream& in, const std::string& source_name);

void write_spectrum_csv(std::ostream& out, const Spectrum& s);
void write_spectrum_csv(const std::string& path, const Spectrum& s);

/// Integral of S over frequency in Hz (equivalently int S dW/2pi).
///
/// Trapezoidal rule over the grid, plus analytic tails beyond both edges that
/// follow a driven-oscillator wing A / (f^2 - f0^2)^2 matched to the edge values,
/// with f0 the interpolated peak. Set `tails` false for the bare grid integral.
/// Values may be negative.
double integrate_psd(const Spectrum& s, bool tails = true);

/// Location of the spectral maximum refined by a parabola through its neighbours, Hz.
double peak_frequency(const Spectrum& s);

} // namespace optocool
