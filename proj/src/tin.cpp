#include "optocool/tin.hpp"

#include "checks.hpp"
#include "optocool/error.hpp"
#include "optocool/kernels.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

namespace optocool {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Linear convolution of three real sequences of length n via one zero-padded
// r2c/c2r pair per input.
std::vector<double> fft_triple(const std::vector<double>& w) {
  const std::size_t n = w.size();
  const std::size_t out_len = 3 * n - 2;
  std::size_t len = 1;
  while (len < 4 * n) len <<= 1;
  const std::size_t bins = len / 2 + 1;

  std::unique_ptr<double, FftwFree> real(static_cast<double*>(fftw_malloc(sizeof(double) * len)));
  std::unique_ptr<fftw_complex, FftwFree> spec(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  fftw_plan fwd, inv;
  {
    std::lock_guard lock(planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), real.get(), spec.get(), FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec.get(), real.get(), FFTW_ESTIMATE);
  }
  std::fill(real.get(), real.get() + len, 0.0);
  std::copy(w.begin(), w.end(), real.get());
  fftw_execute(fwd);
  for (std::size_t k = 0; k < bins; ++k) {
    const std::complex<double> z(spec.get()[k][0], spec.get()[k][1]);
    const std::complex<double> z3 = z * z * z;
    spec.get()[k][0] = z3.real();
    spec.get()[k][1] = z3.imag();
  }
  fftw_execute(inv);
  std::vector<double> out(real.get(), real.get() + out_len);
  for (double& v : out) v /= static_cast<double>(len);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  return out;
}

std::vector<double> direct_triple(const std::vector<double>& w, bool parallel) {
  std::vector<double> two(2 * w.size() - 1), three(3 * w.size() - 2);
  if (parallel) {
    kernels::convolve_parallel(w, w, two);
    kernels::convolve_parallel(two, w, three);
  } else {
    kernels::convolve_serial(w, w, two);
    kernels::convolve_serial(two, w, three);
  }
  return three;
}

} // namespace

double phase_quadrature(double upsilon) { return -2.0 * upsilon / (1.0 + upsilon * upsilon); }

double TransductionExpansion::evaluate(double delta) const {
  const auto& c = coeffs;
  const double series = c[0] + delta * (c[1] + delta * (c[2] + delta * c[3]));
  return -2.0 / (1.0 + upsilon0 * upsilon0) * series;
}

TransductionExpansion phase_expansion(double u) {
  detail::require_finite("upsilon0", u);
  const double q = 1.0 + u * u;
  const double u2 = u * u;
  TransductionExpansion e;
  e.upsilon0 = u;
  e.coeffs = {u, (1.0 - u2) / q, u * (u2 - 3.0) / (q * q), -(u2 * u2 - 6.0 * u2 + 1.0) / (q * q * q)};
  return e;
}

Spectrum cubic_correlation_spectrum(const Spectrum& s, double variance) {
  s.validate();
  detail::require_non_negative("variance", variance);
  Spectrum out = s;
  for (double& v : out.values) v *= 3.0 * variance;
  return out;
}

TripleConvolution triple_convolution_spectrum(const Spectrum& s, ConvolutionMethod method) {
  s.validate();
  const double df = s.step();
  const double offset = s.freqs.front() / df;
  const double first_bin = std::round(offset);
  if (first_bin < 0.0 || std::abs(offset - first_bin) > 1e-6)
    throw InputError("triple convolution needs a grid on non-negative multiples of its step");

  // Single-sided bins 0..n-1, zero below the input start.
  const auto start = static_cast<std::size_t>(first_bin);
  const std::size_t n = start + s.size();
  std::vector<double> one(n, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) one[start + i] = s.values[i] * df;

  // Two-sided bin powers at indices -(n-1)..(n-1), stored with offset n-1.
  std::vector<double> w(2 * n - 1, 0.0);
  w[n - 1] = one[0];
  for (std::size_t k = 1; k < n; ++k) w[n - 1 + k] = w[n - 1 - k] = 0.5 * one[k];

  std::vector<double> conv;
  switch (method) {
  case ConvolutionMethod::fft: conv = fft_triple(w); break;
  case ConvolutionMethod::direct_serial: conv = direct_triple(w, false); break;
  case ConvolutionMethod::direct_parallel: conv = direct_triple(w, true); break;
  }

  // conv[j] holds two-sided index j - 3(n-1); fold onto 0..3(n-1).
  const std::size_t zero = 3 * (n - 1);
  const std::size_t m = 3 * (n - 1) + 1;
  TripleConvolution r;
  r.spectrum.units = s.units;
  r.spectrum.metadata = s.metadata;
  r.spectrum.freqs.resize(m);
  r.spectrum.values.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double p = k == 0 ? conv[zero] : conv[zero + k] + conv[zero - k];
    r.spectrum.freqs[k] = df * static_cast<double>(k);
    r.spectrum.values[k] = std::max(p, 0.0) / df;
  }

  double total = 0.0, edge = 0.0;
  const std::size_t edge_from = n - std::max<std::size_t>(1, n / 20);
  for (std::size_t k = 0; k < n; ++k) {
    total += one[k];
    if (k >= edge_from) edge += one[k];
  }
  r.edge_fraction = total > 0.0 ? edge / total : 0.0;
  r.leakage_warning = r.edge_fraction > 0.01;
  return r;
}

TinBudget tin_budget(double g0, double kappa, double n_th) {
  detail::require_positive("g0", g0);
  detail::require_positive("kappa", kappa);
  detail::require_non_negative("n_th", n_th);
  const double r = g0 / kappa;
  const double first = r * r * n_th;
  return {first, first * first, 2.0 * r * std::sqrt(n_th)};
}

} // namespace optocool
