#include "optocool/kernels.hpp"

#include "optocool/constants.hpp"
#include "optocool/error.hpp"

#include <algorithm>

namespace optocool::kernels {

namespace {

void check_sizes(const FrequencyGrid& grid, std::span<double> sxx, std::span<double> syy) {
  if ((!sxx.empty() && sxx.size() != grid.count) || (!syy.empty() && syy.size() != grid.count))
    throw InputError("output span does not match grid size");
}

void check_sizes(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  if (a.empty() || b.empty() || out.size() != a.size() + b.size() - 1)
    throw InputError("convolution output must have size a + b - 1");
}

inline void loop_point(const LoopModel& m, double omega, double* sxx, double* syy) {
  const cplx chi = mechanical_susceptibility(m.mode, omega);
  const cplx h = loop_response(m, omega);
  const double fb = std::norm(chi / (1.0 - chi * h));
  if (sxx) *sxx = fb * (m.s_ff_tot + std::norm(h) * m.s_xx_imp);
  if (syy) *syy = fb * (m.s_ff_tot + m.s_xx_imp / std::norm(chi));
}

// Output sample k sums a[i] b[k - i] over the overlapping range, always in
// increasing i so the serial and parallel versions round identically.
inline double conv_at(std::span<const double> a, std::span<const double> b, std::size_t k) {
  const std::size_t i0 = k >= b.size() ? k - b.size() + 1 : 0;
  const std::size_t i1 = std::min(k, a.size() - 1);
  double acc = 0.0;
  for (std::size_t i = i0; i <= i1; ++i) acc += a[i] * b[k - i];
  return acc;
}

} // namespace

void loop_psd_serial(const LoopModel& model, const FrequencyGrid& grid, std::span<double> sxx,
                     std::span<double> syy) {
  check_sizes(grid, sxx, syy);
  for (std::size_t i = 0; i < grid.count; ++i)
    loop_point(model, constants::two_pi * grid.at(i), sxx.empty() ? nullptr : &sxx[i],
               syy.empty() ? nullptr : &syy[i]);
}

void loop_psd_parallel(const LoopModel& model, const FrequencyGrid& grid, std::span<double> sxx,
                       std::span<double> syy) {
  check_sizes(grid, sxx, syy);
  const auto n = static_cast<std::ptrdiff_t>(grid.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    loop_point(model, constants::two_pi * grid.at(u), sxx.empty() ? nullptr : &sxx[u],
               syy.empty() ? nullptr : &syy[u]);
  }
}

void convolve_serial(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  check_sizes(a, b, out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = conv_at(a, b, k);
}

void convolve_parallel(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  check_sizes(a, b, out);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = conv_at(a, b, static_cast<std::size_t>(k));
}

} // namespace optocool::kernels
