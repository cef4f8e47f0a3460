#pragma once

// Grid kernels with an OpenMP implementation and a serial reference that
// produces identical results. Tests compare the two and the benchmark target
// times them.

#include "optocool/loop.hpp"

#include <span>

namespace optocool::kernels {

/// Fills S_xx and S_yy (either span may be empty to skip it) on a grid in Hz.
void loop_psd_serial(const LoopModel& model, const FrequencyGrid& grid, std::span<double> sxx,
                     std::span<double> syy);
void loop_psd_parallel(const LoopModel& model, const FrequencyGrid& grid, std::span<double> sxx,
                       std::span<double> syy);

/// Full linear convolution, out.size() == a.size() + b.size() - 1.
void convolve_serial(std::span<const double> a, std::span<const double> b, std::span<double> out);
void convolve_parallel(std::span<const double> a, std::span<const double> b, std::span<double> out);

} // namespace optocool::kernels
