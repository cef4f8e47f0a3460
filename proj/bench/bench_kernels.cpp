// Serial reference versus OpenMP kernels on problem sizes typical of a gain sweep.

#include "optocool/constants.hpp"
#include "optocool/kernels.hpp"
#include "optocool/tin.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace optocool;

namespace {

LoopModel bench_model() {
  LoopModel m;
  m.mode = {angular(1.3e6), angular(52.0), 200e-15, 300.0};
  m.filter.gain = 100.0;
  m.filter.delay = 300e-9;
  m.filter.main_center = angular(1.34e6);
  m.filter.main_bandwidth = angular(77.86e3);
  m.filter.phase_offset = tune_phase(m.filter, m.mode.omega_m);
  m.s_ff_tot = 1e-34;
  m.s_xx_imp = 1e-33;
  return m;
}

template <auto Kernel>
void loop_psd(benchmark::State& state) {
  const LoopModel m = bench_model();
  const auto n = static_cast<std::size_t>(state.range(0));
  const FrequencyGrid grid{0.8e6, 1e6 / static_cast<double>(n), n};
  std::vector<double> sxx(n), syy(n);
  for (auto _ : state) {
    Kernel(m, grid, sxx, syy);
    benchmark::DoNotOptimize(sxx.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <auto Kernel>
void convolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> a(n, 1.0), b(n, 0.5), out(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) a[i] = 1.0 / (1.0 + static_cast<double>(i));
  for (auto _ : state) {
    Kernel(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void triple_fft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Spectrum s = Spectrum::on_grid({0.0, 500.0, n}, SpectrumUnits::per_hz);
  for (std::size_t i = 0; i < n; ++i) s.values[i] = 1.0 / (1.0 + 1e-6 * static_cast<double>(i * i));
  for (auto _ : state) benchmark::DoNotOptimize(triple_convolution_spectrum(s).edge_fraction);
}

} // namespace

BENCHMARK(loop_psd<kernels::loop_psd_serial>)->Arg(1 << 16)->Arg(1 << 19)->Unit(benchmark::kMillisecond);
BENCHMARK(loop_psd<kernels::loop_psd_parallel>)->Arg(1 << 16)->Arg(1 << 19)->Unit(benchmark::kMillisecond);
BENCHMARK(convolve<kernels::convolve_serial>)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(convolve<kernels::convolve_parallel>)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(triple_fft)->Arg(1 << 12)->Arg(1 << 15)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
