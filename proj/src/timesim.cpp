#include "optocool/timesim.hpp"

#include "checks.hpp"
#include "optocool/constants.hpp"
#include "optocool/error.hpp"
#include "optocool/loop.hpp"

#include <fftw3.h>

#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <random>

namespace optocool {

using constants::pi;
using constants::two_pi;

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Analog (n1 s + n0) / (s^2 + gamma s + w0^2), bilinear with pre-warping at w0.
// The transform variable follows the e^{+i W t} convention of the loop model,
// so z^-1 = e^{i W dt} and s = -i W.
struct AnalogSection {
  double n1, n0, gamma, w0;
};

} // namespace

double DiscreteController::Biquad::run(double in) {
  const double out = b0 * in + s1;
  s1 = b1 * in - a1 * out + s2;
  s2 = b2 * in - a2 * out;
  return out;
}

cplx DiscreteController::Biquad::at(double omega, double dt) const {
  const cplx z1 = std::polar(1.0, omega * dt);
  const cplx z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

namespace {

// Bandpass G s / D and phase-rotated bandpass G (cos p s - sin p w0) / D; the
// latter equals e^{-i p} at the centre.
AnalogSection plain_section(double w0, double gamma) { return {gamma, 0.0, gamma, w0}; }
AnalogSection rotated_section(double w0, double gamma, double phase) {
  return {gamma * std::cos(phase), -gamma * std::sin(phase) * w0, gamma, w0};
}

} // namespace

DiscreteController::DiscreteController(const FeedbackFilter& f, double dt) : dt_(dt) {
  f.validate();
  detail::require_positive("dt", dt);
  const double steps = std::round(f.delay / dt - 0.5);
  delay_ = steps > 0.0 ? static_cast<std::size_t>(steps) : 0;
  // Remaining delay after the integer line and the zero-order hold's half sample.
  const double residual = f.delay - (static_cast<double>(delay_) + 0.5) * dt;
  line_.assign(delay_ + 1, 0.0);

  auto make = [&](const AnalogSection& a) {
    if (!(a.w0 * dt < pi))
      throw DomainError("filter centre " + detail::fmt_value(a.w0 / two_pi) + " Hz is above the Nyquist frequency");
    const double k = a.w0 / std::tan(0.5 * a.w0 * dt);
    const double d0 = k * k + a.gamma * k + a.w0 * a.w0;
    Biquad q;
    q.b0 = (a.n1 * k + a.n0) / d0;
    q.b1 = 2.0 * a.n0 / d0;
    q.b2 = (a.n0 - a.n1 * k) / d0;
    q.a1 = (2.0 * a.w0 * a.w0 - 2.0 * k * k) / d0;
    q.a2 = (k * k - a.gamma * k + a.w0 * a.w0) / d0;
    return q;
  };

  // bracket = i * bandpass, so bracket^n e^{-i phi} = bandpass^n e^{-i (phi - n pi/2)}.
  const double wf = f.main_center, gf = f.main_bandwidth;
  chains_.push_back({f.gain,
                     {make(plain_section(wf, gf)),
                      make(rotated_section(wf, gf, f.phase_offset - pi - wf * residual))}});
  for (const auto& s : f.aux_stages) {
    Chain c{s.gain, {}};
    for (int i = 1; i < s.order; ++i) c.stages.push_back(make(plain_section(s.center, s.bandwidth)));
    c.stages.push_back(make(rotated_section(s.center, s.bandwidth,
                                            s.phase - 0.5 * pi * s.order - s.center * residual)));
    chains_.push_back(std::move(c));
  }
}

double DiscreteController::step(double y) {
  line_[head_] = y;
  head_ = (head_ + 1) % line_.size();
  const double u = line_[head_]; // oldest entry: delay_ samples ago
  double out = 0.0;
  for (auto& c : chains_) {
    double v = u;
    for (auto& q : c.stages) v = q.run(v);
    out += c.gain * v;
  }
  return out;
}

void DiscreteController::reset() {
  std::fill(line_.begin(), line_.end(), 0.0);
  head_ = 0;
  for (auto& c : chains_)
    for (auto& q : c.stages) q.s1 = q.s2 = 0.0;
}

cplx DiscreteController::response(double omega) const {
  cplx sum = 0.0;
  for (const auto& c : chains_) {
    cplx h = c.gain;
    for (const auto& q : c.stages) h *= q.at(omega, dt_);
    sum += h;
  }
  const double half = 0.5 * omega * dt_;
  const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
  return sum * std::polar(1.0, omega * dt_ * static_cast<double>(delay_)) * std::polar(sinc, half);
}

void SimConfig::validate() const {
  mode.validate();
  filter.validate();
  detail::require_positive("dt", dt);
  detail::require_positive("duration", duration);
  detail::require_non_negative("s_ff_tot", s_ff_tot);
  detail::require_non_negative("s_xx_imp", s_xx_imp);
  if (!(dt < two_pi / (20.0 * mode.omega_m)))
    throw DomainError("dt = " + detail::fmt_value(dt) + " s gives fewer than 20 samples per mechanical period");
  if (duration < dt) throw DomainError("duration is shorter than one step");
}

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::floor(duration / dt)); }

TimeSeries simulate(const SimConfig& c) {
  c.validate();
  const std::size_t n = c.steps();
  const double w = c.mode.omega_m, g = c.mode.gamma_m, m = c.mode.m_eff, dt = c.dt;
  if (!(g < 2.0 * w)) throw DomainError("simulation needs an underdamped mode");

  // Exact propagator of x'' + g x' + w^2 x = F/m over one step.
  const double wd = std::sqrt(w * w - 0.25 * g * g);
  const double e = std::exp(-0.5 * g * dt);
  const double cs = std::cos(wd * dt), sn = std::sin(wd * dt);
  const double p00 = e * (cs + 0.5 * g / wd * sn), p01 = e * sn / wd;
  const double p10 = -e * w * w * sn / wd, p11 = e * (cs - 0.5 * g / wd * sn);
  // Constant force F over the step moves the equilibrium to F / (m w^2).
  const double b0 = (1.0 - p00) / (m * w * w), b1 = -p10 / (m * w * w);

  // Increment covariance Sigma - P Sigma P^T with the stationary Sigma.
  const double vx = c.s_ff_tot / (4.0 * m * m * w * w * g);
  const double vv = w * w * vx;
  const double q00 = vx - (p00 * p00 * vx + p01 * p01 * vv);
  const double q01 = -(p00 * p10 * vx + p01 * p11 * vv);
  const double q11 = vv - (p10 * p10 * vx + p11 * p11 * vv);
  const double l00 = std::sqrt(std::max(q00, 0.0));
  const double l10 = l00 > 0.0 ? q01 / l00 : 0.0;
  const double l11 = std::sqrt(std::max(q11 - l10 * l10, 0.0));
  const double sigma_imp = std::sqrt(c.s_xx_imp / (2.0 * dt));

  const double rms = std::sqrt(vx);
  const double limit = rms > 0.0 ? 1e6 * rms : std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DiscreteController ctl(c.filter, dt);
  const double scale = c.loop_scale();

  TimeSeries ts;
  ts.dt = dt;
  ts.x.resize(n);
  ts.y.resize(n);
  double x = rms * normal(rng);
  double v = std::sqrt(vv) * normal(rng);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(std::abs(x) <= limit))
      throw InstabilityError("simulation diverged at sample " + std::to_string(k) + " (|x| = " +
                                 detail::fmt_value(std::abs(x)) + " m exceeds 1e6 x thermal RMS)",
                             k);
    const double y = x + sigma_imp * normal(rng);
    ts.x[k] = x;
    ts.y[k] = y;
    const double force = scale * ctl.step(y);
    const double z0 = normal(rng), z1 = normal(rng);
    const double xn = p00 * x + p01 * v + b0 * force + l00 * z0;
    const double vn = p10 * x + p11 * v + b1 * force + l10 * z0 + l11 * z1;
    x = xn;
    v = vn;
  }
  return ts;
}

Spectrum welch_psd(std::span<const double> samples, double dt, std::size_t seg, double overlap,
                   SpectrumUnits units) {
  detail::require_positive("dt", dt);
  if (seg < 8) throw InputError("Welch segment length must be at least 8");
  if (seg > samples.size()) throw InputError("Welch segment is longer than the series");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InputError("Welch overlap must lie in [0, 1)");
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seg * (1.0 - overlap))));
  const std::size_t bins = seg / 2 + 1;

  std::vector<double> window(seg);
  double wss = 0.0;
  for (std::size_t i = 0; i < seg; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(seg));
    wss += window[i] * window[i];
  }

  std::unique_ptr<double, decltype(&fftw_free)> in(static_cast<double*>(fftw_malloc(sizeof(double) * seg)), fftw_free);
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)), fftw_free);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(seg), in.get(), out.get(), FFTW_ESTIMATE);
  }

  std::vector<double> acc(bins, 0.0);
  std::size_t count = 0;
  for (std::size_t start = 0; start + seg <= samples.size(); start += hop, ++count) {
    for (std::size_t i = 0; i < seg; ++i) in.get()[i] = window[i] * samples[start + i];
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k)
      acc[k] += out.get()[k][0] * out.get()[k][0] + out.get()[k][1] * out.get()[k][1];
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  Spectrum s;
  s.units = units;
  s.freqs.resize(bins);
  s.values.resize(bins);
  const double norm = dt / (wss * static_cast<double>(count));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (seg % 2 == 0 && k == bins - 1);
    s.freqs[k] = static_cast<double>(k) / (static_cast<double>(seg) * dt);
    s.values[k] = (edge ? 1.0 : 2.0) * norm * acc[k];
  }
  s.metadata.emplace_back("segments", std::to_string(count));
  s.metadata.emplace_back("segment_length", std::to_string(seg));
  return s;
}

namespace {

cplx loop_h(const SimConfig& c, const DiscreteController& ctl, double omega) {
  return c.loop_scale() * ctl.response(omega);
}

} // namespace

double model_displacement_psd(const SimConfig& c, const DiscreteController& ctl, double omega) {
  const cplx chi = mechanical_susceptibility(c.mode, omega);
  const cplx h = loop_h(c, ctl, omega);
  return std::norm(chi / (1.0 - chi * h)) * (c.s_ff_tot + std::norm(h) * c.s_xx_imp);
}

double model_inloop_psd(const SimConfig& c, const DiscreteController& ctl, double omega) {
  const cplx chi = mechanical_susceptibility(c.mode, omega);
  const cplx h = loop_h(c, ctl, omega);
  return std::norm(chi / (1.0 - chi * h)) * (c.s_ff_tot + c.s_xx_imp / std::norm(chi));
}

double model_occupancy(const SimConfig& c) {
  c.validate();
  const DiscreteController ctl(c.filter, c.dt);
  const double nyquist = 0.5 / c.dt;
  const double step = c.mode.gamma_m / two_pi / min_points_per_linewidth;
  const FrequencyGrid grid = FrequencyGrid::covering(step, 0.98 * nyquist, step);
  Spectrum s = Spectrum::on_grid(grid, SpectrumUnits::m2_per_hz);
  const auto n = static_cast<std::ptrdiff_t>(grid.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    s.values[u] = model_displacement_psd(c, ctl, two_pi * grid.at(u));
  }
  return occupancy_from_psd(s, zero_point_amplitude(c.mode));
}

std::vector<SweepPoint> occupancy_vs_gain_sweep(const SimConfig& config, std::span<const double> gains,
                                                std::size_t segment_length) {
  config.validate();
  std::vector<SweepPoint> out(gains.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<std::ptrdiff_t>(gains.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto u = static_cast<std::size_t>(i);
      SimConfig c = config;
      c.filter.gain = gains[u];
      c.seed = config.seed + u;
      const TimeSeries ts = simulate(c);
      const Spectrum sxx = welch_psd(ts.x, ts.dt, segment_length);
      out[u] = {gains[u], occupancy_from_psd(sxx, zero_point_amplitude(c.mode)), model_occupancy(c)};
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

} // namespace optocool
