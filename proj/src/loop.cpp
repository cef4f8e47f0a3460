#include "optocool/loop.hpp"

#include "checks.hpp"
#include "optocool/constants.hpp"
#include "optocool/error.hpp"
#include "optocool/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace optocool {

using constants::pi;
using constants::two_pi;

void LoopModel::validate() const {
  mode.validate();
  filter.validate();
  detail::require_non_negative("s_ff_tot", s_ff_tot);
  detail::require_non_negative("s_xx_imp", s_xx_imp);
}

cplx mechanical_susceptibility(const MechanicalMode& mode, double omega) {
  const double w0 = mode.omega_m;
  return 1.0 / (mode.m_eff * cplx(w0 * w0 - omega * omega, -mode.gamma_m * omega));
}

cplx loop_response(const LoopModel& model, double omega) {
  return model.loop_scale() * filter_response(model.filter, omega);
}

cplx closed_loop_susceptibility(const LoopModel& model, double omega) {
  const cplx chi = mechanical_susceptibility(model.mode, omega);
  return chi / (1.0 - chi * loop_response(model, omega));
}

double displacement_psd_at(const LoopModel& model, double omega) {
  const cplx h = loop_response(model, omega);
  return std::norm(closed_loop_susceptibility(model, omega)) *
         (model.s_ff_tot + std::norm(h) * model.s_xx_imp);
}

double inloop_psd_at(const LoopModel& model, double omega) {
  const cplx chi = mechanical_susceptibility(model.mode, omega);
  return std::norm(closed_loop_susceptibility(model, omega)) *
         (model.s_ff_tot + model.s_xx_imp / std::norm(chi));
}

namespace {

void check_resolution(const LoopModel& model, const FrequencyGrid& grid) {
  if (grid.count < 3 || !(grid.step > 0.0)) throw InputError("loop spectrum grid needs 3+ increasing points");
  const double linewidth_hz = model.mode.gamma_m / two_pi;
  const double per_linewidth = linewidth_hz / grid.step;
  if (per_linewidth < min_points_per_linewidth)
    throw InputError("grid step " + detail::fmt_value(grid.step) + " Hz resolves the " +
                     detail::fmt_value(linewidth_hz) + " Hz linewidth with only " +
                     detail::fmt_value(per_linewidth) + " points (need " +
                     detail::fmt_value(min_points_per_linewidth) + ")");
}

} // namespace

Spectrum closed_loop_displacement_psd(const LoopModel& model, const FrequencyGrid& grid) {
  model.validate();
  check_resolution(model, grid);
  Spectrum s = Spectrum::on_grid(grid, SpectrumUnits::m2_per_hz);
  kernels::loop_psd_parallel(model, grid, s.values, {});
  return s;
}

Spectrum inloop_psd(const LoopModel& model, const FrequencyGrid& grid) {
  model.validate();
  check_resolution(model, grid);
  Spectrum s = Spectrum::on_grid(grid, SpectrumUnits::m2_per_hz);
  kernels::loop_psd_parallel(model, grid, {}, s.values);
  return s;
}

double occupancy_from_psd(const Spectrum& spectrum, double x_zpf) {
  if (spectrum.units != SpectrumUnits::m2_per_hz)
    throw InputError("occupancy needs a displacement spectrum in m2/Hz, got " +
                     std::string(to_string(spectrum.units)));
  detail::require_positive("x_zpf", x_zpf);
  return integrate_psd(spectrum) / (2.0 * x_zpf * x_zpf) - 0.5;
}

ColdDampingIntegrals cold_damping_integrals(const MechanicalMode& mode, double g_fb) {
  mode.validate();
  if (g_fb < 0.0) throw DomainError("cold-damping gain must be non-negative");
  const double m2g = mode.m_eff * mode.m_eff * mode.gamma_m * (1.0 + g_fb);
  return {pi / (2.0 * m2g * mode.omega_m * mode.omega_m), pi / (2.0 * m2g)};
}

double cold_damping_occupancy(double s_ff_tot, double g_fb, const MechanicalMode& mode,
                              double s_xx_imp) {
  const auto in = cold_damping_integrals(mode, g_fb);
  const double x = zero_point_amplitude(mode);
  const double fed_back = mode.m_eff * mode.gamma_m * g_fb;
  // int S_xx dW/2pi over the ideal-differentiator loop, divided by 2 x_zpf^2.
  const double area = (s_ff_tot * in.plain + fed_back * fed_back * s_xx_imp * in.weighted) / two_pi;
  return area / (2.0 * x * x) - 0.5;
}

double optimal_gain(const MechanicalMode& mode, double s_ff_tot, double s_xx_imp) {
  mode.validate();
  detail::require_positive("s_ff_tot", s_ff_tot);
  detail::require_positive("s_xx_imp", s_xx_imp);
  return std::sqrt(s_ff_tot / s_xx_imp) / (mode.m_eff * mode.omega_m * mode.gamma_m);
}

namespace {

cplx open_loop(const LoopModel& model, std::span<const SpuriousMode> spurious, double omega) {
  cplx p = mechanical_susceptibility(model.mode, omega);
  for (const auto& s : spurious)
    p += s.coupling / (s.m_eff * cplx(s.omega * s.omega - omega * omega, -s.gamma * omega));
  return 1.0 - p * loop_response(model, omega);
}

// Phase change of f between a and b, bisecting until each step turns less than 0.3 rad.
double winding(const LoopModel& model, std::span<const SpuriousMode> spurious, double a, double b,
               cplx fa, cplx fb, int depth) {
  const double step = std::arg(fb / fa);
  if (std::abs(step) < 0.3 || depth > 48 || b - a < 1e-9 * b) return step;
  const double mid = 0.5 * (a + b);
  const cplx fm = open_loop(model, spurious, mid);
  return winding(model, spurious, a, mid, fa, fm, depth + 1) + winding(model, spurious, mid, b, fm, fb, depth + 1);
}

} // namespace

int nyquist_encirclements(const LoopModel& model, std::span<const SpuriousMode> spurious) {
  // Samples: a log-spaced backbone plus a dense patch around every mode and the filter
  // centre, so that no resonance hides between two backbone points.
  std::vector<double> pts;
  double top = std::max(model.mode.omega_m, model.filter.main_center);
  auto patch = [&](double center, double width) {
    for (int k = -200; k <= 200; ++k) {
      const double w = center + 0.25 * width * k;
      if (w > 0.0) pts.push_back(w);
    }
  };
  patch(model.mode.omega_m, model.mode.gamma_m);
  patch(model.filter.main_center, model.filter.main_bandwidth);
  for (const auto& a : model.filter.aux_stages) {
    patch(a.center, a.bandwidth);
    top = std::max(top, a.center);
  }
  for (const auto& s : spurious) {
    patch(s.omega, s.gamma);
    top = std::max(top, s.omega);
  }
  const double lo = 1e-6 * top, hi = 1e3 * top;
  for (double w : log_spaced(lo, hi, 4000)) pts.push_back(w);
  pts.push_back(0.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  double total = 0.0;
  cplx prev = open_loop(model, spurious, pts[0]);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const cplx cur = open_loop(model, spurious, pts[i]);
    total += winding(model, spurious, pts[i - 1], pts[i], prev, cur, 0);
    prev = cur;
  }
  // Conjugate symmetry: the negative half-axis contributes the same phase change,
  // and a counter-clockwise turn encloses the growing (Im W > 0) half-plane.
  return static_cast<int>(std::lround(total / pi));
}

std::vector<StabilityPoint> loop_stability_scan(const LoopModel& model, std::span<const double> gains,
                                                std::span<const SpuriousMode> spurious) {
  model.validate();
  // Effective damping is linear in gain, so evaluate the unit-gain response once per mode.
  FeedbackFilter unit = model.filter;
  std::vector<double> base, slope;
  auto add_mode = [&](double omega, double gamma, double m_eff, double coupling) {
    const double scale = coupling * model.loop_scale() / (m_eff * omega);
    unit.gain = 1.0;
    const double main = main_response(unit, omega).imag();
    const double aux = aux_response(unit, omega).imag();
    // Aux stages are not scaled by the overall gain.
    base.push_back(gamma + scale * aux);
    slope.push_back(scale * main);
  };
  add_mode(model.mode.omega_m, model.mode.gamma_m, model.mode.m_eff, 1.0);
  for (const auto& s : spurious) {
    detail::require_positive("spurious omega", s.omega);
    detail::require_positive("spurious gamma", s.gamma);
    detail::require_positive("spurious m_eff", s.m_eff);
    add_mode(s.omega, s.gamma, s.m_eff, s.coupling);
  }
  std::vector<StabilityPoint> out;
  out.reserve(gains.size());
  for (double g : gains) {
    double worst = base[0] + g * slope[0];
    for (std::size_t k = 1; k < base.size(); ++k) worst = std::min(worst, base[k] + g * slope[k]);
    LoopModel m = model;
    m.filter.gain = g;
    const int enc = nyquist_encirclements(m, spurious);
    out.push_back({g, worst > 0.0 && enc == 0, worst, enc});
  }
  return out;
}

std::vector<GainPoint> gain_sweep(const LoopModel& model, std::span<const double> gains,
                                  const FrequencyGrid& grid, std::span<const SpuriousMode> spurious) {
  const auto stability = loop_stability_scan(model, gains, spurious);
  std::vector<GainPoint> out;
  out.reserve(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    LoopModel m = model;
    m.filter.gain = gains[i];
    const double n = occupancy_from_psd(closed_loop_displacement_psd(m, grid), zero_point_amplitude(m.mode));
    out.push_back({gains[i], n, stability[i].stable});
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  detail::require_positive("lo", lo);
  detail::require_positive("hi", hi);
  if (count < 2) return {lo};
  std::vector<double> out(count);
  const double r = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo * std::exp(r * static_cast<double>(i));
  out.back() = hi;
  return out;
}

} // namespace optocool
