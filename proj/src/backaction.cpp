#include "optocool/backaction.hpp"

#include "checks.hpp"
#include "optocool/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace optocool {

namespace {

double lorentz_denominator(double kappa, double x) {
  const double hk = 0.5 * kappa;
  return hk * hk + x * x;
}

// Per-point weight for weighted least squares; all-zero std_error means unweighted.
template <class Point>
std::vector<double> weights(std::span<const Point> points) {
  const bool weighted = std::all_of(points.begin(), points.end(),
                                    [](const Point& p) { return p.std_error > 0.0; });
  std::vector<double> w(points.size(), 1.0);
  if (weighted)
    for (std::size_t i = 0; i < points.size(); ++i) w[i] = 1.0 / (points[i].std_error * points[i].std_error);
  return w;
}

template <class Point>
bool has_weights(std::span<const Point> points) {
  return std::all_of(points.begin(), points.end(), [](const Point& p) { return p.std_error > 0.0; });
}

} // namespace

double optical_spring(double g, double detuning, double kappa, double omega_m) {
  detail::require_positive("kappa", kappa);
  const double lo = detuning - omega_m;
  const double hi = detuning + omega_m;
  return g * g * (lo / lorentz_denominator(kappa, lo) + hi / lorentz_denominator(kappa, hi));
}

double optical_damping(double g, double detuning, double kappa, double omega_m) {
  detail::require_positive("kappa", kappa);
  const double lo = detuning - omega_m;
  const double hi = detuning + omega_m;
  // Combined over a common denominator so that the antisymmetry in the detuning
  // holds to rounding: 1/a - 1/b = (b - a)/(ab), with b - a = -4 D W.
  const double a = lorentz_denominator(kappa, hi);
  const double b = lorentz_denominator(kappa, lo);
  return g * g * kappa * (-4.0 * detuning * omega_m) / (a * b);
}

const BackactionResult& BackactionResult::require_stable() const {
  if (!stable)
    throw InstabilityError("total mechanical damping " + detail::fmt_value(gamma_total) +
                           " rad/s is not positive: optical anti-damping exceeds intrinsic damping");
  return *this;
}

BackactionResult backaction(const MechanicalMode& mode, double kappa,
                            std::span<const OpticalBeam> beams) {
  mode.validate();
  BackactionResult r;
  for (const auto& beam : beams) {
    beam.validate();
    r.delta_omega += optical_spring(beam.g, beam.detuning, kappa, mode.omega_m);
    r.gamma_opt += optical_damping(beam.g, beam.detuning, kappa, mode.omega_m);
  }
  r.gamma_total = mode.gamma_m + r.gamma_opt;
  r.stable = r.gamma_total > 0.0;
  return r;
}

SpringFit fit_spring_vs_power(std::span<const SpringPoint> points, double detuning, double kappa,
                              double omega_m, const OpticalCavity& cavity, double incoupling) {
  if (points.size() < 2) throw InputError("spring fit needs at least two points");
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                            [](auto& a, auto& b) { return a.power < b.power; });
  if (lo->power == hi->power)
    throw RankDeficiencyError("spring fit is rank deficient: all powers are equal");

  // Spring shift per unit g^2.
  const double kernel = optical_spring(1.0, detuning, kappa, omega_m);
  if (kernel == 0.0)
    throw RankDeficiencyError("spring fit is rank deficient: zero spring kernel at this detuning");

  const auto w = weights(points);
  double spp = 0.0, spy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    spp += w[i] * points[i].power * points[i].power;
    spy += w[i] * points[i].power * points[i].delta_omega;
  }
  const double shift_per_watt = spy / spp;

  double rss = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double r = points[i].delta_omega - shift_per_watt * points[i].power;
    rss += w[i] * r * r;
  }
  const double dof = static_cast<double>(points.size() - 1);
  // Known standard errors fix the scale; otherwise use the residual variance.
  const double variance = has_weights(points) ? 1.0 / spp : (dof > 0 ? rss / dof : 0.0) / spp;

  SpringFit fit;
  fit.slope = shift_per_watt / kernel;
  fit.slope_stderr = std::sqrt(variance) / std::abs(kernel);
  fit.residual_norm = std::sqrt(rss);

  if (incoupling > 0.0) {
    OpticalBeam unit{incoupling, detuning, 0.0, BeamRole::cooling};
    const double photons_per_watt = intracavity_photons(cavity, unit);
    if (fit.slope >= 0.0 && photons_per_watt > 0.0) {
      fit.g0 = std::sqrt(fit.slope / photons_per_watt);
      fit.g0_stderr = fit.g0 > 0.0 ? 0.5 * fit.g0 * fit.slope_stderr / fit.slope : 0.0;
    }
  }
  return fit;
}

DampingOffsetFit fit_damping_offset(std::span<const DampingPoint> points, double gamma_m,
                                    double detuning, double kappa, double omega_m) {
  if (points.size() < 2) throw InputError("damping offset fit needs at least two points");
  const auto w = weights(points);
  double sw = 0.0, swr = 0.0;
  std::vector<double> resid(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    resid[i] = points[i].gamma_total - gamma_m -
               optical_damping(points[i].g, detuning, kappa, omega_m);
    sw += w[i];
    swr += w[i] * resid[i];
  }
  DampingOffsetFit fit;
  fit.offset = swr / sw;
  double rss = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double r = resid[i] - fit.offset;
    rss += w[i] * r * r;
  }
  const double dof = static_cast<double>(points.size() - 1);
  fit.offset_stderr = has_weights(points) ? std::sqrt(1.0 / sw) : std::sqrt(rss / dof / sw);
  fit.residual_norm = std::sqrt(rss);
  return fit;
}

} // namespace optocool
