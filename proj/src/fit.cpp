#include "optocool/fit.hpp"

#include "checks.hpp"
#include "optocool/constants.hpp"
#include "optocool/loop.hpp"
#include "optocool/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace optocool {

using constants::pi;
using constants::two_pi;

// ------------------------------------------------------------- FitResult

namespace {

std::size_t index_of(const FitResult& r, std::string_view name) {
  for (std::size_t i = 0; i < r.names.size(); ++i)
    if (r.names[i] == name) return i;
  throw InputError("fit result has no parameter '" + std::string(name) + "'");
}

FitResult from_lsq(const LsqResult& l, std::vector<std::string> names) {
  FitResult r;
  r.names = std::move(names);
  r.values = l.params;
  r.std_error = l.std_error;
  r.residual_norm = l.residual_norm;
  r.converged = l.converged;
  r.iterations = l.iterations;
  return r;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

double quantile(std::vector<double> v, double q) {
  const auto k = static_cast<std::ptrdiff_t>(q * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[static_cast<std::size_t>(k)];
}

} // namespace

double FitResult::value(std::string_view name) const { return values[index_of(*this, name)]; }

double FitResult::error(std::string_view name) const {
  if (std_error.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std_error[index_of(*this, name)];
}

bool FitResult::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

// ------------------------------------------------------------ Lorentzian

double Lorentzian::operator()(double f) const {
  const double d = f - center;
  return floor + area * (fwhm / two_pi) / (d * d + 0.25 * fwhm * fwhm);
}

FitResult fit_lorentzian(const Spectrum& s) {
  s.validate();
  const std::size_t n = s.size();
  const double scale = *std::max_element(s.values.begin(), s.values.end());
  const double floor0 = quantile(s.values, 0.1);
  const auto ipk = static_cast<std::size_t>(std::max_element(s.values.begin(), s.values.end()) - s.values.begin());
  const double height = scale - floor0;
  if (!(scale > 0.0) || height <= 1e-9 * scale)
    throw RankDeficiencyError("spectrum is flat: no peak above the floor to fit");

  // Half-maximum crossings, linearly interpolated.
  const double half = floor0 + 0.5 * height;
  auto crossing = [&](std::ptrdiff_t dir) {
    auto i = static_cast<std::ptrdiff_t>(ipk);
    while (i + dir >= 0 && i + dir < static_cast<std::ptrdiff_t>(n) && s.values[static_cast<std::size_t>(i)] > half) i += dir;
    const auto a = static_cast<std::size_t>(i - dir), b = static_cast<std::size_t>(i);
    const double ya = s.values[a], yb = s.values[b];
    if (ya == yb) return s.freqs[b];
    return s.freqs[a] + (half - ya) / (yb - ya) * (s.freqs[b] - s.freqs[a]);
  };
  const double df = s.step();
  const double width0 = std::max(crossing(+1) - crossing(-1), 2.0 * df);
  const double span = s.freqs.back() - s.freqs.front();
  if (span < 5.0 * width0)
    throw InputError("spectrum spans " + detail::fmt_value(span / width0) +
                     " linewidths; a Lorentzian fit needs at least 5");

  const double f_ref = peak_frequency(s);
  // p = [center - f_ref, fwhm, area / scale, floor / scale]
  std::vector<double> p0 = {0.0, width0, 0.5 * pi * width0 * height / scale, floor0 / scale};

  LsqProblem prob;
  prob.residual_count = n;
  prob.residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    const Lorentzian l{f_ref + p[0], p[1], p[2], p[3]};
    for (std::size_t i = 0; i < n; ++i) r[i] = l(s.freqs[i]) - s.values[i] / scale;
  };
  prob.jacobian = [&](const std::vector<double>& p, std::vector<double>& j) {
    const double g = p[1], a = p[2];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = s.freqs[i] - (f_ref + p[0]);
      const double den = d * d + 0.25 * g * g;
      const double lor = (g / two_pi) / den;
      j[i * 4 + 0] = a * lor * 2.0 * d / den;
      j[i * 4 + 1] = a * (1.0 / (two_pi * den) - (g / two_pi) * 0.5 * g / (den * den));
      j[i * 4 + 2] = lor;
      j[i * 4 + 3] = 1.0;
    }
  };
  LsqOptions opt;
  opt.lower = {-span, 1e-6 * df, -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  opt.upper = {span, 10.0 * span, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  const LsqResult first = levenberg_marquardt(prob, p0, opt);

  // Spectral estimates scatter in proportion to their value, so refit with residuals
  // relative to the first-pass model. The floor and the error bars both depend on it.
  std::vector<double> weight(n);
  {
    const auto& q = first.params;
    const Lorentzian l{f_ref + q[0], q[1], q[2], q[3]};
    const double tiny = 1e-6 * (q[2] / q[1]);
    for (std::size_t i = 0; i < n; ++i) weight[i] = 1.0 / std::max(std::abs(l(s.freqs[i])), tiny);
  }
  prob.residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    const Lorentzian l{f_ref + p[0], p[1], p[2], p[3]};
    for (std::size_t i = 0; i < n; ++i) r[i] = weight[i] * (l(s.freqs[i]) - s.values[i] / scale);
  };
  prob.jacobian = [&, jac = prob.jacobian](const std::vector<double>& p, std::vector<double>& j) {
    jac(p, j);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 4; ++c) j[i * 4 + c] *= weight[i];
  };
  const LsqResult l = levenberg_marquardt(prob, first.params, opt);

  FitResult r = from_lsq(l, {"center_hz", "fwhm_hz", "area", "floor"});
  r.values = {f_ref + l.params[0], l.params[1], l.params[2] * scale, l.params[3] * scale};
  if (!r.std_error.empty()) {
    r.std_error[2] *= scale;
    r.std_error[3] *= scale;
  }
  // residual_norm is the relative (weighted) norm.
  if (!(r.values[2] > 0.0)) r.flags.push_back("non_positive_area");
  return r;
}

// ---------------------------------------------------- anchor calibration

CalibrationConstant calibrate_anchor(const Spectrum& vv, double n_bar, double x_zpf,
                                     std::optional<double> floor) {
  if (vv.units != SpectrumUnits::volts2_per_hz)
    throw InputError("anchor calibration needs a V2/Hz spectrum, got " + std::string(to_string(vv.units)));
  detail::require_positive("x_zpf", x_zpf);
  if (!(n_bar + 0.5 > 0.0)) throw DomainError("anchor occupancy must exceed -1/2");
  vv.validate();
  const double bg = floor ? *floor : fit_lorentzian(vv).value("floor");
  Spectrum sub = vv;
  for (double& v : sub.values) v -= bg;
  const double area = integrate_psd(sub);
  if (!(area > 0.0))
    throw CalibrationError("background-subtracted anchor area " + detail::fmt_value(area) +
                           " V^2 is not positive");
  return {2.0 * x_zpf * x_zpf * (n_bar + 0.5) / area, n_bar, bg};
}

Spectrum apply_calibration(const Spectrum& vv, const CalibrationConstant& cal, bool subtract_floor) {
  if (vv.units != SpectrumUnits::volts2_per_hz)
    throw InputError("calibration applies to V2/Hz spectra, got " + std::string(to_string(vv.units)));
  Spectrum out = vv;
  out.units = SpectrumUnits::m2_per_hz;
  const double bg = subtract_floor ? cal.floor : 0.0;
  for (double& v : out.values) v = cal.k * (v - bg);
  return out;
}

// ----------------------------------------------------- closed-loop fits

FitResult fit_closed_loop(const Spectrum& syy, const ClosedLoopFixed& fixed, const ClosedLoopGuess& guess) {
  if (syy.units != SpectrumUnits::m2_per_hz)
    throw InputError("closed-loop fit needs a calibrated m2/Hz spectrum, got " +
                     std::string(to_string(syy.units)));
  syy.validate();
  detail::require_positive("s_xzp", fixed.s_xzp);
  detail::require_positive("initial n_imp", guess.n_imp);
  const double g_scale = std::max(std::abs(guess.gain), 1.0);
  const double n_scale = guess.n_imp;
  const std::size_t n = syy.size();
  for (double v : syy.values)
    if (!(v > 0.0)) throw InputError("closed-loop fit needs strictly positive spectrum values");

  LoopModel model{fixed.mode, fixed.filter, fixed.s_ff_tot, 0.0};
  model.validate();
  LsqProblem prob;
  prob.residual_count = n;
  prob.residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    LoopModel m = model;
    m.filter.gain = p[0] * g_scale;
    m.filter.phase_offset = p[1];
    m.s_xx_imp = 2.0 * p[2] * n_scale * fixed.s_xzp;
    for (std::size_t i = 0; i < n; ++i)
      r[i] = inloop_psd_at(m, two_pi * syy.freqs[i]) / syy.values[i] - 1.0;
  };
  LsqOptions opt;
  opt.lower = {0.0, -std::numeric_limits<double>::infinity(), 1e-12};
  opt.upper = {guess.gain_max / g_scale, std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
  const LsqResult l = levenberg_marquardt(prob, {guess.gain / g_scale, guess.phase, 1.0}, opt);

  FitResult r = from_lsq(l, {"gain", "phase", "n_imp"});
  r.values = {l.params[0] * g_scale, std::remainder(l.params[1], two_pi), l.params[2] * n_scale};
  if (!r.std_error.empty()) {
    r.std_error[0] *= g_scale;
    r.std_error[2] *= n_scale;
  }
  if (l.at_bound[0]) r.flags.push_back("gain_at_bound");
  return r;
}

LineFit fit_zero_intercept(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw InputError("line fit needs equal, non-empty x and y");
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx == 0.0) throw RankDeficiencyError("line fit is rank deficient: all x are zero");
  LineFit f;
  f.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = y[i] - f.slope * x[i];
    rss += d * d;
  }
  f.residual_norm = std::sqrt(rss);
  f.slope_stderr = x.size() > 1 ? std::sqrt(rss / static_cast<double>(x.size() - 1) / sxx) : 0.0;
  return f;
}

// --------------------------------------------------------------- heating

double HeatingModel::inverse_area(double power) const {
  return (a_dba * power + gamma0) / ((1.0 + a_eh * power) * gamma0);
}

FitResult fit_inverse_area(std::span<const AreaPoint> points, HeatingModelKind kind, double gamma0,
                           std::optional<double> area0) {
  if (points.size() < 3) throw InputError("heating fit needs at least 3 points");
  detail::require_positive("gamma0", gamma0);
  const double a0 = area0 ? *area0 : points.front().area;
  detail::require_positive("area0", a0);
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                            [](auto& a, auto& b) { return a.power < b.power; });
  if (lo->power == hi->power) throw RankDeficiencyError("heating fit is rank deficient: all powers are equal");

  std::vector<double> p(points.size()), y(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    detail::require_positive("area", points[i].area);
    p[i] = points[i].power;
    y[i] = a0 / points[i].area;
  }
  // Area noise is proportional to the area, so every residual is taken relative to y.
  // dba only: (y - 1) / y = (a_dba / gamma0) P / y.
  std::vector<double> xw(p.size()), yw(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    xw[i] = p[i] / y[i];
    yw[i] = (y[i] - 1.0) / y[i];
  }
  const LineFit line = fit_zero_intercept(xw, yw);
  if (kind == HeatingModelKind::dba_only) {
    FitResult r;
    r.names = {"a_dba"};
    r.values = {line.slope * gamma0};
    r.std_error = {line.slope_stderr * gamma0};
    r.residual_norm = line.residual_norm;
    r.converged = true;
    return r;
  }

  const double a_scale = std::max(std::abs(line.slope * gamma0), 1e-300);
  const double p_max = std::abs(hi->power) > 0.0 ? std::abs(hi->power) : 1.0;
  const double b_scale = 1.0 / p_max;
  LsqProblem prob;
  prob.residual_count = points.size();
  prob.residuals = [&](const std::vector<double>& q, std::vector<double>& r) {
    const HeatingModel m{q[0] * a_scale, q[1] * b_scale, gamma0, a0};
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = m.inverse_area(p[i]) / y[i] - 1.0;
  };
  prob.jacobian = [&](const std::vector<double>& q, std::vector<double>& j) {
    const double a = q[0] * a_scale, b = q[1] * b_scale;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double den = 1.0 + b * p[i];
      j[i * 2 + 0] = a_scale * p[i] / (den * gamma0 * y[i]);
      j[i * 2 + 1] = -b_scale * p[i] * (a * p[i] + gamma0) / (den * den * gamma0 * y[i]);
    }
  };
  const LsqResult l = levenberg_marquardt(prob, {1.0, 0.0}, {});
  FitResult r = from_lsq(l, {"a_dba", "a_eh"});
  r.values = {l.params[0] * a_scale, l.params[1] * b_scale};
  if (!r.std_error.empty()) {
    r.std_error[0] *= a_scale;
    r.std_error[1] *= b_scale;
  }
  return r;
}

// ----------------------------------------------------------- gas damping

double gas_damping_q(const GasMaterial& m, double omega_m, double pressure) {
  detail::require_positive("density", m.density);
  detail::require_positive("thickness", m.thickness);
  detail::require_positive("molar_mass", m.molar_mass);
  detail::require_positive("temperature", m.temperature);
  detail::require_positive("omega_m", omega_m);
  detail::require_positive("pressure", pressure);
  return m.density * m.thickness * omega_m / 4.0 * std::sqrt(pi / 2.0) *
         std::sqrt(constants::gas_constant * m.temperature / m.molar_mass) / pressure;
}

double GasDampingModel::quality(double pressure) const {
  return 1.0 / (1.0 / q0 + a_q / gas_damping_q(material, omega_m, pressure));
}

GasDampingModel fit_q_vs_pressure(std::span<const PressurePoint> points, const GasMaterial& material,
                                  double omega_m) {
  if (points.size() < 2) throw InputError("gas damping fit needs at least 2 points");
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                            [](auto& a, auto& b) { return a.pressure < b.pressure; });
  if (lo->pressure == hi->pressure)
    throw RankDeficiencyError("gas damping fit is rank deficient: all pressures are equal");
  if (hi->pressure < 10.0 * lo->pressure)
    throw InputError("gas damping fit needs pressures spanning at least a decade");

  const std::size_t n = points.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    detail::require_positive("q", points[i].q);
    x[i] = 1.0 / gas_damping_q(material, omega_m, points[i].pressure);
    y[i] = 1.0 / points[i].q;
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double icpt = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y[i] - icpt - slope * x[i];
    rss += d * d;
  }
  const double s2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
  const double se_slope = std::sqrt(s2 / sxx);
  const double se_icpt = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));

  GasDampingModel m;
  if (!(icpt > 0.0)) throw NumericalError("fitted intrinsic dissipation 1/Q0 is not positive");
  m.q0 = 1.0 / icpt;
  m.a_q = slope;
  m.q0_stderr = se_icpt / (icpt * icpt);
  m.a_q_stderr = se_slope;
  m.material = material;
  m.omega_m = omega_m;
  return m;
}

// ---------------------------------------------------- reflection lineshape

void ReflectionModel::validate() const {
  detail::require_unit_interval("eta_r", eta_r);
  detail::require_positive("kappa", kappa);
  detail::require_finite("eta_L", eta_L);
  detail::require_finite("asym", asym);
  if (eta_r - eta_L < -1e-12)
    throw DomainError("on-resonance reflection eta_r - eta_L = " + detail::fmt_value(eta_r - eta_L) +
                      " is negative");
}

double reflection_at(const ReflectionModel& m, double detuning) {
  const double u = 2.0 * detuning / m.kappa;
  const double den = 1.0 + u * u;
  return m.eta_r - m.eta_L * (1.0 / den - m.asym * u / den);
}

ReflectionCurve reflection_dip(const ReflectionModel& m, std::span<const double> detunings) {
  m.validate();
  ReflectionCurve c;
  for (double d : detunings) {
    const double u = 2.0 * d / m.kappa;
    const double den = 1.0 + u * u;
    c.detuning.push_back(d);
    c.lorentzian.push_back(m.eta_L / den);
    c.dispersive.push_back(m.eta_L * m.asym * u / den);
    c.total.push_back(m.eta_r - c.lorentzian.back() + c.dispersive.back());
  }
  return c;
}

FitResult fit_reflection_dip(const Spectrum& scan, double eta_r) {
  scan.validate_grid();
  detail::require_unit_interval("eta_r", eta_r);
  const std::size_t n = scan.size();
  const auto imin = static_cast<std::size_t>(std::min_element(scan.values.begin(), scan.values.end()) - scan.values.begin());
  const double depth = eta_r - scan.values[imin];
  if (!(depth > 0.0)) throw RankDeficiencyError("reflection scan has no dip below eta_r");

  // Full width at half depth of the dip, in Hz of detuning.
  const double half = eta_r - 0.5 * depth;
  std::size_t l = imin, r = imin;
  while (l > 0 && scan.values[l] < half) --l;
  while (r + 1 < n && scan.values[r] < half) ++r;
  const double width_hz = std::max(scan.freqs[r] - scan.freqs[l], 2.0 * scan.step());
  const double span = scan.freqs.back() - scan.freqs.front();
  if (span < 5.0 * width_hz)
    throw InputError("reflection scan spans " + detail::fmt_value(span / width_hz) +
                     " linewidths; the fit needs at least 5");
  const double kappa0 = two_pi * width_hz;

  LsqProblem prob;
  prob.residual_count = n;
  prob.residuals = [&](const std::vector<double>& p, std::vector<double>& res) {
    const ReflectionModel m{eta_r, p[1], p[2], p[0] * kappa0};
    for (std::size_t i = 0; i < n; ++i) res[i] = reflection_at(m, two_pi * scan.freqs[i]) - scan.values[i];
  };
  prob.jacobian = [&](const std::vector<double>& p, std::vector<double>& j) {
    const double kappa = p[0] * kappa0, eta_l = p[1], asym = p[2];
    for (std::size_t i = 0; i < n; ++i) {
      const double u = 2.0 * two_pi * scan.freqs[i] / kappa;
      const double den = 1.0 + u * u;
      const double dy_du = eta_l * (asym * den + 2.0 * u * (1.0 - asym * u)) / (den * den);
      j[i * 3 + 0] = dy_du * (-u / p[0]);
      j[i * 3 + 1] = -(1.0 - asym * u) / den;
      j[i * 3 + 2] = eta_l * u / den;
    }
  };
  LsqOptions opt;
  opt.lower = {1e-6, -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const LsqResult lr = levenberg_marquardt(prob, {1.0, depth, 0.0}, opt);
  FitResult res = from_lsq(lr, {"kappa_hz", "eta_L", "asym"});
  res.values[0] = lr.params[0] * kappa0 / two_pi;
  if (!res.std_error.empty()) res.std_error[0] *= kappa0 / two_pi;
  return res;
}

// ---------------------------------------------------- frequency-noise cal

double FrequencyNoiseCal::less_favourable_lambda() const {
  return lambda_low > 0.0 ? lambda_low : lambda_high;
}

FrequencyNoiseCal frequency_noise_calibration(double ratio, double phi_mod, double omega_mod, double kappa) {
  if (!(ratio >= 0.0 && ratio <= 1.0))
    throw InputError("locked/unlocked ratio must lie in [0, 1], got " + detail::fmt_value(ratio));
  detail::require_positive("kappa", kappa);
  detail::require_non_negative("phi_mod", phi_mod);
  detail::require_non_negative("omega_mod", omega_mod);
  const double root = std::sqrt(ratio);
  return {ratio, 0.5 * (1.0 - root), 0.5 * (1.0 + root), phi_mod, omega_mod, kappa};
}

double tone_area(const Spectrum& s, double center_hz, double half_width_hz) {
  s.validate_grid();
  detail::require_positive("half_width_hz", half_width_hz);
  std::vector<double> window;
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::abs(s.freqs[i] - center_hz) > half_width_hz) continue;
    window.push_back(s.values[i]);
    sum += s.values[i];
  }
  if (window.size() < 3) throw InputError("calibration tone window holds fewer than 3 bins");
  const double bg = median(window);
  return (sum - bg * static_cast<double>(window.size())) * s.step();
}

CalibratedNoise calibrate_frequency_noise(const Spectrum& vv, const FrequencyNoiseCal& cal, double lambda,
                                          double tone_area_vv, double freq_pull) {
  if (vv.units != SpectrumUnits::volts2_per_hz)
    throw InputError("frequency-noise calibration needs a V2/Hz spectrum, got " +
                     std::string(to_string(vv.units)));
  detail::require_positive("lambda", lambda);
  detail::require_positive("tone area", tone_area_vv);
  detail::require_positive("phi_mod", cal.phi_mod);
  detail::require_positive("freq_pull", freq_pull);
  CalibratedNoise out{vv, vv, vv};
  out.phase.units = SpectrumUnits::per_hz;
  out.frequency.units = SpectrumUnits::rad2_per_s2_per_hz;
  out.displacement.units = SpectrumUnits::m2_per_hz;
  const double c = tone_area_vv / (cal.phi_mod * cal.phi_mod);
  const double to_freq = cal.kappa * cal.kappa / (16.0 * lambda * lambda);
  for (std::size_t i = 0; i < vv.size(); ++i) {
    out.phase.values[i] = vv.values[i] / c;
    out.frequency.values[i] = out.phase.values[i] * to_freq;
    out.displacement.values[i] = out.frequency.values[i] / (freq_pull * freq_pull);
  }
  return out;
}

} // namespace optocool
