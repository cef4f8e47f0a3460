#include "optocool/lsq.hpp"

#include "optocool/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace optocool {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

double sum_squares(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

void clamp_to_bounds(std::vector<double>& p, const LsqOptions& o) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!o.lower.empty()) p[i] = std::max(p[i], o.lower[i]);
    if (!o.upper.empty()) p[i] = std::min(p[i], o.upper[i]);
  }
}

void numeric_jacobian(const LsqProblem& prob, const std::vector<double>& p, std::vector<double>& jac) {
  const std::size_t n = prob.residual_count, m = p.size();
  jac.assign(n * m, 0.0);
  std::vector<double> rp(n), rm(n), q = p;
  for (std::size_t j = 0; j < m; ++j) {
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(std::abs(p[j]), 1e-12);
    q[j] = p[j] + h;
    prob.residuals(q, rp);
    q[j] = p[j] - h;
    prob.residuals(q, rm);
    q[j] = p[j];
    for (std::size_t i = 0; i < n; ++i) jac[i * m + j] = (rp[i] - rm[i]) / (2.0 * h);
  }
}

} // namespace

bool covariance_from_jacobian(const std::vector<double>& jac, std::size_t rows, std::size_t cols,
                              double rss, std::vector<double>& covariance,
                              std::vector<double>& std_error) {
  const Eigen::Map<const Mat> j(jac.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const Mat jtj = j.transpose() * j;
  Eigen::SelfAdjointEigenSolver<Mat> eig(jtj);
  const Vec ev = eig.eigenvalues();
  const double cutoff = ev.cwiseAbs().maxCoeff() * std::numeric_limits<double>::epsilon() *
                        static_cast<double>(cols) * 1e3;
  bool full_rank = true;
  Vec inv = Vec::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff)
      inv[i] = 1.0 / ev[i];
    else
      full_rank = false;
  }
  const double dof = rows > cols ? static_cast<double>(rows - cols) : 1.0;
  const Mat cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * (rss / dof);
  covariance.assign(cov.data(), cov.data() + cov.size());
  std_error.clear();
  if (!full_rank) return false;
  for (std::size_t i = 0; i < cols; ++i)
    std_error.push_back(std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)))));
  return true;
}

LsqResult levenberg_marquardt(const LsqProblem& prob, std::vector<double> p, const LsqOptions& o) {
  const std::size_t n = prob.residual_count, m = p.size();
  if (n < m) throw InputError("least squares needs at least as many residuals as parameters");
  if ((!o.lower.empty() && o.lower.size() != m) || (!o.upper.empty() && o.upper.size() != m))
    throw InputError("bounds must match the parameter count");
  clamp_to_bounds(p, o);

  std::vector<double> r(n), r_try(n), jac;
  prob.residuals(p, r);
  double rss = sum_squares(r);
  if (!std::isfinite(rss)) throw NumericalError("residuals are not finite at the starting point");

  auto eval_jacobian = [&](const std::vector<double>& q) {
    if (prob.jacobian) {
      jac.assign(n * m, 0.0);
      prob.jacobian(q, jac);
    } else {
      numeric_jacobian(prob, q, jac);
    }
  };

  double lambda = 1e-3;
  LsqResult res;
  std::vector<double> trial(m);
  int it = 0;
  bool converged = false;
  eval_jacobian(p);
  for (; it < o.max_iterations && !converged; ++it) {
    const Eigen::Map<const Mat> J(jac.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    const Eigen::Map<const Vec> rv(r.data(), static_cast<Eigen::Index>(n));
    Mat jtj = J.transpose() * J;
    Vec g = J.transpose() * rv;
    // Parameters pinned at a bound with the gradient pushing outward stay fixed this step.
    for (std::size_t i = 0; i < m; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const bool low = !o.lower.empty() && p[i] <= o.lower[i] && g[k] > 0.0;
      const bool high = !o.upper.empty() && p[i] >= o.upper[i] && g[k] < 0.0;
      if (low || high) {
        jtj.row(k).setZero();
        jtj.col(k).setZero();
        jtj(k, k) = 1.0;
        g[k] = 0.0;
      }
    }
    Vec diag = jtj.diagonal().cwiseMax(1e-300);

    bool accepted = false;
    while (!accepted) {
      Mat a = jtj;
      a.diagonal() += lambda * diag;
      const Vec step = a.ldlt().solve(-g);
      for (std::size_t i = 0; i < m; ++i) trial[i] = p[i] + step[static_cast<Eigen::Index>(i)];
      clamp_to_bounds(trial, o);
      prob.residuals(trial, r_try);
      const double rss_try = sum_squares(r_try);
      if (std::isfinite(rss_try) && rss_try <= rss) {
        double step_norm = 0.0, p_norm = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          step_norm += (trial[i] - p[i]) * (trial[i] - p[i]);
          p_norm += p[i] * p[i];
        }
        const double drss = rss - rss_try;
        p = trial;
        r.swap(r_try);
        converged = std::sqrt(step_norm) <= o.step_tolerance * (std::sqrt(p_norm) + o.step_tolerance) ||
                    drss <= o.residual_tolerance * rss || rss_try == 0.0;
        rss = rss_try;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
      } else {
        lambda *= 4.0;
        if (lambda > 1e16) {
          // No descent direction left at machine precision: the current point is stationary.
          converged = true;
          break;
        }
      }
    }
    eval_jacobian(p);
  }

  res.params = p;
  res.iterations = it;
  res.converged = converged;
  res.residual_norm = std::sqrt(rss);
  covariance_from_jacobian(jac, n, m, rss, res.covariance, res.std_error);
  if (!o.lower.empty() || !o.upper.empty()) {
    res.at_bound.assign(m, false);
    for (std::size_t i = 0; i < m; ++i) {
      const double tol = 1e-9 * std::max(1.0, std::abs(p[i]));
      res.at_bound[i] = (!o.lower.empty() && p[i] <= o.lower[i] + tol) ||
                        (!o.upper.empty() && p[i] >= o.upper[i] - tol);
    }
  }
  if (!converged && o.throw_on_failure)
    throw ConvergenceError("least squares did not converge in " + std::to_string(o.max_iterations) +
                               " iterations (residual norm " + std::to_string(res.residual_norm) + ")",
                           p);
  return res;
}

} // namespace optocool
