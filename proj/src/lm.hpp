#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace thermobeat::detail {

// Levenberg-Marquardt on weighted residuals with a central-difference
// Jacobian. Residuals must already be divided by their standard errors.
struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // (J^T J)^-1 over all parameters, zero rows for fixed ones
  double chi2 = 0.0;
  std::size_t n_residuals = 0;
  int iterations = 0;
  bool converged = false;
};

using ResidualFn = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals)>;

inline LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p, const std::vector<bool>& fixed,
                                    const Eigen::VectorXd& step_scale, int max_iterations, double tolerance) {
  const auto np = static_cast<int>(p.size());
  std::vector<int> free;
  for (int i = 0; i < np; ++i) {
    if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
  }
  const auto nf = static_cast<int>(free.size());

  Eigen::VectorXd r;
  fn(p, r);
  double chi2 = r.squaredNorm();
  LmResult out;
  out.n_residuals = static_cast<std::size_t>(r.size());
  double lambda = 1e-3;
  Eigen::MatrixXd jac(r.size(), nf);
  Eigen::VectorXd rp, rm;

  auto jacobian = [&](const Eigen::VectorXd& at) {
    for (int j = 0; j < nf; ++j) {
      int i = free[static_cast<std::size_t>(j)];
      double h = step_scale[i];
      Eigen::VectorXd a = at, b = at;
      a[i] += h;
      b[i] -= h;
      fn(a, rp);
      fn(b, rm);
      jac.col(j) = (rp - rm) / (2.0 * h);
    }
  };

  int it = 0;
  bool converged = nf == 0;
  for (; it < max_iterations && !converged; ++it) {
    jacobian(p);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd g = jac.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (int j = 0; j < nf; ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-300);
      Eigen::VectorXd delta = a.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Eigen::VectorXd trial = p;
      for (int j = 0; j < nf; ++j) trial[free[static_cast<std::size_t>(j)]] += delta[j];
      Eigen::VectorXd rt;
      fn(trial, rt);
      double c2 = rt.allFinite() ? rt.squaredNorm() : INFINITY;
      if (c2 <= chi2) {
        double rel = (chi2 - c2) / std::max(chi2, 1e-300);
        double step = 0.0;
        for (int j = 0; j < nf; ++j) {
          int i = free[static_cast<std::size_t>(j)];
          step = std::max(step, std::abs(delta[j]) / std::max(step_scale[i] * 1e6, 1e-300));
        }
        p = trial;
        r = rt;
        chi2 = c2;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel < tolerance || step < 1e-9) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No downhill step at any damping: already at the minimum to working precision.
      converged = true;
      break;
    }
  }

  out.params = p;
  out.chi2 = chi2;
  out.iterations = it;
  out.converged = converged;
  out.covariance = Eigen::MatrixXd::Zero(np, np);
  if (nf > 0) {
    jacobian(p);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    // equilibrate before the pseudo-inverse so that parameter units do not matter
    Eigen::VectorXd d = jtj.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd scaled = d.asDiagonal() * jtj * d.asDiagonal();
    Eigen::MatrixXd inv = d.asDiagonal() * scaled.completeOrthogonalDecomposition().pseudoInverse() * d.asDiagonal();
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) out.covariance(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]) = inv(a, b);
    }
  }
  return out;
}

}  // namespace thermobeat::detail
