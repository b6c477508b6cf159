#pragma once

// Small dense optimizers used by the estimators: BFGS with a monotone Armijo
// line search, a finite-difference Hessian, and a box-projected
// Levenberg-Marquardt for least squares.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace prospectus::optimize {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Options {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on the infinity norm
  double step_tolerance = 1e-12;
  double value_tolerance = 1e-14;    // relative change in the objective
};

struct Result {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> trace;  // objective after each accepted step
};

// f(x, grad) returns the objective and fills grad when it is non-null.
using Objective = std::function<double(const Vector&, Vector*)>;

inline Result bfgs_minimize(const Objective& f, Vector x, const Options& opt = {}) {
  const Eigen::Index n = x.size();
  Result res;
  Vector g(n);
  double fx = f(x, &g);
  res.trace.push_back(fx);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.message = "objective is not finite at the starting point";
    return res;
  }
  Matrix h = Matrix::Identity(n, n);
  bool scaled = false;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }
    Vector d = -h * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      h.setIdentity();
      d = -g;
      slope = -g.squaredNorm();
    }

    // Backtracking with the sufficient-decrease condition; only decreases are
    // ever accepted, so the trace is monotone.
    double t = 1.0;
    Vector x_new(n);
    Vector g_new(n);
    double f_new = 0.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = x + t * d;
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * t * slope && f_new <= fx) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      res.converged = g.lpNorm<Eigen::Infinity>() <= 1e3 * opt.gradient_tolerance;
      res.message = "line search failed to find a decrease";
      break;
    }

    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double change = fx - f_new;
    x = x_new;
    g = g_new;
    const double f_old = fx;
    fx = f_new;
    res.trace.push_back(fx);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(n, n);
      h = (eye - rho * s * y.transpose()) * h * (eye - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    if (s.lpNorm<Eigen::Infinity>() <= opt.step_tolerance * (1.0 + x.lpNorm<Eigen::Infinity>()) ||
        change <= opt.value_tolerance * (1.0 + std::abs(f_old))) {
      res.converged = g.lpNorm<Eigen::Infinity>() <= 1e3 * opt.gradient_tolerance;
      res.message = res.converged ? "objective stopped changing" : "stalled away from a stationary point";
      res.iterations = it + 1;
      break;
    }
    res.iterations = it + 1;
  }
  if (res.message.empty()) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance) {
      res.converged = true;
      res.message = "gradient tolerance reached";
    } else {
      res.message = "iteration limit reached";
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

/// Hessian by central differences of an analytic gradient, symmetrized.
inline Matrix hessian_from_gradient(const Objective& f, const Vector& x) {
  const Eigen::Index n = x.size();
  Matrix hess(n, n);
  Vector gp(n);
  Vector gm(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    Vector xp = x;
    Vector xm = x;
    xp[j] += h;
    xm[j] -= h;
    f(xp, &gp);
    f(xm, &gm);
    hess.col(j) = (gp - gm) / (xp[j] - xm[j]);
  }
  return 0.5 * (hess + hess.transpose());
}

/// Inverse of a symmetric positive-definite matrix, or empty when it is not.
inline std::optional<Matrix> spd_inverse(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const auto& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-10 * std::max(1.0, ev.maxCoeff()))) return std::nullopt;
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------

using Residuals = std::function<Vector(const Vector&)>;

struct LeastSquaresResult {
  Vector x;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> trace;  // cost after each accepted step
};

/// Levenberg-Marquardt with forward-difference Jacobian, restricted to the box
/// [lower, upper]. Entries with free[j] == false stay at their start value.
inline LeastSquaresResult projected_levenberg_marquardt(const Residuals& r, Vector x,
                                                       const Vector& lower, const Vector& upper,
                                                       const std::vector<bool>& free,
                                                       int max_iterations = 300,
                                                       double tolerance = 1e-15) {
  const Eigen::Index n = x.size();
  x = x.cwiseMax(lower).cwiseMin(upper);
  LeastSquaresResult res;
  Vector rx = r(x);
  double cost = rx.squaredNorm();
  res.trace.push_back(cost);
  double mu = 1e-3;

  auto jacobian = [&](const Vector& at, const Vector& r_at) {
    Matrix jac = Matrix::Zero(r_at.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!free[static_cast<std::size_t>(j)]) continue;
      double h = 1e-7 * std::max(1.0, std::abs(at[j]));
      if (at[j] + h > upper[j]) h = -h;  // step inward at the upper face
      Vector xp = at;
      xp[j] += h;
      jac.col(j) = (r(xp) - r_at) / (xp[j] - at[j]);
    }
    return jac;
  };

  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    if (cost <= 1e-30) {
      res.converged = true;
      res.message = "residual is zero";
      break;
    }
    const Matrix jac = jacobian(x, rx);
    const Vector grad = jac.transpose() * rx;
    const Matrix jtj = jac.transpose() * jac;

    // Projected gradient: components pushing out of an active face are zero.
    Vector pg = grad;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!free[static_cast<std::size_t>(j)] || (x[j] <= lower[j] && grad[j] > 0.0) ||
          (x[j] >= upper[j] && grad[j] < 0.0)) {
        pg[j] = 0.0;
      }
    }
    if (pg.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + cost)) {
      res.converged = true;
      res.message = "projected gradient vanished";
      break;
    }

    bool improved = false;
    for (int k = 0; k < 40; ++k) {
      Matrix a = jtj;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!free[static_cast<std::size_t>(j)]) {
          a.row(j).setZero();
          a.col(j).setZero();
          a(j, j) = 1.0;
        } else {
          a(j, j) += mu * std::max(jtj(j, j), 1e-12);
        }
      }
      Vector rhs = -grad;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!free[static_cast<std::size_t>(j)]) rhs[j] = 0.0;
      }
      const Vector step = a.ldlt().solve(rhs);
      const Vector x_new = (x + step).cwiseMax(lower).cwiseMin(upper);
      const Vector r_new = r(x_new);
      const double c_new = r_new.squaredNorm();
      if (std::isfinite(c_new) && c_new < cost) {
        const double rel = (cost - c_new) / cost;
        const double moved = (x_new - x).lpNorm<Eigen::Infinity>();
        x = x_new;
        rx = r_new;
        cost = c_new;
        res.trace.push_back(cost);
        mu = std::max(mu / 3.0, 1e-12);
        improved = true;
        if (rel <= tolerance || moved <= 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
          res.converged = true;
          res.message = "cost stopped decreasing";
          it = max_iterations;  // leave the outer loop
        }
        break;
      }
      mu *= 4.0;
      if (mu > 1e16) break;
    }
    if (!improved) {
      res.converged = true;
      res.message = "no further decrease within the damping range";
      break;
    }
  }
  if (res.message.empty()) res.message = "iteration limit reached";
  res.x = x;
  res.cost = cost;
  return res;
}

}  // namespace prospectus::optimize
