#pragma once

// Numerical cross-checks shared by the verify command and the test suites:
// central finite differences and matrix/vector comparison metrics.

#include <cmath>
#include <functional>
#include <limits>

#include "lensless/image_grid.hpp"

namespace lensless {

/// Central-difference gradient of a scalar function.
[[nodiscard]] inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                                       double step) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// Central-difference Jacobian of a vector function; column i is d f / d x_i.
[[nodiscard]] inline Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                                                       double step) {
  Matrix jac;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const Vector up = f(probe);
    probe[i] = x[i] - step;
    const Vector down = f(probe);
    probe[i] = x[i];
    if (i == 0) jac.resize(up.size(), x.size());
    jac.col(i) = (up - down) / (2.0 * step);
  }
  return jac;
}

/// |a - b|_F / |b|_F.
[[nodiscard]] inline double relative_frobenius_error(const Matrix& a, const Matrix& b) {
  const double ref = b.norm();
  return ref > 0.0 ? (a - b).norm() / ref : (a - b).norm();
}

[[nodiscard]] inline double relative_error(const Vector& a, const Vector& b) {
  const double ref = b.norm();
  return ref > 0.0 ? (a - b).norm() / ref : (a - b).norm();
}

[[nodiscard]] inline double pearson_correlation(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double denom = da.norm() * db.norm();
  return denom > 0.0 ? da.dot(db) / denom : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace lensless
