#pragma once

#include "lensless/image_grid.hpp"

namespace lensless {

/// Mirrors the lower triangle into the upper one.
inline void copy_lower_to_upper(Matrix& m) {
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) m(i, j) = m(j, i);
  }
}

/// alpha * A^T diag(root)^2 A, exactly symmetric. `root` holds the square
/// roots of the row weights; an empty `root` means unit weights.
[[nodiscard]] inline Matrix weighted_gram(const Matrix& a, const Vector& root, double alpha) {
  Matrix out = Matrix::Zero(a.cols(), a.cols());
  if (root.size() == 0) {
    out.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose(), alpha);
  } else {
    const Matrix weighted = root.asDiagonal() * a;
    out.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose(), alpha);
  }
  copy_lower_to_upper(out);
  return out;
}

}  // namespace lensless
