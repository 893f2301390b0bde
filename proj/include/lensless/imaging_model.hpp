#pragma once

// Discrete forward model: full 2-D convolution of an object with a PSF,
// realized as a dense k x d system matrix. The PSF is zero-padded (centered,
// odd leftover row/column at the bottom/right) before convolution so the
// measurement plane can be sized independently of the PSF footprint; there is
// no sensor crop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/image_grid.hpp"
#include "lensless/parallel.hpp"

namespace lensless {

class SystemMatrix {
 public:
  SystemMatrix(Matrix entries, Shape object_shape, Shape padded_psf_shape, std::string source)
      : entries_(std::move(entries)),
        object_shape_(object_shape),
        padded_psf_shape_(padded_psf_shape),
        source_(std::move(source)) {}

  [[nodiscard]] const Matrix& entries() const noexcept { return entries_; }
  [[nodiscard]] Eigen::Index rows() const noexcept { return entries_.rows(); }
  [[nodiscard]] Eigen::Index cols() const noexcept { return entries_.cols(); }

  [[nodiscard]] Shape object_shape() const noexcept { return object_shape_; }
  [[nodiscard]] Shape padded_psf_shape() const noexcept { return padded_psf_shape_; }
  [[nodiscard]] Shape measurement_shape() const noexcept {
    return {object_shape_.width + padded_psf_shape_.width - 1,
            object_shape_.height + padded_psf_shape_.height - 1};
  }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

  /// Direct write access. Only the verification hook uses this, to inject a
  /// corrupted entry and prove the invariant checks catch it.
  [[nodiscard]] Matrix& mutable_entries_for_testing() noexcept { return entries_; }

 private:
  Matrix entries_;
  Shape object_shape_;
  Shape padded_psf_shape_;
  std::string source_;
};

/// Padded PSF size used when none is given: two extra pixels per axis, which
/// turns a 32x32 PSF and 32x32 object into a 65x65 measurement.
[[nodiscard]] constexpr Shape default_psf_pad(Shape psf) noexcept {
  return {psf.width + 2, psf.height + 2};
}

/// Zero-pads the PSF to `pad`, centered; the extra cell of an odd leftover
/// goes to the bottom/right.
[[nodiscard]] inline ImageGrid pad_psf(const ImageGrid& psf, Shape pad) {
  if (pad.width < psf.width() || pad.height < psf.height()) {
    throw DimensionError("pad_psf: padded size " + std::to_string(pad.width) + "x" + std::to_string(pad.height) +
                         " is smaller than the PSF " + std::to_string(psf.width()) + "x" +
                         std::to_string(psf.height()));
  }
  const std::size_t top = (pad.height - psf.height()) / 2;
  const std::size_t left = (pad.width - psf.width()) / 2;
  std::vector<double> out(pad.pixels(), 0.0);
  for (std::size_t r = 0; r < psf.height(); ++r) {
    for (std::size_t c = 0; c < psf.width(); ++c) out[(top + r) * pad.width + left + c] = psf(r, c);
  }
  return ImageGrid(pad, std::move(out));
}

/// Builds H so that H * vectorize(v) is the row-major full convolution of v
/// with the padded PSF. Column j holds the padded PSF translated to object
/// pixel j. Columns are filled independently, so the result does not depend
/// on the thread count.
[[nodiscard]] inline SystemMatrix build_system_matrix(const ImageGrid& psf, Shape object_shape, Shape psf_pad,
                                                      std::string source = "psf") {
  if (object_shape.width == 0 || object_shape.height == 0) {
    throw DimensionError("build_system_matrix: object shape must be positive");
  }
  const ImageGrid padded = pad_psf(psf, psf_pad);
  const Shape out{object_shape.width + psf_pad.width - 1, object_shape.height + psf_pad.height - 1};
  const auto k = static_cast<Eigen::Index>(out.pixels());
  const auto d = static_cast<Eigen::Index>(object_shape.pixels());

  Matrix h = Matrix::Zero(k, d);
  parallel_for(static_cast<std::size_t>(d), [&](std::size_t j) {
    const std::size_t obj_r = j / object_shape.width;
    const std::size_t obj_c = j % object_shape.width;
    auto column = h.col(static_cast<Eigen::Index>(j));
    for (std::size_t r = 0; r < psf_pad.height; ++r) {
      for (std::size_t c = 0; c < psf_pad.width; ++c) {
        column[static_cast<Eigen::Index>((obj_r + r) * out.width + obj_c + c)] = padded(r, c);
      }
    }
  });
  return SystemMatrix(std::move(h), object_shape, psf_pad, std::move(source));
}

/// Noiseless measurement b = H v.
[[nodiscard]] inline Vector forward(const SystemMatrix& h, const Vector& v) {
  if (v.size() != h.cols()) {
    throw DimensionError("forward: object length " + std::to_string(v.size()) + " but H has " +
                         std::to_string(h.cols()) + " columns");
  }
  return h.entries() * v;
}

[[nodiscard]] inline Vector forward(const SystemMatrix& h, const VectorizedObject& v) {
  return forward(h, v.values);
}

/// H^T y.
[[nodiscard]] inline Vector adjoint(const SystemMatrix& h, const Vector& y) {
  if (y.size() != h.rows()) {
    throw DimensionError("adjoint: measurement length " + std::to_string(y.size()) + " but H has " +
                         std::to_string(h.rows()) + " rows");
  }
  return h.entries().transpose() * y;
}

/// Structural checks on H: non-negative entries and equal column sums.
/// Returns a description of each violation; empty means H is sound.
[[nodiscard]] inline std::vector<std::string> check_invariants(const SystemMatrix& h, double tolerance = 1e-12) {
  std::vector<std::string> problems;
  const Matrix& m = h.entries();
  if (static_cast<std::size_t>(m.rows()) != h.measurement_shape().pixels() ||
      static_cast<std::size_t>(m.cols()) != h.object_shape().pixels()) {
    problems.emplace_back("matrix dimensions do not match object/measurement shapes");
    return problems;
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!(m(i, j) >= 0.0)) {
        problems.push_back("negative entry at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
        break;
      }
    }
  }
  if (m.cols() > 0) {
    const Vector sums = m.colwise().sum().transpose();
    const double reference = sums[0];
    for (Eigen::Index j = 1; j < sums.size(); ++j) {
      if (std::abs(sums[j] - reference) > tolerance * std::max(1.0, std::abs(reference))) {
        problems.push_back("column " + std::to_string(j) + " sum differs from column 0");
        break;
      }
    }
  }
  return problems;
}

}  // namespace lensless
