#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lensless/errors.hpp"

namespace lensless {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Width/height pair in pixels.
struct Shape {
  std::size_t width = 0;
  std::size_t height = 0;

  [[nodiscard]] constexpr std::size_t pixels() const noexcept { return width * height; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

namespace detail {
inline void require_non_negative(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw InvalidSpecError(std::string(what) + ": value at index " + std::to_string(i) +
                             " is negative or not finite");
    }
  }
}
}  // namespace detail

/// Non-negative 2-D intensity array (photons per pixel), stored row-major.
class ImageGrid {
 public:
  ImageGrid() = default;

  ImageGrid(Shape shape, double fill = 0.0) : shape_(shape), values_(shape.pixels(), fill) {
    detail::require_non_negative(values_, "ImageGrid");
  }

  ImageGrid(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
    if (values_.size() != shape_.pixels()) {
      throw DimensionError("ImageGrid: " + std::to_string(values_.size()) + " values for a " +
                           std::to_string(shape_.width) + "x" + std::to_string(shape_.height) + " grid");
    }
    detail::require_non_negative(values_, "ImageGrid");
  }

  /// Rows listed top to bottom.
  static ImageGrid from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t height = rows.size();
    const std::size_t width = height ? rows.begin()->size() : 0;
    std::vector<double> values;
    values.reserve(width * height);
    for (const auto& row : rows) {
      if (row.size() != width) throw DimensionError("ImageGrid::from_rows: ragged rows");
      values.insert(values.end(), row.begin(), row.end());
    }
    return ImageGrid({width, height}, std::move(values));
  }

  [[nodiscard]] Shape shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t width() const noexcept { return shape_.width; }
  [[nodiscard]] std::size_t height() const noexcept { return shape_.height; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

  [[nodiscard]] double operator()(std::size_t row, std::size_t col) const {
    return values_[row * shape_.width + col];
  }

  [[nodiscard]] double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }
  [[nodiscard]] double max() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
  }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  Shape shape_{};
  std::vector<double> values_;
};

/// An object flattened row-major into a length-d vector, with its shape kept
/// for the trip back.
struct VectorizedObject {
  Vector values;
  Shape shape;

  [[nodiscard]] Eigen::Index size() const noexcept { return values.size(); }
};

[[nodiscard]] inline VectorizedObject vectorize(const ImageGrid& grid) {
  const auto v = grid.values();
  Vector out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return {std::move(out), grid.shape()};
}

[[nodiscard]] inline ImageGrid devectorize(const VectorizedObject& obj) {
  return ImageGrid(obj.shape, std::vector<double>(obj.values.data(), obj.values.data() + obj.values.size()));
}

/// Reshape any length-(w*h) vector onto a grid. Values must be non-negative.
[[nodiscard]] inline ImageGrid to_grid(const Vector& values, Shape shape) {
  if (static_cast<std::size_t>(values.size()) != shape.pixels()) {
    throw DimensionError("to_grid: vector length does not match shape");
  }
  return ImageGrid(shape, std::vector<double>(values.data(), values.data() + values.size()));
}

}  // namespace lensless
