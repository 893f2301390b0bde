#pragma once

// Test objects: dense cell-like samples (soft-edged overlapping ellipses) and
// sparse bead samples (isolated single-pixel emitters).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/image_grid.hpp"
#include "lensless/rng.hpp"

namespace lensless {

/// Smallest nonzero fraction a dense object is allowed to have.
inline constexpr double kDenseMinCoverage = 0.4;
/// Ellipse intensity falls smoothly to zero between radius 1 and this.
inline constexpr double kCellRimOuter = 1.6;

struct DenseCells {
  std::size_t n_blobs = 6;
  double radius_min = 3.0;
  double radius_max = 6.0;
};

struct SparseBeads {
  std::size_t n_beads = 10;
};

using ObjectKind = std::variant<DenseCells, SparseBeads>;

struct ObjectSpec {
  ObjectKind kind = DenseCells{};
  Shape size{32, 32};
  double peak_photons = 100.0;
  std::uint64_t seed = 0;
};

[[nodiscard]] inline std::string object_label(const ObjectSpec& spec) {
  return std::holds_alternative<DenseCells>(spec.kind) ? "dense" : "sparse";
}

inline void validate(const ObjectSpec& spec) {
  if (spec.size.width < 8 || spec.size.height < 8) throw InvalidSpecError("object grid must be at least 8x8");
  if (!(spec.peak_photons > 0.0) || !std::isfinite(spec.peak_photons)) {
    throw InvalidSpecError("object peak_photons must be > 0");
  }
  if (const auto* d = std::get_if<DenseCells>(&spec.kind)) {
    if (d->n_blobs < 1) throw InvalidSpecError("dense object needs at least one blob");
    if (!(d->radius_min > 0.0) || !(d->radius_min <= d->radius_max)) {
      throw InvalidSpecError("dense object radius range must satisfy 0 < min <= max");
    }
  } else {
    const auto n = std::get<SparseBeads>(spec.kind).n_beads;
    if (n < 1) throw InvalidSpecError("sparse object needs at least one bead");
    if (n > spec.size.pixels()) {
      throw InvalidSpecError("bead count " + std::to_string(n) + " exceeds the " +
                             std::to_string(spec.size.pixels()) + " available pixels");
    }
  }
}

[[nodiscard]] inline std::uint64_t spec_hash(const ObjectSpec& spec) {
  SpecHasher h;
  h.add(static_cast<std::uint64_t>(spec.kind.index()))
      .add(std::uint64_t{spec.size.width})
      .add(std::uint64_t{spec.size.height})
      .add(spec.peak_photons);
  if (const auto* d = std::get_if<DenseCells>(&spec.kind)) {
    h.add(std::uint64_t{d->n_blobs}).add(d->radius_min).add(d->radius_max);
  } else {
    h.add(std::uint64_t{std::get<SparseBeads>(spec.kind).n_beads});
  }
  return h.value();
}

namespace detail {

inline void add_cell(std::vector<double>& img, Shape size, const DenseCells& cells, double peak,
                     std::mt19937_64& rng) {
  std::uniform_real_distribution<double> cx(0.0, static_cast<double>(size.width) - 1);
  std::uniform_real_distribution<double> cy(0.0, static_cast<double>(size.height) - 1);
  std::uniform_real_distribution<double> radius(cells.radius_min, cells.radius_max);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> brightness(0.5, 1.0);
  const double x0 = cx(rng), y0 = cy(rng);
  const double rx = radius(rng), ry = radius(rng);
  const double theta = angle(rng);
  const double amp = brightness(rng) * peak;
  const double ct = std::cos(theta), st = std::sin(theta);

  for (std::size_t r = 0; r < size.height; ++r) {
    for (std::size_t c = 0; c < size.width; ++c) {
      const double dx = static_cast<double>(c) - x0;
      const double dy = static_cast<double>(r) - y0;
      const double u = (ct * dx + st * dy) / rx;
      const double v = (-st * dx + ct * dy) / ry;
      const double rho = std::sqrt(u * u + v * v);
      double f = 0.0;
      if (rho <= 1.0) {
        f = 1.0;
      } else if (rho < kCellRimOuter) {
        f = 0.5 * (1.0 + std::cos(std::numbers::pi * (rho - 1.0) / (kCellRimOuter - 1.0)));
      }
      img[r * size.width + c] += amp * f;
    }
  }
}

inline double nonzero_fraction(const std::vector<double>& img) {
  const auto n = std::count_if(img.begin(), img.end(), [](double v) { return v > 0.0; });
  return static_cast<double>(n) / static_cast<double>(img.size());
}

inline std::vector<double> dense_cells(const ObjectSpec& spec, const DenseCells& cells, std::mt19937_64& rng) {
  std::vector<double> img(spec.size.pixels(), 0.0);
  for (std::size_t i = 0; i < cells.n_blobs; ++i) add_cell(img, spec.size, cells, spec.peak_photons, rng);
  // Top up with further cells until the sample is dense enough.
  std::size_t extra = 0;
  while (nonzero_fraction(img) < kDenseMinCoverage) {
    if (++extra > 20 * cells.n_blobs) throw InvalidSpecError("dense object: radius range too small for the grid");
    add_cell(img, spec.size, cells, spec.peak_photons, rng);
  }
  const auto top = std::max_element(img.begin(), img.end());
  const double scale = spec.peak_photons / std::min(*top, spec.peak_photons);
  for (double& v : img) v = std::min(spec.peak_photons, v * scale);
  *top = spec.peak_photons;
  return img;
}

inline std::vector<double> sparse_beads(const ObjectSpec& spec, const SparseBeads& beads, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(spec.size.pixels());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n_beads slots are a uniform draw without replacement.
  for (std::size_t i = 0; i < beads.n_beads; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<double> img(spec.size.pixels(), 0.0);
  for (std::size_t i = 0; i < beads.n_beads; ++i) img[idx[i]] = spec.peak_photons;
  return img;
}

}  // namespace detail

/// Max value equals peak_photons exactly. Dense samples cover at least 40% of
/// the grid (extra cells are added past n_blobs if needed); sparse samples
/// have exactly n_beads lit pixels, each at peak_photons.
[[nodiscard]] inline ImageGrid generate_object(const ObjectSpec& spec) {
  validate(spec);
  auto rng = make_engine(spec.seed, spec_hash(spec));
  std::vector<double> img = std::holds_alternative<DenseCells>(spec.kind)
                                ? detail::dense_cells(spec, std::get<DenseCells>(spec.kind), rng)
                                : detail::sparse_beads(spec, std::get<SparseBeads>(spec.kind), rng);
  return ImageGrid(spec.size, std::move(img));
}

/// Fraction of pixels with a nonzero value.
[[nodiscard]] inline double sparsity(const ImageGrid& obj) {
  if (obj.size() == 0) return 0.0;
  const auto v = obj.values();
  const auto n = std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; });
  return static_cast<double>(n) / static_cast<double>(obj.size());
}

}  // namespace lensless
