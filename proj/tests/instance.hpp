#pragma once

// Shared hand-specified instance whose reference values were computed
// independently with numpy/scipy: a 3x3 PSF padded to 4x4 on a 3x3 object.

#include "lensless/imaging_model.hpp"
#include "lensless/psf.hpp"

namespace fixture {

inline lensless::SystemMatrix small_system() {
  using lensless::ImageGrid;
  const ImageGrid psf = ImageGrid::from_rows({{0.1, 0.2, 0.05}, {0.3, 1.0, 0.25}, {0.05, 0.15, 0.4}});
  return lensless::build_system_matrix(psf, {3, 3}, {4, 4});
}

inline lensless::Vector small_object() {
  return (lensless::Vector(9) << 10, 20, 5, 0, 40, 15, 30, 8, 12).finished();
}

inline lensless::Vector small_counts() {
  return (lensless::Vector(36) << 2, 6, 8, 3, 2, 3, 4, 24, 39, 17, 4, 3, 4, 25, 64, 41, 9, 3, 10, 39, 31, 36, 11, 3, 2,
          7, 18, 6, 7, 3, 1, 2, 3, 1, 2, 3)
      .finished();
}

// The standard encoders with an RML spot count that fits 2 px spacing on tiny grids.
inline std::vector<lensless::PsfSpec> small_encoders(lensless::Shape size, std::uint64_t seed) {
  auto specs = lensless::standard_encoders(size, seed);
  for (auto& s : specs) {
    if (auto* r = std::get_if<lensless::Rml>(&s.kind)) r->n_spots = 3;
  }
  return specs;
}

}  // namespace fixture
