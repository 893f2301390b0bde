#pragma once

// Surrogate encoder PSFs with increasing multiplexing: lenslet arrays on fixed
// layouts, a random multi-focal lenslet (RML) pattern, and a diffuser-like
// speckle. Every generated PSF carries unit total mass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/image_grid.hpp"
#include "lensless/rng.hpp"

namespace lensless {

/// Width of each lenslet focal spot (Gaussian sigma, pixels).
inline constexpr double kLensletSpotSigma = 0.75;
/// Minimum centre-to-centre distance between RML spots, pixels.
inline constexpr double kRmlMinSpacing = 2.0;
inline constexpr int kRmlPlacementRetries = 1000;

struct Lenslets {
  std::size_t count = 1;
};

struct Rml {
  std::size_t n_spots = 15;
  double width_min = 0.6;
  double width_max = 2.0;
};

struct Diffuser {
  double correlation_length = 3.0;
  double contrast = 2.0;
};

using PsfKind = std::variant<Lenslets, Rml, Diffuser>;

struct PsfSpec {
  PsfKind kind = Lenslets{};
  Shape size{32, 32};
  std::uint64_t seed = 0;
};

/// Short label used for file and directory names: lens1..lensN, rml, diffuser.
[[nodiscard]] inline std::string psf_label(const PsfSpec& spec) {
  if (const auto* l = std::get_if<Lenslets>(&spec.kind)) return "lens" + std::to_string(l->count);
  if (std::holds_alternative<Rml>(spec.kind)) return "rml";
  return "diffuser";
}

[[nodiscard]] inline bool is_multi_spot(const PsfSpec& spec) {
  if (const auto* l = std::get_if<Lenslets>(&spec.kind)) return l->count > 1;
  return true;
}

inline void validate(const PsfSpec& spec) {
  if (spec.size.width == 0 || spec.size.height == 0) throw InvalidSpecError("PSF size must be positive");
  if (is_multi_spot(spec) && (spec.size.width < 8 || spec.size.height < 8)) {
    throw InvalidSpecError("PSF " + psf_label(spec) + " needs a grid of at least 8x8");
  }
  std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Lenslets>) {
          if (k.count < 1) throw InvalidSpecError("lenslet count must be >= 1");
        } else if constexpr (std::is_same_v<K, Rml>) {
          if (k.n_spots < 1) throw InvalidSpecError("RML spot count must be >= 1");
          if (!(k.width_min > 0.0) || !(k.width_min <= k.width_max)) {
            throw InvalidSpecError("RML width range must satisfy 0 < min <= max");
          }
        } else {
          if (!(k.correlation_length >= 1.0)) throw InvalidSpecError("diffuser correlation length must be >= 1");
          if (!std::isfinite(k.contrast)) throw InvalidSpecError("diffuser contrast must be finite");
        }
      },
      spec.kind);
}

[[nodiscard]] inline std::uint64_t spec_hash(const PsfSpec& spec) {
  SpecHasher h;
  h.add(static_cast<std::uint64_t>(spec.kind.index())).add(std::uint64_t{spec.size.width}).add(std::uint64_t{spec.size.height});
  std::visit(
      [&h](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Lenslets>) {
          h.add(std::uint64_t{k.count});
        } else if constexpr (std::is_same_v<K, Rml>) {
          h.add(std::uint64_t{k.n_spots}).add(k.width_min).add(k.width_max);
        } else {
          h.add(k.correlation_length).add(k.contrast);
        }
      },
      spec.kind);
  return h.value();
}

namespace detail {

struct Spot {
  double x;
  double y;
  double sigma;
};

inline std::vector<double> render_spots(Shape size, const std::vector<Spot>& spots) {
  std::vector<double> out(size.pixels(), 0.0);
  for (const Spot& s : spots) {
    const double inv = 1.0 / (2.0 * s.sigma * s.sigma);
    for (std::size_t r = 0; r < size.height; ++r) {
      for (std::size_t c = 0; c < size.width; ++c) {
        const double dx = static_cast<double>(c) - s.x;
        const double dy = static_cast<double>(r) - s.y;
        out[r * size.width + c] += std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  return out;
}

inline ImageGrid normalized(Shape size, std::vector<double> values) {
  double total = 0.0;
  for (double v : values) total += v;
  if (!(total > 0.0)) throw InvalidSpecError("PSF has no mass");
  for (double& v : values) v /= total;
  return ImageGrid(size, std::move(values));
}

/// Spot centres on integer pixels. Layouts 1-5: centre, horizontal pair,
/// triangle, square, quincunx, all inside the central half of the grid.
/// Larger counts fill a square lattice over the same region.
inline std::vector<Spot> lenslet_layout(Shape size, std::size_t count) {
  const auto w = static_cast<double>(size.width);
  const auto h = static_cast<double>(size.height);
  const double cx = std::floor(w / 2), cy = std::floor(h / 2);
  const double x1 = std::floor(w / 4), x3 = std::floor(3 * w / 4);
  const double y1 = std::floor(h / 4), y3 = std::floor(3 * h / 4);
  const double s = kLensletSpotSigma;
  switch (count) {
    case 1: return {{cx, cy, s}};
    case 2: return {{x1, cy, s}, {x3, cy, s}};
    case 3: return {{cx, y1, s}, {x1, y3, s}, {x3, y3, s}};
    case 4: return {{x1, y1, s}, {x3, y1, s}, {x1, y3, s}, {x3, y3, s}};
    case 5: return {{x1, y1, s}, {x3, y1, s}, {cx, cy, s}, {x1, y3, s}, {x3, y3, s}};
    default: break;
  }
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
  std::vector<Spot> spots;
  for (std::size_t i = 0; i < count; ++i) {
    const double fx = static_cast<double>(i % side) / static_cast<double>(side - 1);
    const double fy = static_cast<double>(i / side) / static_cast<double>(side - 1);
    spots.push_back({std::round(x1 + fx * (x3 - x1)), std::round(y1 + fy * (y3 - y1)), s});
  }
  return spots;
}

inline std::vector<Spot> rml_layout(Shape size, const Rml& rml, std::mt19937_64& rng) {
  const double margin_x = std::min(2.0 * rml.width_max, (static_cast<double>(size.width) - 1) / 4);
  const double margin_y = std::min(2.0 * rml.width_max, (static_cast<double>(size.height) - 1) / 4);
  std::uniform_real_distribution<double> px(margin_x, static_cast<double>(size.width) - 1 - margin_x);
  std::uniform_real_distribution<double> py(margin_y, static_cast<double>(size.height) - 1 - margin_y);
  std::uniform_real_distribution<double> pw(rml.width_min, rml.width_max);

  std::vector<Spot> spots;
  int retries = 0;
  while (spots.size() < rml.n_spots) {
    const double x = px(rng);
    const double y = py(rng);
    const bool crowded = std::any_of(spots.begin(), spots.end(), [&](const Spot& s) {
      return std::hypot(s.x - x, s.y - y) < kRmlMinSpacing;
    });
    if (crowded) {
      if (++retries > kRmlPlacementRetries) {
        throw PlacementError("RML: could not place " + std::to_string(rml.n_spots) + " spots " +
                             std::to_string(kRmlMinSpacing) + " px apart within " +
                             std::to_string(kRmlPlacementRetries) + " retries");
      }
      continue;
    }
    spots.push_back({x, y, pw(rng)});
  }
  return spots;
}

/// Circular separable Gaussian blur.
inline std::vector<double> blur_wrapped(const std::vector<double>& in, Shape size, double sigma) {
  const auto radius = static_cast<long>(std::ceil(4 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (long t = -radius; t <= radius; ++t) {
    kernel[static_cast<std::size_t>(t + radius)] = std::exp(-static_cast<double>(t * t) / (2 * sigma * sigma));
  }
  const auto w = static_cast<long>(size.width);
  const auto h = static_cast<long>(size.height);
  auto wrap = [](long i, long n) { return ((i % n) + n) % n; };

  std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long t = -radius; t <= radius; ++t) acc += kernel[static_cast<std::size_t>(t + radius)] * in[r * w + wrap(c + t, w)];
      tmp[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long t = -radius; t <= radius; ++t) acc += kernel[static_cast<std::size_t>(t + radius)] * tmp[wrap(r + t, h) * w + c];
      out[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  return out;
}

/// Low-pass white noise, standardized, scaled to unit peak magnitude, then
/// exponentiated. The log-intensity therefore spans at most [-contrast, contrast].
inline std::vector<double> diffuser_pattern(Shape size, const Diffuser& diffuser, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(size.pixels());
  for (double& v : noise) v = gauss(rng);
  std::vector<double> z = blur_wrapped(noise, size, diffuser.correlation_length);

  const double n = static_cast<double>(z.size());
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  double peak = 0.0;
  for (double& v : z) {
    v = sd > 0.0 ? (v - mean) / sd : 0.0;
    peak = std::max(peak, std::abs(v));
  }
  for (double& v : z) v = std::exp(diffuser.contrast * (peak > 0.0 ? v / peak : 0.0));
  return z;
}

}  // namespace detail

/// Deterministic in (spec, seed); the random stream is keyed by both, so the
/// order in which PSFs are generated does not matter.
[[nodiscard]] inline ImageGrid generate_psf(const PsfSpec& spec) {
  validate(spec);
  auto rng = make_engine(spec.seed, spec_hash(spec));
  std::vector<double> values = std::visit(
      [&](const auto& k) -> std::vector<double> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Lenslets>) {
          return detail::render_spots(spec.size, detail::lenslet_layout(spec.size, k.count));
        } else if constexpr (std::is_same_v<K, Rml>) {
          return detail::render_spots(spec.size, detail::rml_layout(spec.size, k, rng));
        } else {
          return detail::diffuser_pattern(spec.size, k, rng);
        }
      },
      spec.kind);
  return detail::normalized(spec.size, std::move(values));
}

/// Inverse participation ratio over pixel count: (sum p)^2 / (N sum p^2).
/// 1/N for a single lit pixel, 1 for a flat PSF.
[[nodiscard]] inline double multiplexing_index(std::span<const double> psf) {
  double s = 0.0, s2 = 0.0;
  for (double p : psf) {
    s += p;
    s2 += p * p;
  }
  if (!(s2 > 0.0)) throw InvalidSpecError("multiplexing_index: PSF is all zero");
  return (s * s) / (static_cast<double>(psf.size()) * s2);
}

[[nodiscard]] inline double multiplexing_index(const ImageGrid& psf) { return multiplexing_index(psf.values()); }

/// The seven encoders of the multiplexing study, in increasing multiplexing order.
[[nodiscard]] inline std::vector<PsfSpec> standard_encoders(Shape size, std::uint64_t seed) {
  std::vector<PsfSpec> specs;
  for (std::size_t n = 1; n <= 5; ++n) specs.push_back({Lenslets{n}, size, seed});
  specs.push_back({Rml{}, size, seed});
  specs.push_back({Diffuser{}, size, seed});
  return specs;
}

}  // namespace lensless
