#pragma once

// Experiment configuration: a flat "key = value" text file whose keys mirror
// the command-line flags. Command-line values override file values.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "lensless/errors.hpp"
#include "lensless/fisher.hpp"
#include "lensless/imaging_model.hpp"
#include "lensless/io.hpp"
#include "lensless/noise.hpp"
#include "lensless/objects.hpp"
#include "lensless/psf.hpp"
#include "lensless/rng.hpp"

namespace lensless {

using ConfigMap = std::map<std::string, std::string>;

/// Raised for malformed or out-of-domain configuration.
class ConfigError : public InvalidSpecError {
 public:
  using InvalidSpecError::InvalidSpecError;
};

struct ExperimentConfig {
  NoiseModel noise = GaussianNoise{1.0};
  ObjectSpec object{};
  std::optional<std::string> object_file;
  PsfSpec psf{};
  std::optional<std::string> psf_file;
  std::optional<Shape> psf_pad;
  EpsilonPolicy epsilon{};
  std::size_t n_samples = 200000;
  std::size_t n_trials = 10000;
  std::uint64_t seed = 42;
  std::string out = "out";
  /// Echo of the resolved key/value pairs, written into manifests.
  ConfigMap echo;
};

[[nodiscard]] inline const std::set<std::string, std::less<>>& config_keys() {
  static const std::set<std::string, std::less<>> keys{
      "noise",          "sigma2",           "background",        "epsilon-rel",       "epsilon-abs",
      "seed",           "out",              "n-samples",         "n-trials",          "object",
      "object-size",    "object-peak",      "object-n-blobs",    "object-radius-min", "object-radius-max",
      "object-n-beads", "object-file",      "psf",               "psf-n",             "psf-size",
      "psf-pad",        "psf-n-spots",      "psf-width-min",     "psf-width-max",     "psf-correlation-length",
      "psf-contrast",   "psf-file"};
  return keys;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline double to_number(const ConfigMap& m, const std::string& key, double fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  try {
    return io::parse_double(it->second);
  } catch (const IoError&) {
    throw ConfigError("config key '" + key + "': '" + it->second + "' is not a number");
  }
}

inline std::uint64_t to_count(const ConfigMap& m, const std::string& key, std::uint64_t fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  const std::string& s = it->second;
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "': '" + s + "' is not a non-negative integer");
  }
  return v;
}

inline Shape to_square(const ConfigMap& m, const std::string& key, Shape fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  const auto n = static_cast<std::size_t>(to_count(m, key, 0));
  return {n, n};
}

}  // namespace detail

/// Parses "key = value" lines; '#' starts a comment.
[[nodiscard]] inline ConfigMap parse_config_text(const std::string& text, const std::string& origin = "config") {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    if (!config_keys().contains(key)) throw ConfigError(origin + ":" + std::to_string(n) + ": unknown key '" + key + "'");
    out[key] = detail::trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

/// Relative psf-file / object-file paths are taken relative to the config file.
[[nodiscard]] inline ConfigMap read_config_file(const std::filesystem::path& path) {
  ConfigMap m = parse_config_text(io::read_text(path), path.string());
  for (const char* key : {"psf-file", "object-file"}) {
    if (auto it = m.find(key); it != m.end() && std::filesystem::path(it->second).is_relative()) {
      it->second = (path.parent_path() / it->second).lexically_normal().string();
    }
  }
  return m;
}

/// Builds a validated config. Seeds for the PSF and object come from named
/// substreams of the master seed.
[[nodiscard]] inline ExperimentConfig make_config(const ConfigMap& m) {
  for (const auto& [key, value] : m) {
    if (!config_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  using namespace detail;
  ExperimentConfig c;
  c.echo = m;
  c.seed = to_count(m, "seed", c.seed);
  if (auto it = m.find("out"); it != m.end()) c.out = it->second;
  c.n_samples = to_count(m, "n-samples", c.n_samples);
  c.n_trials = to_count(m, "n-trials", c.n_trials);

  const std::string noise = m.contains("noise") ? m.at("noise") : "gaussian";
  if (noise == "gaussian") {
    c.noise = GaussianNoise{to_number(m, "sigma2", 1.0)};
  } else if (noise == "poisson") {
    c.noise = PoissonNoise{to_number(m, "background", PoissonNoise{}.background)};
  } else {
    throw ConfigError("noise must be 'gaussian' or 'poisson', got '" + noise + "'");
  }

  c.epsilon.relative = to_number(m, "epsilon-rel", c.epsilon.relative);
  if (m.contains("epsilon-abs")) c.epsilon.absolute = to_number(m, "epsilon-abs", 0.0);

  c.object.size = to_square(m, "object-size", c.object.size);
  c.object.peak_photons = to_number(m, "object-peak", c.object.peak_photons);
  c.object.seed = substream_seed(c.seed, "object");
  const std::string object = m.contains("object") ? m.at("object") : "dense";
  if (object == "dense") {
    DenseCells d;
    d.n_blobs = to_count(m, "object-n-blobs", d.n_blobs);
    d.radius_min = to_number(m, "object-radius-min", d.radius_min);
    d.radius_max = to_number(m, "object-radius-max", d.radius_max);
    c.object.kind = d;
  } else if (object == "sparse") {
    c.object.kind = SparseBeads{to_count(m, "object-n-beads", SparseBeads{}.n_beads)};
  } else {
    throw ConfigError("object must be 'dense' or 'sparse', got '" + object + "'");
  }
  if (m.contains("object-file")) c.object_file = m.at("object-file");

  c.psf.size = to_square(m, "psf-size", c.psf.size);
  c.psf.seed = substream_seed(c.seed, "psf");
  const std::string psf = m.contains("psf") ? m.at("psf") : "lenslets";
  if (psf == "lenslets") {
    c.psf.kind = Lenslets{to_count(m, "psf-n", 1)};
  } else if (psf == "rml") {
    Rml r;
    r.n_spots = to_count(m, "psf-n-spots", r.n_spots);
    r.width_min = to_number(m, "psf-width-min", r.width_min);
    r.width_max = to_number(m, "psf-width-max", r.width_max);
    c.psf.kind = r;
  } else if (psf == "diffuser") {
    Diffuser d;
    d.correlation_length = to_number(m, "psf-correlation-length", d.correlation_length);
    d.contrast = to_number(m, "psf-contrast", d.contrast);
    c.psf.kind = d;
  } else {
    throw ConfigError("psf must be 'lenslets', 'rml' or 'diffuser', got '" + psf + "'");
  }
  if (m.contains("psf-file")) c.psf_file = m.at("psf-file");
  if (m.contains("psf-pad")) c.psf_pad = to_square(m, "psf-pad", {});

  try {
    validate(c.noise);
    if (!c.object_file) validate(c.object);
    if (!c.psf_file) validate(c.psf);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidSpecError& e) {
    throw ConfigError(e.what());
  }
  if (!(c.epsilon.relative >= 0.0) || (c.epsilon.absolute && !(*c.epsilon.absolute >= 0.0))) {
    throw ConfigError("epsilon must be >= 0");
  }
  return c;
}

}  // namespace lensless
