#pragma once

// End-to-end CRB case: PSF + object -> H -> Fisher -> CRB, plus the files
// and manifest written for it.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "lensless/checks.hpp"
#include "lensless/config.hpp"
#include "lensless/errors.hpp"
#include "lensless/fisher.hpp"
#include "lensless/imaging_model.hpp"
#include "lensless/io.hpp"
#include "lensless/noise.hpp"
#include "lensless/objects.hpp"
#include "lensless/psf.hpp"

#ifndef LENSLESS_CRB_VERSION
#define LENSLESS_CRB_VERSION "0.0.0"
#endif

namespace lensless {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Process exit codes of the command-line tool.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int usage = 2;
inline constexpr int singular_rate = 3;
inline constexpr int factorization = 4;
inline constexpr int io = 5;
inline constexpr int verification = 6;
inline constexpr int trials = 7;
}  // namespace exit_code

[[nodiscard]] inline const char* version() noexcept { return LENSLESS_CRB_VERSION; }

struct Labeled {
  std::string label;
  ImageGrid grid;
};

/// The configured PSF: read from psf-file when given, generated otherwise.
[[nodiscard]] inline Labeled resolve_psf(const ExperimentConfig& c) {
  if (c.psf_file) {
    ImageGrid g = io::read_csv(*c.psf_file);
    if (!(g.sum() > 0.0)) throw InvalidSpecError("PSF file " + *c.psf_file + " has zero total intensity");
    return {"file", std::move(g)};
  }
  return {psf_label(c.psf), generate_psf(c.psf)};
}

[[nodiscard]] inline Labeled resolve_object(const ExperimentConfig& c) {
  if (c.object_file) return {"file", io::read_csv(*c.object_file)};
  return {object_label(c.object), generate_object(c.object)};
}

struct CaseResult {
  std::string name;
  NoiseModel noise;
  Labeled psf;
  std::optional<Labeled> object;
  Shape padded_psf;
  Shape measurement;
  CrbMap crb;
  CrbSummary summary;
  double multiplexing = 0.0;
  double object_sparsity = std::numeric_limits<double>::quiet_NaN();
  /// Pearson correlation between the CRB map and the object.
  double object_correlation = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, double>> seconds;  // per stage
};

/// Runs one case. The object may be omitted for Gaussian noise, whose Fisher
/// matrix does not depend on it; object_shape then sets the grid size.
[[nodiscard]] inline CaseResult run_case(std::string name, const NoiseModel& noise, Labeled psf,
                                         std::optional<Labeled> object, Shape object_shape,
                                         std::optional<Shape> pad, const EpsilonPolicy& epsilon) {
  validate(noise);
  if (object) object_shape = object->grid.shape();
  if (!object && std::holds_alternative<PoissonNoise>(noise)) {
    throw InvalidSpecError("Poisson CRB needs an object");
  }
  using Clock = std::chrono::steady_clock;
  auto elapsed = [](Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  CaseResult r;
  r.name = std::move(name);
  r.noise = noise;
  r.padded_psf = pad.value_or(default_psf_pad(psf.grid.shape()));
  r.multiplexing = multiplexing_index(psf.grid);

  auto t0 = Clock::now();
  const SystemMatrix h = build_system_matrix(psf.grid, object_shape, r.padded_psf, psf.label);
  r.seconds.emplace_back("build_h", elapsed(t0));
  r.measurement = h.measurement_shape();

  t0 = Clock::now();
  const Vector v = object ? vectorize(object->grid).values : Vector::Zero(h.cols());
  const FisherMatrix j = fisher_closed_form(noise, h, v);
  r.seconds.emplace_back("fisher", elapsed(t0));

  t0 = Clock::now();
  r.crb = crb_from_fisher(j, epsilon);
  r.seconds.emplace_back("invert", elapsed(t0));

  r.summary = crb_summary(r.crb);
  if (object) {
    r.object_sparsity = sparsity(object->grid);
    r.object_correlation = pearson_correlation(r.crb.values, v);
  }
  r.psf = std::move(psf);
  r.object = std::move(object);
  return r;
}

/// The case described by a config (the `crb` command).
[[nodiscard]] inline CaseResult run_crb(const ExperimentConfig& c) {
  Labeled psf = resolve_psf(c);
  std::optional<Labeled> object;
  if (std::holds_alternative<PoissonNoise>(c.noise) || c.object_file) object = resolve_object(c);
  std::string name = psf.label;
  return run_case(std::move(name), c.noise, std::move(psf), std::move(object), c.object.size, c.psf_pad, c.epsilon);
}

// ---------------------------------------------------------------- outputs

struct OutputFile {
  std::string path;  // relative to the output root, '/'-separated
  std::string sha256;
  std::size_t bytes = 0;
};

/// Collects files written below one root directory.
class OutputWriter {
 public:
  explicit OutputWriter(fs::path root) : root_(std::move(root)) {}

  void write(const std::string& rel, const std::string& content) {
    io::write_text(root_ / rel, content);
    files_.push_back({rel, io::sha256_hex(content), content.size()});
  }

  /// Writes a 16-bit PGM and records its scale factor.
  void write_pgm(const std::string& rel, const ImageGrid& grid) {
    io::Pgm pgm = io::encode_pgm16(grid.values(), grid.shape());
    write(rel, pgm.bytes);
    pgm_scales_[rel] = pgm.scale;
  }

  void merge(const OutputWriter& other) {
    files_.insert(files_.end(), other.files_.begin(), other.files_.end());
    pgm_scales_.insert(other.pgm_scales_.begin(), other.pgm_scales_.end());
  }

  [[nodiscard]] const fs::path& root() const noexcept { return root_; }
  [[nodiscard]] const std::vector<OutputFile>& files() const noexcept { return files_; }
  [[nodiscard]] const std::map<std::string, double>& pgm_scales() const noexcept { return pgm_scales_; }

 private:
  fs::path root_;
  std::vector<OutputFile> files_;
  std::map<std::string, double> pgm_scales_;
};

/// crb.csv, crb.pgm, cross_section.csv, psf.csv and (when present) object.csv
/// under `prefix` ("" or "subdir/").
inline void write_case_files(OutputWriter& out, const std::string& prefix, const CaseResult& r) {
  const ImageGrid crb = r.crb.grid();
  out.write(prefix + "crb.csv", io::grid_csv(crb.values(), crb.shape()));
  out.write_pgm(prefix + "crb.pgm", crb);
  out.write(prefix + "cross_section.csv", io::cross_section_csv(r.summary.cross_section, r.crb.object_shape.height / 2));
  out.write(prefix + "psf.csv", io::grid_csv(r.psf.grid.values(), r.psf.grid.shape()));
  if (r.object) out.write(prefix + "object.csv", io::grid_csv(r.object->grid.values(), r.object->grid.shape()));
}

namespace detail {

inline Json shape_json(Shape s) { return Json::array({s.width, s.height}); }

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace detail

[[nodiscard]] inline Json noise_json(const NoiseModel& m) {
  Json j;
  j["model"] = noise_label(m);
  if (const auto* g = std::get_if<GaussianNoise>(&m)) {
    j["sigma2"] = g->sigma2;
  } else {
    j["background"] = std::get<PoissonNoise>(m).background;
  }
  return j;
}

[[nodiscard]] inline Json case_json(const CaseResult& r, bool record_timings) {
  Json j;
  j["name"] = r.name;
  j["noise"] = noise_json(r.noise);
  j["psf"] = r.psf.label;
  j["multiplexing_index"] = r.multiplexing;
  j["object"] = r.object ? Json(r.object->label) : Json(nullptr);
  j["object_sparsity"] = detail::finite_or_null(r.object_sparsity);
  j["shapes"] = {{"object", detail::shape_json(r.crb.object_shape)},
                 {"psf", detail::shape_json(r.psf.grid.shape())},
                 {"padded_psf", detail::shape_json(r.padded_psf)},
                 {"measurement", detail::shape_json(r.measurement)}};
  j["pad_reconciliation"] = r.padded_psf.width != r.psf.grid.shape().width ||
                            r.padded_psf.height != r.psf.grid.shape().height;
  j["epsilon_used"] = r.crb.epsilon_used;
  j["crb"] = {{"mean", r.summary.mean},
              {"median", r.summary.median},
              {"max", r.summary.max},
              {"object_correlation", detail::finite_or_null(r.object_correlation)}};
  if (record_timings) {
    Json t = Json::object();
    for (const auto& [stage, s] : r.seconds) t[stage] = s;
    j["wall_seconds"] = t;
  }
  return j;
}

/// Config echo without the output directory, so manifests of identical runs
/// written to different places are identical.
[[nodiscard]] inline Json config_echo(const ExperimentConfig& c) {
  Json j = Json::object();
  for (const auto& [k, v] : c.echo) {
    if (k != "out") j[k] = v;
  }
  j["seed"] = std::to_string(c.seed);
  return j;
}

/// Writes manifest.json listing every recorded file with its checksum.
inline void write_manifest(const OutputWriter& out, const std::string& command, const ExperimentConfig& c,
                           Json body) {
  Json m;
  m["tool"] = "lensless-crb";
  m["version"] = version();
  m["command"] = command;
  m["config"] = config_echo(c);
  m["psf_surrogate"] = true;
  for (auto& [k, v] : body.items()) m[k] = v;
  Json scales = Json::object();
  for (const auto& [path, s] : out.pgm_scales()) scales[path] = s;
  m["pgm_scale"] = scales;
  std::vector<OutputFile> files = out.files();
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  Json list = Json::array();
  for (const auto& f : files) list.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  m["files"] = list;
  io::write_text(out.root() / "manifest.json", m.dump(2) + "\n");
}

/// Checks that every listed file exists with the recorded checksum and that
/// nothing else (besides manifest.json) is in the directory. Empty when sound.
[[nodiscard]] inline std::vector<std::string> check_manifest(const fs::path& root) {
  std::vector<std::string> problems;
  const Json m = Json::parse(io::read_text(root / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : m.at("files")) {
    const std::string path = f.at("path").get<std::string>();
    listed.insert(path);
    if (!fs::exists(root / path)) {
      problems.push_back("missing " + path);
    } else if (io::sha256_file(root / path) != f.at("sha256").get<std::string>()) {
      problems.push_back("checksum mismatch " + path);
    }
  }
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), root).generic_string();
    if (rel != "manifest.json" && !listed.contains(rel)) problems.push_back("unlisted " + rel);
  }
  return problems;
}

}  // namespace lensless
