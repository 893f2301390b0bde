#pragma once

// Canned multiplexing studies.
//   fig2  Gaussian noise over the seven standard encoders.
//   fig3  Poisson noise over {dense cells, sparse beads} x seven encoders.
// Cases run in parallel; each writes only inside its own subdirectory and the
// summary table and manifest are written afterwards.

#include <optional>
#include <string>
#include <vector>

#include "lensless/config.hpp"
#include "lensless/objects.hpp"
#include "lensless/parallel.hpp"
#include "lensless/pipeline.hpp"
#include "lensless/psf.hpp"

namespace lensless {

inline constexpr Shape kStudyGrid{32, 32};

struct StudyCase {
  std::string dir;
  NoiseModel noise;
  PsfSpec psf;
  std::optional<ObjectSpec> object;
};

[[nodiscard]] inline bool is_study(const std::string& name) { return name == "fig2" || name == "fig3"; }

/// Case list for a study. Noise parameters, epsilon and seeds come from the
/// base config; grid sizes and encoder/object families are fixed.
[[nodiscard]] inline std::vector<StudyCase> study_cases(const std::string& name, const ExperimentConfig& base) {
  const auto encoders = standard_encoders(kStudyGrid, substream_seed(base.seed, "psf"));
  std::vector<StudyCase> cases;
  if (name == "fig2") {
    const double sigma2 =
        std::holds_alternative<GaussianNoise>(base.noise) ? std::get<GaussianNoise>(base.noise).sigma2 : 1.0;
    for (const auto& e : encoders) cases.push_back({psf_label(e), GaussianNoise{sigma2}, e, std::nullopt});
  } else if (name == "fig3") {
    const double background = std::holds_alternative<PoissonNoise>(base.noise)
                                  ? std::get<PoissonNoise>(base.noise).background
                                  : PoissonNoise{}.background;
    const std::uint64_t object_seed = substream_seed(base.seed, "object");
    const ObjectSpec dense{DenseCells{}, kStudyGrid, 100.0, object_seed};
    const ObjectSpec sparse{SparseBeads{}, kStudyGrid, 100.0, object_seed};
    for (const auto& object : {dense, sparse}) {
      for (const auto& e : encoders) {
        cases.push_back({object_label(object) + "-" + psf_label(e), PoissonNoise{background}, e, object});
      }
    }
  } else {
    throw ConfigError("unknown study '" + name + "' (expected fig2 or fig3)");
  }
  return cases;
}

[[nodiscard]] inline std::string summary_csv(const std::vector<CaseResult>& results) {
  auto cell = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string("na"); };
  std::string out =
      "case,noise,psf,object,multiplexing_index,object_sparsity,mean_crb,median_crb,max_crb,epsilon_used,"
      "object_correlation\n";
  for (const auto& r : results) {
    out += r.name + "," + noise_label(r.noise) + "," + r.psf.label + "," + (r.object ? r.object->label : "none") +
           "," + cell(r.multiplexing) + "," + cell(r.object_sparsity) + "," + cell(r.summary.mean) + "," +
           cell(r.summary.median) + "," + cell(r.summary.max) + "," + cell(r.crb.epsilon_used) + "," +
           cell(r.object_correlation) + "\n";
  }
  return out;
}

/// Runs a study into `out_dir` and returns the per-case results in case order.
inline std::vector<CaseResult> run_study(const std::string& name, const ExperimentConfig& base,
                                         const fs::path& out_dir, bool record_timings = false) {
  const auto cases = study_cases(name, base);
  std::vector<std::optional<CaseResult>> results(cases.size());
  std::vector<OutputWriter> writers(cases.size(), OutputWriter(out_dir));
  parallel_for(cases.size(), [&](std::size_t i) {
    const StudyCase& sc = cases[i];
    std::optional<Labeled> object;
    if (sc.object) object = Labeled{object_label(*sc.object), generate_object(*sc.object)};
    results[i] = run_case(sc.dir, sc.noise, Labeled{psf_label(sc.psf), generate_psf(sc.psf)}, std::move(object),
                          kStudyGrid, std::nullopt, base.epsilon);
    write_case_files(writers[i], sc.dir + "/", *results[i]);
  });

  std::vector<CaseResult> done;
  OutputWriter out(out_dir);
  Json case_list = Json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    out.merge(writers[i]);
    case_list.push_back(case_json(*results[i], record_timings));
    done.push_back(std::move(*results[i]));
  }
  out.write("summary.csv", summary_csv(done));
  Json body;
  body["study"] = name;
  body["cases"] = case_list;
  write_manifest(out, "study " + name, base, body);
  return done;
}

}  // namespace lensless
