// lensless-crb: PSFs, objects, CRB maps, self-checks and canned studies.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lensless/config.hpp"
#include "lensless/errors.hpp"
#include "lensless/objects.hpp"
#include "lensless/parallel.hpp"
#include "lensless/pipeline.hpp"
#include "lensless/psf.hpp"
#include "lensless/study.hpp"
#include "lensless/verify.hpp"

namespace {

using namespace lensless;

struct Common {
  std::string config_path;
  std::map<std::string, std::string> flags;  // config key -> value
  std::vector<std::string> sets;             // raw key=value overrides
  std::size_t threads = 0;
  bool record_timings = false;
};

void add_key(CLI::App* cmd, Common& common, const std::string& flag, const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      "--" + flag, [&common, key](const std::string& v) { common.flags[key] = v; }, help);
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "Config file of key = value lines")->check(CLI::ExistingFile);
  add_key(cmd, common, "seed", "seed", "Master seed");
  add_key(cmd, common, "out", "out", "Output directory");
  add_key(cmd, common, "epsilon-rel", "epsilon-rel", "Diagonal loading relative to max diag(J)");
  add_key(cmd, common, "epsilon-abs", "epsilon-abs", "Absolute diagonal loading (overrides --epsilon-rel)");
  add_key(cmd, common, "noise", "noise", "gaussian | poisson");
  add_key(cmd, common, "sigma2", "sigma2", "Gaussian noise variance");
  add_key(cmd, common, "background", "background", "Poisson background rate");
  add_key(cmd, common, "n-trials", "n-trials", "Estimator trials");
  add_key(cmd, common, "n-samples", "n-samples", "Monte Carlo samples");
  cmd->add_option("--set", common.sets, "Extra config override, key=value (repeatable)");
  cmd->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
  cmd->add_flag("--record-timings", common.record_timings, "Record per-stage wall times in the manifest");
}

ExperimentConfig resolve(const Common& common) {
  ConfigMap m;
  if (!common.config_path.empty()) m = read_config_file(common.config_path);
  for (const auto& s : common.sets) {
    for (const auto& [k, v] : parse_config_text(s, "--set")) m[k] = v;
  }
  for (const auto& [k, v] : common.flags) m[k] = v;
  set_thread_count(common.threads);
  return make_config(m);
}

int run_psf(const Common& common) {
  const ExperimentConfig c = resolve(common);
  const ImageGrid psf = generate_psf(c.psf);
  OutputWriter out(c.out);
  out.write("psf.csv", io::grid_csv(psf.values(), psf.shape()));
  out.write_pgm("psf.pgm", psf);
  Json body;
  body["psf"] = {{"kind", psf_label(c.psf)},
                 {"size", Json::array({psf.width(), psf.height()})},
                 {"seed", c.psf.seed},
                 {"multiplexing_index", multiplexing_index(psf)}};
  write_manifest(out, "psf", c, body);
  std::printf("psf %s: multiplexing index %.6g -> %s\n", psf_label(c.psf).c_str(), multiplexing_index(psf),
              c.out.c_str());
  return exit_code::ok;
}

int run_object(const Common& common) {
  const ExperimentConfig c = resolve(common);
  const ImageGrid obj = generate_object(c.object);
  OutputWriter out(c.out);
  out.write("object.csv", io::grid_csv(obj.values(), obj.shape()));
  out.write_pgm("object.pgm", obj);
  Json body;
  body["object"] = {{"kind", object_label(c.object)},
                    {"size", Json::array({obj.width(), obj.height()})},
                    {"seed", c.object.seed},
                    {"sparsity", sparsity(obj)},
                    {"total_photons", obj.sum()}};
  write_manifest(out, "object", c, body);
  std::printf("object %s: sparsity %.4f -> %s\n", object_label(c.object).c_str(), sparsity(obj), c.out.c_str());
  return exit_code::ok;
}

int run_crb_command(const Common& common) {
  const ExperimentConfig c = resolve(common);
  const CaseResult r = run_crb(c);
  OutputWriter out(c.out);
  write_case_files(out, "", r);
  Json body;
  body["case"] = case_json(r, common.record_timings);
  write_manifest(out, "crb", c, body);
  std::printf("crb %s/%s: mean %.6g median %.6g max %.6g (epsilon %.3g) -> %s\n", r.psf.label.c_str(),
              noise_label(r.noise).c_str(), r.summary.mean, r.summary.median, r.summary.max, r.crb.epsilon_used,
              c.out.c_str());
  return exit_code::ok;
}

int run_verify(const Common& common, bool inject_negative_h) {
  const ExperimentConfig c = resolve(common);
  const VerifyReport report = run_verification(c, {inject_negative_h});
  OutputWriter out(c.out);
  out.write("verify.json", report_json(report).dump(2) + "\n");
  write_manifest(out, "verify", c, Json::object());
  for (const auto& check : report.checks) {
    std::printf("%-40s %-30s %.3g\n", check.name.c_str(), to_string(check.status), check.value);
  }
  if (!report.passed()) {
    for (const auto& name : report.failures()) std::fprintf(stderr, "check failed: %s\n", name.c_str());
    return exit_code::verification;
  }
  return exit_code::ok;
}

int run_study_command(const Common& common, const std::string& name) {
  const ExperimentConfig c = resolve(common);
  if (!is_study(name)) throw ConfigError("unknown study '" + name + "' (expected fig2 or fig3)");
  const auto results = run_study(name, c, c.out, common.record_timings);
  for (const auto& r : results) std::printf("%-18s mean CRB %.6g\n", r.name.c_str(), r.summary.mean);
  return exit_code::ok;
}

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const SingularRateError& e) {
    std::fprintf(stderr, "error: %s (measurement pixel %zu)\n", e.what(), e.pixel());
    return exit_code::singular_rate;
  } catch (const FactorizationError& e) {
    std::fprintf(stderr, "error: %s (epsilon %g)\n", e.what(), e.epsilon());
    return exit_code::factorization;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::io;
  } catch (const TrialFailureError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::trials;
  } catch (const PlacementError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::usage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::usage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::io;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return exit_code::internal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cramer-Rao bounds for lensless imaging encoders", "lensless-crb"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Common common;

  auto* psf = app.add_subcommand("psf", "Generate a PSF (psf.csv, psf.pgm)");
  add_common(psf, common);
  add_key(psf, common, "kind", "psf", "lenslets | rml | diffuser");
  add_key(psf, common, "n", "psf-n", "Lenslet count");
  add_key(psf, common, "size", "psf-size", "PSF side length");
  add_key(psf, common, "n-spots", "psf-n-spots", "RML spot count");
  add_key(psf, common, "width-min", "psf-width-min", "RML minimum spot width");
  add_key(psf, common, "width-max", "psf-width-max", "RML maximum spot width");
  add_key(psf, common, "correlation-length", "psf-correlation-length", "Diffuser correlation length");
  add_key(psf, common, "contrast", "psf-contrast", "Diffuser log-intensity contrast");

  auto* object = app.add_subcommand("object", "Generate a test object (object.csv, object.pgm)");
  add_common(object, common);
  add_key(object, common, "kind", "object", "dense | sparse");
  add_key(object, common, "size", "object-size", "Object side length");
  add_key(object, common, "peak", "object-peak", "Peak photon count");
  add_key(object, common, "n-beads", "object-n-beads", "Sparse bead count");
  add_key(object, common, "n-blobs", "object-n-blobs", "Dense cell count");
  add_key(object, common, "radius-min", "object-radius-min", "Dense cell minimum radius");
  add_key(object, common, "radius-max", "object-radius-max", "Dense cell maximum radius");

  auto* crb = app.add_subcommand("crb", "Compute a CRB map (crb.csv, crb.pgm, cross_section.csv)");
  add_common(crb, common);
  add_key(crb, common, "psf", "psf", "lenslets | rml | diffuser");
  add_key(crb, common, "psf-file", "psf-file", "Read the PSF from a grid CSV");
  add_key(crb, common, "object", "object", "dense | sparse");
  add_key(crb, common, "object-file", "object-file", "Read the object from a grid CSV");

  auto* verify = app.add_subcommand("verify", "Run the 8x8 self-check suite");
  add_common(verify, common);
  bool inject_negative_h = false;
  verify->add_flag("--inject-negative-h", inject_negative_h)->group("");

  auto* study = app.add_subcommand("study", "Run a canned study: fig2 (Gaussian) or fig3 (Poisson)");
  add_common(study, common);
  std::string study_name;
  study->add_option("name", study_name, "fig2 | fig3")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code::usage;
  }

  if (psf->parsed()) return guarded([&] { return run_psf(common); });
  if (object->parsed()) return guarded([&] { return run_object(common); });
  if (crb->parsed()) return guarded([&] { return run_crb_command(common); });
  if (verify->parsed()) return guarded([&] { return run_verify(common, inject_negative_h); });
  return guarded([&] { return run_study_command(common, study_name); });
}
