#pragma once

// Reduced-size (8x8) self-check suite: system-matrix and Fisher invariants,
// Monte Carlo Fisher against the closed forms, finite-difference checks of
// the score and Hessian, and GLS efficiency against the CRB.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lensless/checks.hpp"
#include "lensless/config.hpp"
#include "lensless/estimators.hpp"
#include "lensless/fisher.hpp"
#include "lensless/imaging_model.hpp"
#include "lensless/noise.hpp"
#include "lensless/pipeline.hpp"
#include "lensless/psf.hpp"
#include "lensless/rng.hpp"

namespace lensless {

inline constexpr std::size_t kVerifyMinSamples = 1000;
inline constexpr std::size_t kVerifyMinTrials = 100;
inline constexpr double kMonteCarloTolerance = 0.05;
inline constexpr double kScoreFdTolerance = 1e-5;
inline constexpr double kHessianFdTolerance = 1e-4;

enum class CheckStatus { Pass, Fail, SkippedInsufficientSamples, SkippedInsufficientTrials };

[[nodiscard]] inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::SkippedInsufficientSamples: return "skipped-insufficient-samples";
    case CheckStatus::SkippedInsufficientTrials: return "skipped-insufficient-trials";
  }
  return "unknown";
}

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  /// Test hook: writes one negative entry into the first system matrix.
  bool inject_negative_h = false;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  [[nodiscard]] bool passed() const {
    return std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::Fail; });
  }
  [[nodiscard]] std::vector<std::string> failures() const {
    std::vector<std::string> names;
    for (const auto& c : checks) {
      if (c.status == CheckStatus::Fail) names.push_back(c.name);
    }
    return names;
  }
};

namespace detail {

inline CheckResult bounded(std::string name, double value, double tolerance, std::string detail = {}) {
  const bool ok = std::isfinite(value) && value < tolerance;
  return {std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, value, tolerance, std::move(detail)};
}

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

/// Strictly positive object with entries uniform in [lo, hi].
inline Vector positive_object(Eigen::Index d, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng = make_engine(seed, hash_name("verify-object"));
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(d);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Small random instance for derivative checks: a 3x3 object under a random
/// strictly positive 3x3 PSF.
inline SystemMatrix random_small_system(std::uint64_t seed) {
  std::mt19937_64 rng = make_engine(seed, hash_name("verify-small-psf"));
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(9);
  for (auto& x : p) x = u(rng);
  return build_system_matrix(ImageGrid({3, 3}, std::move(p)), {3, 3}, {3, 3}, "random");
}

inline void derivative_checks(VerifyReport& report, const NoiseModel& model, std::uint64_t seed) {
  const std::string tag = noise_label(model);
  const SystemMatrix h = random_small_system(seed);
  const Vector v_true = positive_object(h.cols(), 20.0, 100.0, seed);
  const Vector y = sample(model, forward(h, v_true), mix_seed(seed, hash_name("verify-fd-" + tag)));
  // Evaluate away from the sampling point so the gradient is not near zero.
  const Vector v = 1.2 * v_true;
  const double step = 1e-3;

  const Vector g = score(model, h, v, y);
  const Vector g_fd = finite_difference_gradient([&](const Vector& x) { return log_likelihood(model, h, x, y).value; },
                                                 v, step);
  report.checks.push_back(bounded("fd-score/" + tag, relative_error(g, g_fd), kScoreFdTolerance));

  const Matrix hess = hessian_log_likelihood(model, h, v, y);
  const Matrix hess_fd = finite_difference_jacobian([&](const Vector& x) { return score(model, h, x, y); }, v, step);
  report.checks.push_back(bounded("fd-hessian/" + tag, relative_frobenius_error(hess, hess_fd), kHessianFdTolerance));
}

}  // namespace detail

/// Runs every check; the config supplies sigma2, background, epsilon,
/// n_samples, n_trials and the master seed.
[[nodiscard]] inline VerifyReport run_verification(const ExperimentConfig& c, const VerifyOptions& opts = {}) {
  VerifyReport report;
  const double sigma2 = std::holds_alternative<GaussianNoise>(c.noise) ? std::get<GaussianNoise>(c.noise).sigma2 : 1.0;
  const double background = std::holds_alternative<PoissonNoise>(c.noise) ? std::get<PoissonNoise>(c.noise).background
                                                                          : PoissonNoise{}.background;
  const std::vector<NoiseModel> models{GaussianNoise{sigma2}, PoissonNoise{background}};
  const Shape size{8, 8};
  const std::uint64_t psf_seed = substream_seed(c.seed, "psf");
  const std::uint64_t noise_seed = substream_seed(c.seed, "noise");
  const Vector v = detail::positive_object(static_cast<Eigen::Index>(size.pixels()), 20.0, 100.0,
                                           substream_seed(c.seed, "object"));

  const std::vector<PsfSpec> psfs{{Lenslets{1}, size, psf_seed}, {Lenslets{3}, size, psf_seed},
                                  {Diffuser{}, size, psf_seed}};
  bool injected = false;
  for (const auto& spec : psfs) {
    const std::string label = psf_label(spec);
    SystemMatrix h = build_system_matrix(generate_psf(spec), size, default_psf_pad(spec.size), label);

    SystemMatrix checked = h;
    if (opts.inject_negative_h && !injected) {
      checked.mutable_entries_for_testing()(0, 0) = -1e-3;
      injected = true;
    }
    const auto h_problems = check_invariants(checked);
    report.checks.push_back({"h-invariants/" + label, h_problems.empty() ? CheckStatus::Pass : CheckStatus::Fail,
                             static_cast<double>(h_problems.size()), 0.0, detail::join(h_problems)});

    for (const auto& model : models) {
      const std::string tag = noise_label(model) + "/" + label;
      const FisherMatrix closed = fisher_closed_form(model, h, v);
      const auto j_problems = check_invariants(closed);
      report.checks.push_back({"fisher-invariants/" + tag, j_problems.empty() ? CheckStatus::Pass : CheckStatus::Fail,
                               static_cast<double>(j_problems.size()), 0.0, detail::join(j_problems)});

      const std::uint64_t mc_seed = mix_seed(noise_seed, hash_name("verify-mc-" + tag));
      if (c.n_samples < kVerifyMinSamples) {
        for (const char* kind : {"mc-score/", "mc-hessian/"}) {
          report.checks.push_back({kind + tag, CheckStatus::SkippedInsufficientSamples, 0.0, kMonteCarloTolerance,
                                   "n_samples=" + std::to_string(c.n_samples) + " < " +
                                       std::to_string(kVerifyMinSamples)});
        }
        continue;
      }
      const FisherMatrix mc = fisher_monte_carlo(model, h, v, c.n_samples, mc_seed);
      report.checks.push_back(detail::bounded("mc-score/" + tag, relative_frobenius_error(mc.entries, closed.entries),
                                              kMonteCarloTolerance,
                                              "n_samples=" + std::to_string(c.n_samples)));
      const FisherMatrix mh = fisher_monte_carlo_hessian(model, h, v, c.n_samples, mc_seed);
      report.checks.push_back(detail::bounded("mc-hessian/" + tag,
                                              relative_frobenius_error(mh.entries, closed.entries),
                                              kMonteCarloTolerance, "n_samples=" + std::to_string(c.n_samples)));
    }
  }

  for (const auto& model : models) detail::derivative_checks(report, model, substream_seed(c.seed, "noise"));

  if (c.n_trials < kVerifyMinTrials) {
    report.checks.push_back({"gls-efficiency/gaussian/lens1", CheckStatus::SkippedInsufficientTrials, 0.0, 0.1,
                             "n_trials=" + std::to_string(c.n_trials) + " < " + std::to_string(kVerifyMinTrials)});
  } else {
    const SystemMatrix h = build_system_matrix(generate_psf(psfs[0]), size, default_psf_pad(size), "lens1");
    const NoiseModel gauss = GaussianNoise{sigma2};
    const CrbMap crb = crb_from_fisher(fisher_gaussian(h, sigma2), c.epsilon);
    TrialOptions topts;
    topts.epsilon = c.epsilon;
    const TrialReport tr = run_trials(gauss, h, v, Estimator::Gls, c.n_trials, substream_seed(c.seed, "trials"), crb, topts);
    const double eff = median(tr.efficiency);
    report.checks.push_back({"gls-efficiency/gaussian/lens1",
                             std::abs(eff - 1.0) <= 0.1 ? CheckStatus::Pass : CheckStatus::Fail, eff, 0.1,
                             "median variance/CRB over " + std::to_string(tr.n_trials) + " trials"});
  }
  return report;
}

[[nodiscard]] inline Json report_json(const VerifyReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json j;
    j["name"] = c.name;
    j["status"] = to_string(c.status);
    j["value"] = detail::finite_or_null(c.value);
    j["tolerance"] = c.tolerance;
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(j);
  }
  Json out;
  out["passed"] = r.passed();
  out["checks"] = checks;
  return out;
}

}  // namespace lensless
