#pragma once

// Reference decoders used as empirical checks on the bound: unconstrained
// least squares (unbiased and efficient in the linear-Gaussian model),
// projected-gradient NNLS, and Richardson-Lucy Poisson maximum likelihood,
// plus a seeded trial runner that measures per-pixel estimator statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/fisher.hpp"
#include "lensless/image_grid.hpp"
#include "lensless/imaging_model.hpp"
#include "lensless/linalg.hpp"
#include "lensless/noise.hpp"
#include "lensless/parallel.hpp"

namespace lensless {

/// Least squares without the non-negativity constraint: solves
/// (H^T H + eps I) v = H^T y. The factorization is done once at construction.
class GlsSolver {
 public:
  explicit GlsSolver(const SystemMatrix& h, const EpsilonPolicy& policy = {}) : h_(&h) {
    Matrix gram = weighted_gram(h.entries(), Vector(), 1.0);
    epsilon_ = policy.resolve(gram);
    gram.diagonal().array() += epsilon_;
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success) throw FactorizationError(epsilon_, "GLS: H^T H + eps I is not positive definite");
  }

  [[nodiscard]] Vector solve(const Vector& y) const { return llt_.solve(adjoint(*h_, y)); }
  [[nodiscard]] double epsilon_used() const noexcept { return epsilon_; }

 private:
  const SystemMatrix* h_;
  Eigen::LLT<Matrix> llt_;
  double epsilon_ = 0.0;
};

/// One-shot GLS. With i.i.d. noise the estimate does not depend on sigma2,
/// which is only validated. The result may contain negative values.
[[nodiscard]] inline Vector gls_estimate(const SystemMatrix& h, double sigma2, const Vector& y,
                                         const EpsilonPolicy& policy = {}) {
  validate(NoiseModel{GaussianNoise{sigma2}});
  return GlsSolver(h, policy).solve(y);
}

struct NnlsOptions {
  std::size_t max_iters = 5000;
  double tol = 1e-9;
};

struct NnlsResult {
  Vector x;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;  // |y - Hx|^2
};

/// Largest eigenvalue of H^T H by power iteration (Rayleigh quotient |Hx|^2/|x|^2).
[[nodiscard]] inline double gram_spectral_norm(const SystemMatrix& h, std::size_t max_iters = 500) {
  Vector x = Vector::Constant(h.cols(), 1.0 / std::sqrt(static_cast<double>(h.cols())));
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    const Vector hx = forward(h, x);
    const double next = hx.squaredNorm() / x.squaredNorm();
    Vector z = adjoint(h, hx);
    const double norm = z.norm();
    if (norm == 0.0) return next;
    x = z / norm;
    if (std::abs(next - lambda) <= 1e-13 * next) return next;
    lambda = next;
  }
  return lambda;
}

/// min |y - Hv|^2 s.t. v >= 0 by projected gradient with step 1/L, starting
/// from zero. Stops when the relative objective decrease drops below tol.
[[nodiscard]] inline NnlsResult nnls_estimate(const SystemMatrix& h, const Vector& y, const NnlsOptions& opts = {}) {
  if (opts.max_iters < 1) throw InvalidSpecError("nnls_estimate: max_iters must be >= 1");
  if (y.size() != h.rows()) throw DimensionError("nnls_estimate: measurement length does not match H");
  const double lipschitz = gram_spectral_norm(h);

  NnlsResult out;
  out.x = Vector::Zero(h.cols());
  if (!(lipschitz > 0.0)) {
    out.objective = y.squaredNorm();
    out.converged = true;
    return out;
  }
  double previous = y.squaredNorm();
  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    const Vector residual = forward(h, out.x) - y;
    const Vector grad = adjoint(h, residual);
    out.x = (out.x - grad / lipschitz).cwiseMax(0.0);
    out.iterations = it;
    const double current = (forward(h, out.x) - y).squaredNorm();
    out.objective = current;
    if (current == 0.0 || previous == 0.0 || (previous - current) / previous < opts.tol) {
      out.converged = true;
      break;
    }
    previous = current;
  }
  return out;
}

struct MleOptions {
  std::size_t max_iters = 10000;
  double tol = 1e-10;
  /// Log-likelihood is recorded every this many iterations (0 disables).
  std::size_t trace_every = 100;
};

struct MleResult {
  Vector x;
  std::size_t iterations = 0;
  bool converged = false;
  double log_likelihood = 0.0;
  /// (iteration, log-likelihood) samples, starting at iteration 0.
  std::vector<std::pair<std::size_t, double>> trace;
};

/// Poisson maximum likelihood by Richardson-Lucy:
///   v <- v * H^T(y / (Hv + b)) / H^T 1
/// from a flat positive start. Stops on relative log-likelihood change < tol.
[[nodiscard]] inline MleResult poisson_mle(const SystemMatrix& h, const Vector& y, double background,
                                           const MleOptions& opts = {}) {
  validate(NoiseModel{PoissonNoise{background}});
  if (y.size() != h.rows()) throw DimensionError("poisson_mle: measurement length does not match H");
  detail::check_counts(y, "poisson_mle");
  const Vector col_sums = h.entries().colwise().sum().transpose();
  for (Eigen::Index j = 0; j < col_sums.size(); ++j) {
    if (!(col_sums[j] > 0.0)) throw InvalidSpecError("poisson_mle: column " + std::to_string(j) + " of H sums to zero");
  }

  double log_factorials = 0.0;
  for (Eigen::Index l = 0; l < y.size(); ++l) log_factorials += std::lgamma(y[l] + 1.0);
  auto loglik = [&](const Vector& rate) {
    double total = -log_factorials;
    for (Eigen::Index l = 0; l < y.size(); ++l) {
      if (rate[l] > 0.0) {
        total += y[l] * std::log(rate[l]) - rate[l];
      } else if (y[l] > 0.0) {
        return -std::numeric_limits<double>::infinity();
      }
    }
    return total;
  };

  MleResult out;
  out.x = Vector::Constant(h.cols(), std::max(y.sum(), 1.0) / col_sums.sum());
  Vector rate = detail::poisson_rate(h, out.x, background);
  double current = loglik(rate);
  if (opts.trace_every) out.trace.emplace_back(0, current);

  Vector ratio(y.size());
  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    for (Eigen::Index l = 0; l < y.size(); ++l) {
      if (y[l] == 0.0) {
        ratio[l] = 0.0;
      } else if (rate[l] <= 0.0) {
        throw SingularRateError(static_cast<std::size_t>(l), "poisson_mle: zero rate with a positive count");
      } else {
        ratio[l] = y[l] / rate[l];
      }
    }
    out.x = out.x.cwiseProduct(adjoint(h, ratio)).cwiseQuotient(col_sums);
    rate = detail::poisson_rate(h, out.x, background);
    const double next = loglik(rate);
    out.iterations = it;
    if (opts.trace_every && it % opts.trace_every == 0) out.trace.emplace_back(it, next);
    const double change = std::abs(next - current) / std::max(std::abs(current), 1.0);
    current = next;
    if (change < opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.log_likelihood = current;
  return out;
}

enum class Estimator { Gls, Nnls, PoissonMle };

[[nodiscard]] inline const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::Gls: return "gls";
    case Estimator::Nnls: return "nnls";
    case Estimator::PoissonMle: return "poisson-mle";
  }
  return "unknown";
}

struct TrialOptions {
  EpsilonPolicy epsilon{};
  NnlsOptions nnls{};
  MleOptions mle{};
  /// Failures above this fraction of trials abort the run.
  double max_failure_fraction = 0.01;
};

struct TrialReport {
  Estimator estimator = Estimator::Gls;
  std::size_t n_trials = 0;  // successful trials used in the statistics
  std::size_t n_failed = 0;
  Vector per_pixel_mean;
  Vector per_pixel_variance;  // unbiased (n - 1) sample variance
  Vector per_pixel_bias;
  CrbMap crb;
  Vector efficiency;  // variance / CRB
  Shape object_shape;
};

namespace detail {

/// Streaming mean / sum of squared deviations, mergeable in a fixed order.
struct Welford {
  std::size_t n = 0;
  Vector mean;
  Vector m2;

  explicit Welford(Eigen::Index d = 0) : mean(Vector::Zero(d)), m2(Vector::Zero(d)) {}

  void add(const Vector& x) {
    ++n;
    const Vector delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(x - mean);
  }

  void merge(const Welford& other) {
    if (other.n == 0) return;
    if (n == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(other.n);
    const double total = na + nb;
    const Vector delta = other.mean - mean;
    mean += delta * (nb / total);
    m2 += other.m2 + delta.cwiseProduct(delta) * (na * nb / total);
    n += other.n;
  }
};

inline constexpr std::size_t kTrialChunk = 64;

}  // namespace detail

/// Median of a vector's entries.
[[nodiscard]] inline double median(const Vector& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

/// Draws n_trials measurements (trial i uses seed + i), decodes each one and
/// accumulates per-pixel statistics. Trials are processed in fixed chunks
/// whose partial statistics are merged in chunk order, so the report does not
/// depend on the thread count.
[[nodiscard]] inline TrialReport run_trials(const NoiseModel& model, const SystemMatrix& h, const Vector& v_true,
                                            Estimator estimator, std::size_t n_trials, std::uint64_t seed,
                                            const CrbMap& crb, const TrialOptions& opts = {}) {
  validate(model);
  if (n_trials < 2) throw InvalidSpecError("run_trials: n_trials must be >= 2");
  if (v_true.size() != h.cols()) throw DimensionError("run_trials: object length does not match H");
  if (crb.values.size() != h.cols()) throw DimensionError("run_trials: CRB map length does not match H");
  const Sampler draw(model, forward(h, v_true));

  std::optional<GlsSolver> gls;
  if (estimator == Estimator::Gls) gls.emplace(h, opts.epsilon);
  const double background =
      std::holds_alternative<PoissonNoise>(model) ? std::get<PoissonNoise>(model).background : 0.0;

  auto decode = [&](const Vector& y) -> Vector {
    switch (estimator) {
      case Estimator::Gls: return gls->solve(y);
      case Estimator::Nnls: return nnls_estimate(h, y, opts.nnls).x;
      case Estimator::PoissonMle: return poisson_mle(h, y, background, opts.mle).x;
    }
    return {};
  };

  const std::size_t n_chunks = (n_trials + detail::kTrialChunk - 1) / detail::kTrialChunk;
  std::vector<detail::Welford> partial(n_chunks, detail::Welford(h.cols()));
  std::vector<std::size_t> failures(n_chunks, 0);
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t end = std::min(n_trials, (c + 1) * detail::kTrialChunk);
    for (std::size_t i = c * detail::kTrialChunk; i < end; ++i) {
      try {
        partial[c].add(decode(draw(seed + i)));
      } catch (const std::exception&) {
        ++failures[c];
      }
    }
  });

  detail::Welford total(h.cols());
  std::size_t failed = 0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    total.merge(partial[c]);
    failed += failures[c];
  }
  if (static_cast<double>(failed) >= opts.max_failure_fraction * static_cast<double>(n_trials) && failed > 0) {
    throw TrialFailureError("run_trials: " + std::to_string(failed) + " of " + std::to_string(n_trials) + " " +
                            to_string(estimator) + " trials failed");
  }
  if (total.n < 2) throw TrialFailureError("run_trials: fewer than two successful trials");

  TrialReport report;
  report.estimator = estimator;
  report.n_trials = total.n;
  report.n_failed = failed;
  report.per_pixel_mean = total.mean;
  report.per_pixel_variance = total.m2 / static_cast<double>(total.n - 1);
  report.per_pixel_bias = total.mean - v_true;
  report.crb = crb;
  report.efficiency = report.per_pixel_variance.cwiseQuotient(crb.values);
  report.object_shape = h.object_shape();
  return report;
}

}  // namespace lensless
