#pragma once

// Fisher information for the two noise models and the Cramer-Rao bound map.
//
// Closed forms:  Gaussian  J = H^T H / sigma2          (object independent)
//                Poisson   J = H^T diag(1 / (Hv + b)) H
// Monte Carlo:   J ~ (1/n) sum s_i s_i^T over sampled scores, or
//                J ~ -(1/n) sum Hessian(y_i)
// CRB:           diag((J + eps I)^-1) via Cholesky.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/image_grid.hpp"
#include "lensless/imaging_model.hpp"
#include "lensless/linalg.hpp"
#include "lensless/noise.hpp"
#include "lensless/parallel.hpp"
#include "lensless/rng.hpp"

namespace lensless {

enum class FisherProvenance { ClosedFormGaussian, ClosedFormPoisson, MonteCarloScore, MonteCarloHessian };

[[nodiscard]] inline const char* to_string(FisherProvenance p) {
  switch (p) {
    case FisherProvenance::ClosedFormGaussian: return "closed-form-gaussian";
    case FisherProvenance::ClosedFormPoisson: return "closed-form-poisson";
    case FisherProvenance::MonteCarloScore: return "monte-carlo-score";
    case FisherProvenance::MonteCarloHessian: return "monte-carlo-hessian";
  }
  return "unknown";
}

struct FisherMatrix {
  Matrix entries;
  FisherProvenance provenance = FisherProvenance::ClosedFormGaussian;
  std::size_t n_samples = 0;  // Monte Carlo provenances only
  Shape object_shape;

  [[nodiscard]] Eigen::Index dim() const noexcept { return entries.rows(); }
};

/// Symmetry (1e-10 absolute) and eigenvalues >= -1e-8. Empty when sound.
[[nodiscard]] inline std::vector<std::string> check_invariants(const FisherMatrix& j) {
  std::vector<std::string> problems;
  if (j.entries.rows() != j.entries.cols()) {
    problems.emplace_back("Fisher matrix is not square");
    return problems;
  }
  if ((j.entries - j.entries.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    problems.emplace_back("Fisher matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(j.entries, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8) problems.emplace_back("Fisher matrix has a negative eigenvalue");
  return problems;
}

[[nodiscard]] inline FisherMatrix fisher_gaussian(const SystemMatrix& h, double sigma2) {
  validate(NoiseModel{GaussianNoise{sigma2}});
  Matrix gram = weighted_gram(h.entries(), Vector(), 1.0);
  gram /= sigma2;
  return {std::move(gram), FisherProvenance::ClosedFormGaussian, 0, h.object_shape()};
}

[[nodiscard]] inline FisherMatrix fisher_poisson(const SystemMatrix& h, const Vector& v, double background) {
  validate(NoiseModel{PoissonNoise{background}});
  if (v.size() != h.cols()) throw DimensionError("fisher_poisson: object length does not match H");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0)) throw InvalidSpecError("fisher_poisson: object is negative at pixel " + std::to_string(i));
  }
  const Vector rate = detail::poisson_rate(h, v, background);
  Vector root(rate.size());
  for (Eigen::Index l = 0; l < rate.size(); ++l) {
    if (rate[l] > 0.0) {
      root[l] = 1.0 / std::sqrt(rate[l]);
    } else if (h.entries().row(l).cwiseAbs().maxCoeff() == 0.0) {
      root[l] = 0.0;  // pixel outside the padded PSF's reach: always dark, no information
    } else {
      throw SingularRateError(static_cast<std::size_t>(l),
                              "fisher_poisson: zero rate; use a positive background or a brighter object");
    }
  }
  return {weighted_gram(h.entries(), root, 1.0), FisherProvenance::ClosedFormPoisson, 0, h.object_shape()};
}

/// Closed-form Fisher matrix for whichever model is given.
[[nodiscard]] inline FisherMatrix fisher_closed_form(const NoiseModel& model, const SystemMatrix& h, const Vector& v) {
  if (const auto* g = std::get_if<GaussianNoise>(&model)) return fisher_gaussian(h, g->sigma2);
  return fisher_poisson(h, v, std::get<PoissonNoise>(model).background);
}

/// Seed of Monte Carlo sample i; exposed so tests can replay individual draws.
[[nodiscard]] constexpr std::uint64_t monte_carlo_sample_seed(std::uint64_t seed, std::size_t i) noexcept {
  return mix_seed(seed, static_cast<std::uint64_t>(i));
}

namespace detail {

inline constexpr std::size_t kMonteCarloBatch = 256;
inline constexpr std::size_t kMonteCarloWave = 16;

/// Sums fn(batch) over fixed-size sample batches. Batches run in parallel in
/// waves of fixed width and are added in batch order, so the floating-point
/// result does not depend on the thread count.
template <class BatchFn>
Matrix reduce_batches(std::size_t n_samples, Eigen::Index rows, Eigen::Index cols, BatchFn&& fn) {
  const std::size_t n_batches = (n_samples + kMonteCarloBatch - 1) / kMonteCarloBatch;
  Matrix total = Matrix::Zero(rows, cols);
  std::vector<Matrix> partial(kMonteCarloWave);
  for (std::size_t first = 0; first < n_batches; first += kMonteCarloWave) {
    const std::size_t count = std::min(kMonteCarloWave, n_batches - first);
    parallel_for(count, [&](std::size_t w) {
      const std::size_t b = first + w;
      const std::size_t begin = b * kMonteCarloBatch;
      const std::size_t end = std::min(n_samples, begin + kMonteCarloBatch);
      partial[w] = fn(begin, end);
    });
    for (std::size_t w = 0; w < count; ++w) total += partial[w];
  }
  return total;
}

}  // namespace detail

/// (1/n) sum_i s_i s_i^T with s_i the score at y_i ~ p(y; v).
[[nodiscard]] inline FisherMatrix fisher_monte_carlo(const NoiseModel& model, const SystemMatrix& h, const Vector& v,
                                                     std::size_t n_samples, std::uint64_t seed) {
  validate(model);
  if (n_samples < 1) throw InvalidSpecError("fisher_monte_carlo: n_samples must be >= 1");
  if (v.size() != h.cols()) throw DimensionError("fisher_monte_carlo: object length does not match H");
  const Vector mean = detail::model_mean(model, h, v);
  const Sampler draw(model, forward(h, v));
  const auto d = h.cols();

  Matrix sum = detail::reduce_batches(n_samples, d, d, [&](std::size_t begin, std::size_t end) {
    Matrix weights(h.rows(), static_cast<Eigen::Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) {
      const Vector y = draw(monte_carlo_sample_seed(seed, i));
      weights.col(static_cast<Eigen::Index>(i - begin)) = detail::score_weights(model, mean, y);
    }
    const Matrix scores = h.entries().transpose() * weights;
    Matrix outer = Matrix::Zero(d, d);
    outer.selfadjointView<Eigen::Lower>().rankUpdate(scores, 1.0);
    return outer;
  });
  sum /= static_cast<double>(n_samples);
  copy_lower_to_upper(sum);
  return {std::move(sum), FisherProvenance::MonteCarloScore, n_samples, h.object_shape()};
}

/// -(1/n) sum_i Hessian(y_i). Both Hessians are linear in y, so this equals
/// minus the Hessian at the sample-mean measurement.
[[nodiscard]] inline FisherMatrix fisher_monte_carlo_hessian(const NoiseModel& model, const SystemMatrix& h,
                                                             const Vector& v, std::size_t n_samples,
                                                             std::uint64_t seed) {
  validate(model);
  if (n_samples < 1) throw InvalidSpecError("fisher_monte_carlo_hessian: n_samples must be >= 1");
  if (v.size() != h.cols()) throw DimensionError("fisher_monte_carlo_hessian: object length does not match H");
  const Sampler draw(model, forward(h, v));
  Matrix y_sum = detail::reduce_batches(n_samples, h.rows(), 1, [&](std::size_t begin, std::size_t end) {
    Matrix acc = Matrix::Zero(h.rows(), 1);
    for (std::size_t i = begin; i < end; ++i) acc.col(0) += draw(monte_carlo_sample_seed(seed, i));
    return acc;
  });
  const Vector y_mean = y_sum.col(0) / static_cast<double>(n_samples);
  Matrix j = -hessian_log_likelihood(model, h, v, y_mean);
  return {std::move(j), FisherProvenance::MonteCarloHessian, n_samples, h.object_shape()};
}

/// Diagonal loading for the inversion. The absolute value wins when set.
struct EpsilonPolicy {
  double relative = 1e-9;
  std::optional<double> absolute;

  [[nodiscard]] double resolve(const Matrix& j) const {
    if (absolute) return *absolute;
    return j.size() == 0 ? 0.0 : relative * j.diagonal().maxCoeff();
  }
};

/// Per-pixel lower bounds on unbiased-estimator variance (photons^2).
struct CrbMap {
  Vector values;
  double epsilon_used = 0.0;
  Shape object_shape;

  [[nodiscard]] ImageGrid grid() const { return to_grid(values, object_shape); }
};

/// diag((J + eps I)^-1) from the Cholesky factor L: the j-th entry is the
/// squared norm of column j of L^-1.
[[nodiscard]] inline CrbMap crb_from_fisher(const FisherMatrix& j, const EpsilonPolicy& policy = {}) {
  const Matrix& m = j.entries;
  if (m.rows() != m.cols()) throw DimensionError("crb_from_fisher: Fisher matrix is not square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw InvalidSpecError("crb_from_fisher: Fisher matrix is not symmetric");
  }
  const double eps = policy.resolve(m);
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidSpecError("crb_from_fisher: epsilon must be >= 0");

  Matrix loaded = m;
  loaded.diagonal().array() += eps;
  Eigen::LLT<Matrix> llt(loaded);
  if (llt.info() != Eigen::Success) {
    throw FactorizationError(eps, "crb_from_fisher: J + eps I is not positive definite");
  }
  const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(m.rows(), m.cols()));
  Vector crb = l_inv.colwise().squaredNorm().transpose();
  if (!crb.allFinite()) throw FactorizationError(eps, "crb_from_fisher: inverse is not finite");
  return {std::move(crb), eps, j.object_shape};
}

struct CrbSummary {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::vector<double> cross_section;  // row floor(height / 2)
};

[[nodiscard]] inline CrbSummary crb_summary(const CrbMap& map) {
  CrbSummary s;
  const auto n = static_cast<std::size_t>(map.values.size());
  if (n == 0) return s;
  std::vector<double> sorted(map.values.data(), map.values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  s.mean = total / static_cast<double>(n);
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.max = sorted.back();
  const std::size_t row = map.object_shape.height / 2;
  const std::size_t w = map.object_shape.width;
  s.cross_section.assign(map.values.data() + row * w, map.values.data() + (row + 1) * w);
  return s;
}

}  // namespace lensless
