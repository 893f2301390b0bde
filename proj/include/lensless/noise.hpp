#pragma once

// Measurement noise models and their likelihood calculus: samplers,
// log-likelihoods, score vectors and Hessians with respect to the object.
//
//   Gaussian (sigma2 * I):  ln p = -|y - Hv|^2 / (2 sigma2) - (k/2) ln(2 pi sigma2)
//                           score = H^T (y - Hv) / sigma2,   Hessian = -H^T H / sigma2
//   Poisson (rate Hv + b):  ln p = sum y ln r - r - ln y!
//                           score = H^T (y / r - 1),          Hessian = -H^T diag(y / r^2) H

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/image_grid.hpp"
#include "lensless/imaging_model.hpp"
#include "lensless/linalg.hpp"
#include "lensless/rng.hpp"

namespace lensless {

/// I.i.d. additive Gaussian noise with per-pixel variance sigma2 (photons^2).
struct GaussianNoise {
  double sigma2 = 1.0;
};

/// Photon shot noise. The rate at each pixel is (Hv)_l + background.
struct PoissonNoise {
  double background = 1e-3;
};

using NoiseModel = std::variant<GaussianNoise, PoissonNoise>;

inline void validate(const NoiseModel& model) {
  if (const auto* g = std::get_if<GaussianNoise>(&model)) {
    if (!(g->sigma2 > 0.0) || !std::isfinite(g->sigma2)) throw InvalidSpecError("Gaussian sigma2 must be > 0");
  } else {
    const double bg = std::get<PoissonNoise>(model).background;
    if (!(bg >= 0.0) || !std::isfinite(bg)) throw InvalidSpecError("Poisson background must be >= 0");
  }
}

[[nodiscard]] inline std::string noise_label(const NoiseModel& model) {
  return std::holds_alternative<GaussianNoise>(model) ? "gaussian" : "poisson";
}

/// Measurement sampler for a fixed noiseless image b. Each draw builds its
/// own engine from `seed`, so concurrent draws are reproducible.
class Sampler {
 public:
  Sampler(const NoiseModel& model, const Vector& b) : model_(model), b_(b) {
    validate(model);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      if (!(b[i] >= 0.0)) throw InvalidSpecError("sample: noiseless image is negative at pixel " + std::to_string(i));
    }
    if (const auto* p = std::get_if<PoissonNoise>(&model)) {
      params_.reserve(static_cast<std::size_t>(b.size()));
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        const double rate = b[i] + p->background;
        params_.emplace_back(rate > 0.0 ? rate : 1.0);
      }
    }
  }

  [[nodiscard]] Vector operator()(std::uint64_t seed) const {
    auto rng = make_engine(seed, hash_name("noise-sample"));
    Vector y(b_.size());
    if (const auto* g = std::get_if<GaussianNoise>(&model_)) {
      std::normal_distribution<double> n(0.0, std::sqrt(g->sigma2));
      for (Eigen::Index i = 0; i < b_.size(); ++i) y[i] = b_[i] + n(rng);
      return y;
    }
    const double bg = std::get<PoissonNoise>(model_).background;
    std::poisson_distribution<long long> dist;
    for (Eigen::Index i = 0; i < b_.size(); ++i) {
      y[i] = b_[i] + bg == 0.0 ? 0.0 : static_cast<double>(dist(rng, params_[static_cast<std::size_t>(i)]));
    }
    return y;
  }

 private:
  NoiseModel model_;
  Vector b_;
  std::vector<std::poisson_distribution<long long>::param_type> params_;
};

/// Draws y given the noiseless image b.
[[nodiscard]] inline Vector sample(const NoiseModel& model, const Vector& b, std::uint64_t seed) {
  return Sampler(model, b)(seed);
}

/// Log-likelihood value. `impossible` is set (with value = -inf) when a
/// Poisson pixel has zero rate but a positive count.
struct LogLikelihood {
  double value = 0.0;
  bool impossible = false;
};

namespace detail {

inline void check_dims(const SystemMatrix& h, const Vector& v, const Vector& y, const char* op) {
  if (v.size() != h.cols() || y.size() != h.rows()) {
    throw DimensionError(std::string(op) + ": expected object length " + std::to_string(h.cols()) +
                         " and measurement length " + std::to_string(h.rows()));
  }
}

inline void check_counts(const Vector& y, const char* op) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0) || y[i] != std::floor(y[i])) {
      throw InvalidSpecError(std::string(op) + ": Poisson measurement must hold non-negative integers (pixel " +
                             std::to_string(i) + ")");
    }
  }
}

/// Rate r = Hv + background.
inline Vector poisson_rate(const SystemMatrix& h, const Vector& v, double background) {
  Vector rate = forward(h, v);
  rate.array() += background;
  return rate;
}

/// Measurement-space weights w with score = H^T w. `mean` is Hv for the
/// Gaussian model and the rate Hv + background for the Poisson model.
inline Vector score_weights(const NoiseModel& model, const Vector& mean, const Vector& y) {
  if (const auto* g = std::get_if<GaussianNoise>(&model)) return (y - mean) / g->sigma2;
  Vector w(y.size());
  for (Eigen::Index l = 0; l < y.size(); ++l) {
    if (y[l] == 0.0) {
      w[l] = -1.0;
    } else if (mean[l] <= 0.0) {
      throw SingularRateError(static_cast<std::size_t>(l), "score: zero Poisson rate with a positive count");
    } else {
      w[l] = y[l] / mean[l] - 1.0;
    }
  }
  return w;
}

/// Hv for the Gaussian model, Hv + background for the Poisson model.
inline Vector model_mean(const NoiseModel& model, const SystemMatrix& h, const Vector& v) {
  if (const auto* p = std::get_if<PoissonNoise>(&model)) return poisson_rate(h, v, p->background);
  return forward(h, v);
}

}  // namespace detail

[[nodiscard]] inline LogLikelihood log_likelihood(const NoiseModel& model, const SystemMatrix& h, const Vector& v,
                                                  const Vector& y) {
  validate(model);
  detail::check_dims(h, v, y, "log_likelihood");
  if (const auto* g = std::get_if<GaussianNoise>(&model)) {
    const Vector r = y - forward(h, v);
    const double k = static_cast<double>(y.size());
    return {-0.5 * r.squaredNorm() / g->sigma2 - 0.5 * k * std::log(2.0 * std::numbers::pi * g->sigma2), false};
  }
  detail::check_counts(y, "log_likelihood");
  const Vector rate = detail::poisson_rate(h, v, std::get<PoissonNoise>(model).background);
  double total = 0.0;
  for (Eigen::Index l = 0; l < y.size(); ++l) {
    if (rate[l] <= 0.0) {
      if (y[l] > 0.0) return {-std::numeric_limits<double>::infinity(), true};
      continue;  // 0 ln 0 - 0 - ln 0! = 0
    }
    total += y[l] * std::log(rate[l]) - rate[l] - std::lgamma(y[l] + 1.0);
  }
  return {total, false};
}

[[nodiscard]] inline Vector score(const NoiseModel& model, const SystemMatrix& h, const Vector& v, const Vector& y) {
  validate(model);
  detail::check_dims(h, v, y, "score");
  return adjoint(h, detail::score_weights(model, detail::model_mean(model, h, v), y));
}

/// d x d Hessian of the log-likelihood in v. Built as a symmetric rank-k
/// update, so the result is exactly symmetric.
[[nodiscard]] inline Matrix hessian_log_likelihood(const NoiseModel& model, const SystemMatrix& h, const Vector& v,
                                                   const Vector& y) {
  validate(model);
  detail::check_dims(h, v, y, "hessian_log_likelihood");
  if (const auto* g = std::get_if<GaussianNoise>(&model)) {
    return weighted_gram(h.entries(), Vector(), -1.0 / g->sigma2);
  }
  const Vector rate = detail::poisson_rate(h, v, std::get<PoissonNoise>(model).background);
  Vector root(y.size());
  for (Eigen::Index l = 0; l < y.size(); ++l) {
    if (y[l] == 0.0) {
      root[l] = 0.0;
    } else if (rate[l] <= 0.0) {
      throw SingularRateError(static_cast<std::size_t>(l), "hessian: zero Poisson rate with a positive count");
    } else {
      root[l] = std::sqrt(y[l]) / rate[l];
    }
  }
  return weighted_gram(h.entries(), root, -1.0);
}

}  // namespace lensless
