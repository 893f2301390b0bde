#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lensless {

/// Shape or length mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter or spec value outside its documented domain.
class InvalidSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A Poisson rate of zero where the likelihood needs to divide by it.
class SingularRateError : public std::runtime_error {
 public:
  SingularRateError(std::size_t pixel, const std::string& what)
      : std::runtime_error(what + " (measurement pixel " + std::to_string(pixel) + ")"),
        pixel_(pixel) {}

  [[nodiscard]] std::size_t pixel() const noexcept { return pixel_; }

 private:
  std::size_t pixel_;
};

/// Cholesky factorization failed even after diagonal loading.
class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(double epsilon, const std::string& what)
      : std::runtime_error(what + " (epsilon " + std::to_string(epsilon) + ")"), epsilon_(epsilon) {}

  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }

 private:
  double epsilon_;
};

/// Random spot placement ran out of retries.
class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too many failed trials in a Monte Carlo estimator run.
class TrialFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lensless
