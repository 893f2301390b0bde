#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "instance.hpp"
#include "lensless/checks.hpp"
#include "lensless/noise.hpp"

using namespace lensless;

namespace {

SystemMatrix identity(Eigen::Index d) {
  return SystemMatrix(Matrix::Identity(d, d), {static_cast<std::size_t>(d), 1}, {1, 1}, "identity");
}

SystemMatrix random_system(Shape obj, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(4);
  for (auto& x : p) x = u(rng);
  return build_system_matrix(ImageGrid({2, 2}, p), obj, {2, 2});
}

}  // namespace

TEST(Noise, GaussianZeroVarianceLimit) {
  const Vector b = Vector::LinSpaced(20, 0.0, 19.0);
  const Vector y = sample(GaussianNoise{1e-18}, b, 3);
  EXPECT_LT((y - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Noise, PoissonZeroRateGivesZero) {
  const Vector y = sample(PoissonNoise{0.0}, Vector::Zero(50), 3);
  EXPECT_TRUE(y == Vector::Zero(50));
}

TEST(Noise, PoissonSampleMean) {
  Vector b = Vector::Zero(3);
  b[1] = 100.0;
  const Sampler draw(PoissonNoise{0.0}, b);
  double total = 0.0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const Vector y = draw(i);
    EXPECT_EQ(y[0], 0.0);
    total += y[1];
  }
  EXPECT_NEAR(total / 100000, 100.0, 0.5);
}

TEST(Noise, SamplesAreIntegersAndReproducible) {
  const Vector b = Vector::Constant(30, 7.5);
  const Vector y = sample(PoissonNoise{1e-3}, b, 11);
  for (double v : y) EXPECT_EQ(v, std::floor(v));
  EXPECT_TRUE(y == sample(PoissonNoise{1e-3}, b, 11));
  EXPECT_FALSE(y == sample(PoissonNoise{1e-3}, b, 12));
  EXPECT_TRUE(sample(GaussianNoise{2.0}, b, 5) == Sampler(GaussianNoise{2.0}, b)(5));
}

TEST(Noise, InvalidInputs) {
  EXPECT_THROW((void)sample(GaussianNoise{-1.0}, Vector::Zero(2), 1), InvalidSpecError);
  EXPECT_THROW((void)sample(PoissonNoise{-1.0}, Vector::Zero(2), 1), InvalidSpecError);
  EXPECT_THROW((void)sample(PoissonNoise{0.0}, Vector::Constant(2, -1.0), 1), InvalidSpecError);
  const SystemMatrix h = identity(2);
  EXPECT_THROW((void)log_likelihood(PoissonNoise{0.0}, h, Vector::Ones(2), Vector::Constant(2, 1.5)),
               InvalidSpecError);
  EXPECT_THROW((void)log_likelihood(PoissonNoise{0.0}, h, Vector::Ones(3), Vector::Ones(2)), DimensionError);
}

TEST(Noise, LogLikelihoodScalarCases) {
  const SystemMatrix h9 = identity(9);
  const Vector v = Vector::LinSpaced(9, 1.0, 9.0);
  EXPECT_NEAR(log_likelihood(GaussianNoise{1.0}, h9, v, v).value, -4.5 * std::log(2 * std::numbers::pi), 1e-12);

  const SystemMatrix h1 = identity(1);
  EXPECT_NEAR(log_likelihood(PoissonNoise{0.0}, h1, Vector::Constant(1, 1.0), Vector::Zero(1)).value, -1.0, 1e-15);
  EXPECT_NEAR(log_likelihood(PoissonNoise{0.0}, h1, Vector::Constant(1, 2.5), Vector::Constant(1, 3.0)).value,
              3 * std::log(2.5) - 2.5 - std::log(6.0), 1e-14);
  EXPECT_NEAR(3 * std::log(2.5) - 2.5 - std::log(6.0), -1.5428872736055896, 1e-15);
}

TEST(Noise, PoissonZeroRateWithCountIsImpossible) {
  const SystemMatrix h = identity(2);
  const LogLikelihood ll = log_likelihood(PoissonNoise{0.0}, h, Vector::Zero(2), Vector::Ones(2));
  EXPECT_TRUE(ll.impossible);
  EXPECT_TRUE(std::isinf(ll.value));
  EXPECT_THROW((void)score(PoissonNoise{0.0}, h, Vector::Zero(2), Vector::Ones(2)), SingularRateError);
  EXPECT_TRUE(std::isfinite(log_likelihood(PoissonNoise{1e-3}, h, Vector::Zero(2), Vector::Ones(2)).value));
}

TEST(Noise, FrozenReferenceValues) {
  // numpy/scipy on the shared instance, v = 0.9 * v0 + 1.
  const SystemMatrix h = fixture::small_system();
  const Vector v = 0.9 * fixture::small_object() + Vector::Ones(9);
  const Vector y = fixture::small_counts();

  EXPECT_NEAR(log_likelihood(PoissonNoise{0.5}, h, v, y).value, -98.27168176354141, 1e-10);
  const Vector sp = score(PoissonNoise{0.5}, h, v, y);
  const std::vector<double> sp_ref{0.5101692229300357, 0.525345130171325,  0.6086859337346979,
                                   0.3781376414140066, 0.44816295027562014, 0.46531556866204693,
                                   0.49847667496821396, 0.45291049484991613, 0.486702848921208};
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(sp[i], sp_ref[static_cast<std::size_t>(i)], 1e-12);

  EXPECT_NEAR(log_likelihood(GaussianNoise{2.0}, h, v, y).value, -169.41722394544723, 1e-10);
  const Vector sg = score(GaussianNoise{2.0}, h, v, y);
  const std::vector<double> sg_ref{6.0657499999999995, 6.969625000000001, 3.8231249999999997, 5.761875000000001,
                                   9.471250000000001,  6.581625,          6.090249999999999,  6.502,
                                   5.581125};
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(sg[i], sg_ref[static_cast<std::size_t>(i)], 1e-12);
}

TEST(Noise, ScoreTrivialCases) {
  const SystemMatrix h = fixture::small_system();
  const Vector v = fixture::small_object();
  EXPECT_LT(score(GaussianNoise{1.0}, h, v, forward(h, v)).norm(), 1e-12);
  const SystemMatrix h1 = identity(1);
  EXPECT_EQ(score(PoissonNoise{0.0}, h1, Vector::Constant(1, 4.0), Vector::Constant(1, 4.0))[0], 0.0);
}

TEST(Noise, HessianTrivialCases) {
  const Matrix hg = hessian_log_likelihood(GaussianNoise{2.0}, identity(3), Vector::Ones(3), Vector::Zero(3));
  EXPECT_TRUE(hg == -0.5 * Matrix::Identity(3, 3));
  const Matrix hp =
      hessian_log_likelihood(PoissonNoise{0.0}, identity(1), Vector::Constant(1, 4.0), Vector::Constant(1, 4.0));
  EXPECT_DOUBLE_EQ(hp(0, 0), -0.25);
}

TEST(Noise, ScoreMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SystemMatrix h = random_system({2, 2}, seed);  // 4-pixel instance
    const Vector v = (Vector(4) << 12.0, 30.0, 7.0, 21.0).finished();
    for (const NoiseModel& m : {NoiseModel{GaussianNoise{1.5}}, NoiseModel{PoissonNoise{1e-3}}}) {
      const Vector y = sample(m, forward(h, 1.3 * v), seed);
      const Vector g = score(m, h, v, y);
      const Vector fd = finite_difference_gradient([&](const Vector& x) { return log_likelihood(m, h, x, y).value; },
                                                   v, 1e-5);
      EXPECT_LT(relative_error(g, fd), 1e-5) << noise_label(m) << " seed " << seed;
    }
  }
}

TEST(Noise, HessianMatchesFiniteDifferences) {
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const SystemMatrix h = build_system_matrix(ImageGrid({2, 1}, {u(rng), u(rng)}), {3, 1}, {2, 1});  // 3 pixels
    const Vector v = (Vector(3) << 9.0, 25.0, 14.0).finished();
    for (const NoiseModel& m : {NoiseModel{GaussianNoise{0.7}}, NoiseModel{PoissonNoise{1e-3}}}) {
      const Vector y = sample(m, forward(h, 0.8 * v), seed);
      const Matrix hess = hessian_log_likelihood(m, h, v, y);
      const Matrix fd = finite_difference_jacobian([&](const Vector& x) { return score(m, h, x, y); }, v, 1e-5);
      EXPECT_LT(relative_frobenius_error(hess, fd), 1e-4) << noise_label(m) << " seed " << seed;
    }
  }
}

TEST(Noise, ScoreHasZeroMean) {
  const SystemMatrix h = random_system({3, 3}, 8);
  const Vector v = Vector::LinSpaced(9, 5.0, 45.0);
  for (const NoiseModel& m : {NoiseModel{GaussianNoise{2.0}}, NoiseModel{PoissonNoise{1e-3}}}) {
    const Sampler draw(m, forward(h, v));
    const int n = 100000;
    Vector sum = Vector::Zero(9), sum2 = Vector::Zero(9);
    for (int i = 0; i < n; ++i) {
      const Vector s = score(m, h, v, draw(static_cast<std::uint64_t>(i)));
      sum += s;
      sum2 += s.cwiseProduct(s);
    }
    const Vector mean = sum / n;
    const Vector se = ((sum2 / n - mean.cwiseProduct(mean)) / n).cwiseSqrt();
    for (int j = 0; j < 9; ++j) EXPECT_LT(std::abs(mean[j]), 4 * se[j]) << noise_label(m) << " pixel " << j;
  }
}

TEST(Noise, GaussianHessianIndependentOfY) {
  const SystemMatrix h = fixture::small_system();
  const Vector v = fixture::small_object();
  const Matrix a = hessian_log_likelihood(GaussianNoise{1.0}, h, v, Vector::Zero(36));
  const Matrix b = hessian_log_likelihood(GaussianNoise{1.0}, h, v, fixture::small_counts());
  EXPECT_TRUE(a == b);
}

TEST(Noise, HessiansAreNegativeSemidefinite) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const SystemMatrix h = random_system({3, 3}, seed);
    const Vector v = Vector::LinSpaced(9, 1.0, 30.0);
    for (const NoiseModel& m : {NoiseModel{GaussianNoise{1.0}}, NoiseModel{PoissonNoise{1e-3}}}) {
      const Vector y = sample(m, forward(h, v), seed).cwiseMax(0.0);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_log_likelihood(m, h, v, y));
      EXPECT_LE(eig.eigenvalues().maxCoeff(), 1e-10);
    }
  }
}

TEST(Noise, PoissonLikelihoodFiniteWithBackground) {
  const SystemMatrix h = fixture::small_system();
  const Vector zero = Vector::Zero(9);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Vector y = sample(PoissonNoise{2.0}, forward(h, fixture::small_object()), seed);
    EXPECT_TRUE(std::isfinite(log_likelihood(PoissonNoise{1e-3}, h, zero, y).value));
  }
  Vector big = Vector::Zero(36);
  big[0] = 1000.0;
  EXPECT_TRUE(std::isfinite(log_likelihood(PoissonNoise{1e-3}, h, fixture::small_object(), big).value));
}
