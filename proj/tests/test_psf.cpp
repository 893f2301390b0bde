#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lensless/parallel.hpp"
#include "lensless/psf.hpp"

using namespace lensless;

namespace {

double occupancy(const ImageGrid& g) {
  const double cut = 0.1 * g.max();
  std::size_t n = 0;
  for (double v : g.values()) n += v > cut;
  return static_cast<double>(n) / static_cast<double>(g.size());
}

std::size_t strong_local_maxima(const ImageGrid& g) {
  const double half = 0.5 * g.max();
  std::size_t n = 0;
  for (std::size_t r = 0; r < g.height(); ++r) {
    for (std::size_t c = 0; c < g.width(); ++c) {
      const double v = g(r, c);
      if (v <= half) continue;
      bool peak = true;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
          if ((dr || dc) && rr >= 0 && cc >= 0 && rr < static_cast<long>(g.height()) &&
              cc < static_cast<long>(g.width()) && g(rr, cc) >= v)
            peak = false;
        }
      }
      n += peak;
    }
  }
  return n;
}

}  // namespace

TEST(Psf, SingleLensletIsCentredSpot) {
  for (std::uint64_t seed : {1u, 99u}) {
    const ImageGrid p = generate_psf({Lenslets{1}, {32, 32}, seed});
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_EQ(p.max(), p(16, 16));
    // sigma = 0.75: neighbour / centre = exp(-1 / (2 * 0.5625))
    EXPECT_NEAR(p(16, 17) / p(16, 16), std::exp(-1.0 / 1.125), 1e-12);
  }
}

TEST(Psf, TwoLensletsAtQuarterAndThreeQuarterWidth) {
  const ImageGrid p = generate_psf({Lenslets{2}, {32, 32}, 1});
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  EXPECT_NEAR(p(16, 8), p.max(), 1e-15);
  EXPECT_NEAR(p(16, 24), p.max(), 1e-15);
  EXPECT_EQ(strong_local_maxima(p), 2u);
}

TEST(Psf, LensletCountEqualsLocalMaxima) {
  for (std::size_t n = 1; n <= 9; ++n) {
    const ImageGrid p = generate_psf({Lenslets{n}, {32, 32}, 1});
    EXPECT_EQ(strong_local_maxima(p), n) << "lenslets " << n;
  }
}

TEST(Psf, EveryKindSumsToOne) {
  for (const auto& spec : standard_encoders({32, 32}, 42)) {
    EXPECT_NEAR(generate_psf(spec).sum(), 1.0, 1e-12) << psf_label(spec);
  }
  EXPECT_NEAR(generate_psf({Rml{}, {16, 24}, 3}).sum(), 1.0, 1e-12);
}

TEST(Psf, DiffuserIsHighlyMultiplexed) {
  const ImageGrid p = generate_psf({Diffuser{3.0, 2.0}, {32, 32}, 42});
  EXPECT_GE(occupancy(p), 0.30);
}

TEST(Psf, MultiplexingIndexAnalyticCases) {
  std::vector<double> delta(1024, 0.0);
  delta[0] = 1.0;
  EXPECT_DOUBLE_EQ(multiplexing_index(delta), 1.0 / 1024);
  EXPECT_DOUBLE_EQ(multiplexing_index(std::vector<double>(1024, 1.0 / 1024)), 1.0);
  // numpy: s**2 / (9 * sum(p**2)) for this grid
  const std::vector<double> p{0.1, 0.2, 0.05, 0.3, 1.0, 0.25, 0.05, 0.15, 0.4};
  EXPECT_NEAR(multiplexing_index(p), 0.49960031974420455, 1e-15);
}

TEST(Psf, MultiplexingIndexIsScaleInvariant) {
  const std::vector<double> p{0.1, 0.2, 0.05, 0.3, 1.0, 0.25, 0.05, 0.15, 0.4};
  std::vector<double> q = p;
  for (double& x : q) x *= 37.5;
  EXPECT_NEAR(multiplexing_index(q), multiplexing_index(p), 1e-15);
  EXPECT_THROW((void)multiplexing_index(std::vector<double>(4, 0.0)), InvalidSpecError);
}

TEST(Psf, MultiplexingOrdering) {
  const double l1 = multiplexing_index(generate_psf({Lenslets{1}, {32, 32}, 42}));
  const double l5 = multiplexing_index(generate_psf({Lenslets{5}, {32, 32}, 42}));
  const double d = multiplexing_index(generate_psf({Diffuser{}, {32, 32}, 42}));
  EXPECT_LT(l1, l5);
  EXPECT_LT(l5, d);
  double prev = 0.0;
  for (std::size_t n = 1; n <= 5; ++n) {
    const double m = multiplexing_index(generate_psf({Lenslets{n}, {32, 32}, 42}));
    EXPECT_GT(m, prev);
    prev = m;
  }
}

TEST(Psf, DeterministicAcrossRunsAndThreads) {
  for (const auto& spec : standard_encoders({32, 32}, 7)) {
    set_thread_count(1);
    const ImageGrid a = generate_psf(spec);
    set_thread_count(4);
    const ImageGrid b = generate_psf(spec);
    set_thread_count(0);
    EXPECT_TRUE(a == b) << psf_label(spec);
  }
  EXPECT_FALSE(generate_psf({Rml{}, {32, 32}, 1}) == generate_psf({Rml{}, {32, 32}, 2}));
  EXPECT_FALSE(generate_psf({Diffuser{}, {32, 32}, 1}) == generate_psf({Diffuser{}, {32, 32}, 2}));
}

TEST(Psf, RmlSpotsRespectSpacingAndPeakCount) {
  const ImageGrid p = generate_psf({Rml{}, {32, 32}, 42});
  const std::size_t peaks = strong_local_maxima(p);
  EXPECT_GE(peaks, 1u);
  EXPECT_LE(peaks, 15u);
}

TEST(Psf, RmlPlacementBudgetExhausted) {
  EXPECT_THROW((void)generate_psf({Rml{200, 0.6, 2.0}, {8, 8}, 1}), PlacementError);
}

TEST(Psf, ValidationErrors) {
  EXPECT_THROW((void)generate_psf({Lenslets{0}, {32, 32}, 1}), InvalidSpecError);
  EXPECT_THROW((void)generate_psf({Lenslets{2}, {4, 4}, 1}), InvalidSpecError);
  EXPECT_THROW((void)generate_psf({Rml{15, 2.0, 1.0}, {32, 32}, 1}), InvalidSpecError);
  EXPECT_THROW((void)generate_psf({Diffuser{0.5, 2.0}, {32, 32}, 1}), InvalidSpecError);
  EXPECT_NO_THROW((void)generate_psf({Lenslets{1}, {1, 1}, 1}));
}

TEST(Psf, StandardEncoderLabels) {
  std::vector<std::string> labels;
  for (const auto& s : standard_encoders({32, 32}, 1)) labels.push_back(psf_label(s));
  EXPECT_EQ(labels, (std::vector<std::string>{"lens1", "lens2", "lens3", "lens4", "lens5", "rml", "diffuser"}));
}
