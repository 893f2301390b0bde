#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "lensless/config.hpp"
#include "lensless/io.hpp"
#include "lensless/pipeline.hpp"
#include "lensless/psf.hpp"

using namespace lensless;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lensless_io_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Io, DoubleRoundTripIsExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<double>(i % 40 - 20));
    EXPECT_EQ(io::parse_double(io::format_double(x)), x);
  }
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_THROW((void)io::parse_double("1.5x"), IoError);
}

TEST(Io, CsvRoundTripIsBitExact) {
  const fs::path dir = scratch("csv");
  for (const auto& spec : standard_encoders({32, 32}, 42)) {
    const ImageGrid psf = generate_psf(spec);
    io::write_csv(dir / (psf_label(spec) + ".csv"), psf);
    EXPECT_TRUE(io::read_csv(dir / (psf_label(spec) + ".csv")) == psf) << psf_label(spec);
  }
  fs::remove_all(dir);
}

TEST(Io, CsvLayout) {
  const std::string text = io::grid_csv(ImageGrid::from_rows({{1, 2, 3}, {4, 5, 6}}).values(), {3, 2});
  EXPECT_EQ(text, "# grid width=3 height=2\n1,2,3\n4,5,6\n");
  EXPECT_THROW((void)io::parse_grid_csv("1,2\n"), IoError);
  EXPECT_THROW((void)io::parse_grid_csv("# grid width=2 height=2\n1,2\n3\n"), IoError);
  EXPECT_THROW((void)io::parse_grid_csv("# grid width=2 height=1\n1,-2\n"), IoError);
  EXPECT_THROW((void)io::read_csv("/nonexistent/dir/x.csv"), IoError);
}

TEST(Io, CrossSectionLayout) {
  EXPECT_EQ(io::cross_section_csv({3.0, 4.5}, 1), "# cross-section row=1\ncolumn,value\n0,3\n1,4.5\n");
}

TEST(Io, Pgm16Format) {
  const ImageGrid g = ImageGrid::from_rows({{0, 1}, {2, 4}});
  const io::Pgm pgm = io::encode_pgm16(g.values(), g.shape());
  const std::string header = "P5\n2 2\n65535\n";
  ASSERT_EQ(pgm.bytes.size(), header.size() + 8);
  EXPECT_EQ(pgm.bytes.substr(0, header.size()), header);
  EXPECT_DOUBLE_EQ(pgm.scale, 65535.0 / 4.0);
  auto sample = [&](int i) {
    const auto hi = static_cast<unsigned char>(pgm.bytes[header.size() + 2 * i]);
    const auto lo = static_cast<unsigned char>(pgm.bytes[header.size() + 2 * i + 1]);
    return hi * 256 + lo;
  };
  EXPECT_EQ(sample(0), 0);
  EXPECT_EQ(sample(1), 16384);  // round(65535 / 4)
  EXPECT_EQ(sample(2), 32768);
  EXPECT_EQ(sample(3), 65535);
  EXPECT_EQ(io::encode_pgm16(ImageGrid(Shape{2, 2}).values(), {2, 2}).scale, 0.0);
}

TEST(Io, Sha256KnownVectors) {
  EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(io::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Config, ParsesKeyValueLines) {
  const ConfigMap m = parse_config_text("# comment\nnoise = poisson  # trailing\n\nbackground=0.01\nseed = 7\n");
  EXPECT_EQ(m.at("noise"), "poisson");
  EXPECT_EQ(m.at("background"), "0.01");
  const ExperimentConfig c = make_config(m);
  ASSERT_TRUE(std::holds_alternative<PoissonNoise>(c.noise));
  EXPECT_EQ(std::get<PoissonNoise>(c.noise).background, 0.01);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.psf.seed, substream_seed(7, "psf"));
  EXPECT_EQ(c.object.seed, substream_seed(7, "object"));
  EXPECT_NE(c.psf.seed, c.object.seed);
}

TEST(Config, Defaults) {
  const ExperimentConfig c = make_config({});
  ASSERT_TRUE(std::holds_alternative<GaussianNoise>(c.noise));
  EXPECT_EQ(std::get<GaussianNoise>(c.noise).sigma2, 1.0);
  EXPECT_EQ(c.epsilon.relative, 1e-9);
  EXPECT_EQ(c.n_samples, 200000u);
  EXPECT_EQ(c.n_trials, 10000u);
  EXPECT_EQ(c.object.size.width, 32u);
  EXPECT_EQ(psf_label(c.psf), "lens1");
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW((void)parse_config_text("bogus = 1\n"), ConfigError);
  EXPECT_THROW((void)parse_config_text("noise poisson\n"), ConfigError);
  EXPECT_THROW((void)make_config({{"noise", "laplace"}}), ConfigError);
  EXPECT_THROW((void)make_config({{"sigma2", "abc"}}), ConfigError);
  EXPECT_THROW((void)make_config({{"sigma2", "-1"}}), ConfigError);
  EXPECT_THROW((void)make_config({{"seed", "-3"}}), ConfigError);
  EXPECT_THROW((void)make_config({{"epsilon-rel", "-1e-9"}}), ConfigError);
  EXPECT_THROW((void)make_config({{"psf", "lenslets"}, {"psf-n", "0"}}), ConfigError);
  EXPECT_THROW((void)make_config({{"object", "sparse"}, {"object-n-beads", "5000"}}), ConfigError);
}

TEST(Manifest, ListsEveryFileWithChecksum) {
  const fs::path dir = scratch("manifest");
  ExperimentConfig c = make_config({{"psf", "lenslets"}, {"psf-n", "2"}, {"psf-size", "8"}, {"object-size", "8"}});
  const CaseResult r = run_crb(c);
  OutputWriter out(dir);
  write_case_files(out, "", r);
  write_manifest(out, "crb", c, Json::object());
  EXPECT_TRUE(check_manifest(dir).empty());

  io::write_text(dir / "stray.txt", "x");
  EXPECT_EQ(check_manifest(dir), std::vector<std::string>{"unlisted stray.txt"});
  fs::remove(dir / "stray.txt");
  io::write_text(dir / "crb.csv", "tampered");
  EXPECT_EQ(check_manifest(dir), std::vector<std::string>{"checksum mismatch crb.csv"});
  fs::remove_all(dir);
}
