#pragma once

// File formats:
//   CSV  "# grid width=W height=H" header, then H rows of W comma-separated
//        values in shortest round-trip decimal form.
//   PGM  binary P5, 16-bit big-endian samples, linear scaling so the grid
//        maximum maps to 65535.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <openssl/evp.h>

#include "lensless/errors.hpp"
#include "lensless/image_grid.hpp"

namespace lensless::io {

namespace fs = std::filesystem;

/// Shortest decimal string that parses back to the same double.
[[nodiscard]] inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

[[nodiscard]] inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

[[nodiscard]] inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[nodiscard]] inline std::string grid_csv(std::span<const double> values, Shape shape) {
  std::string out = "# grid width=" + std::to_string(shape.width) + " height=" + std::to_string(shape.height) + "\n";
  for (std::size_t r = 0; r < shape.height; ++r) {
    for (std::size_t c = 0; c < shape.width; ++c) {
      if (c) out += ',';
      out += format_double(values[r * shape.width + c]);
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const fs::path& path, const ImageGrid& grid) { write_text(path, grid_csv(grid.values(), grid.shape())); }

[[nodiscard]] inline ImageGrid parse_grid_csv(const std::string& text, const std::string& origin = "csv") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError(origin + ": empty file");
  std::size_t width = 0, height = 0;
  if (std::sscanf(line.c_str(), "# grid width=%zu height=%zu", &width, &height) != 2) {
    throw IoError(origin + ": missing '# grid width=W height=H' header");
  }
  std::vector<double> values;
  values.reserve(width * height);
  for (std::size_t r = 0; r < height; ++r) {
    if (!std::getline(in, line)) throw IoError(origin + ": expected " + std::to_string(height) + " rows");
    std::size_t start = 0, count = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      values.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (count != width) throw IoError(origin + ": row " + std::to_string(r) + " has " + std::to_string(count) + " values");
  }
  try {
    return ImageGrid({width, height}, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw IoError(origin + ": " + e.what());
  }
}

[[nodiscard]] inline ImageGrid read_csv(const fs::path& path) { return parse_grid_csv(read_text(path), path.string()); }

/// Cross-section table: "column,value" per entry.
[[nodiscard]] inline std::string cross_section_csv(const std::vector<double>& values, std::size_t row) {
  std::string out = "# cross-section row=" + std::to_string(row) + "\ncolumn,value\n";
  for (std::size_t c = 0; c < values.size(); ++c) out += std::to_string(c) + "," + format_double(values[c]) + "\n";
  return out;
}

/// Encodes a grid as 16-bit P5. Returns the bytes and the scale factor
/// (sample = round(value * scale)); scale is 0 for an all-zero grid.
struct Pgm {
  std::string bytes;
  double scale = 0.0;
};

[[nodiscard]] inline Pgm encode_pgm16(std::span<const double> values, Shape shape) {
  double max = 0.0;
  for (double v : values) max = std::max(max, v);
  Pgm pgm;
  pgm.scale = max > 0.0 ? 65535.0 / max : 0.0;
  pgm.bytes = "P5\n" + std::to_string(shape.width) + " " + std::to_string(shape.height) + "\n65535\n";
  pgm.bytes.reserve(pgm.bytes.size() + 2 * values.size());
  for (double v : values) {
    const auto s = static_cast<std::uint16_t>(std::lround(std::clamp(v * pgm.scale, 0.0, 65535.0)));
    pgm.bytes += static_cast<char>(s >> 8);
    pgm.bytes += static_cast<char>(s & 0xff);
  }
  return pgm;
}

inline double write_pgm16(const fs::path& path, const ImageGrid& grid) {
  Pgm pgm = encode_pgm16(grid.values(), grid.shape());
  write_text(path, pgm.bytes);
  return pgm.scale;
}

/// Hex SHA-256 of a byte string.
[[nodiscard]] inline std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

[[nodiscard]] inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

}  // namespace lensless::io
