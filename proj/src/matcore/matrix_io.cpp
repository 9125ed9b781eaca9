#include "logrank/matrix_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "logrank/errors.hpp"

namespace logrank {

namespace {

constexpr std::uint8_t kMagic[4] = {0x45, 0x50, 0x53, 0x52};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes[offset + b]) << (8 * b);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_epsr(const DenseMatrix& x) {
  if (x.empty()) throw DimensionError("encode_epsr: empty matrix");
  std::vector<std::uint8_t> out;
  out.reserve(kEpsrHeaderSize + 8 * x.size());
  for (std::uint8_t b : kMagic) out.push_back(b);
  out.push_back(kEpsrVersion);
  put_u64(out, x.rows());
  put_u64(out, x.cols());
  for (double v : x.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

DenseMatrix decode_epsr(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("EPSR: truncated magic", bytes.size());
  for (std::size_t i = 0; i < 4; ++i) {
    if (bytes[i] != kMagic[i]) throw FormatError("EPSR: bad magic", i);
  }
  if (bytes.size() < 5) throw FormatError("EPSR: missing version byte", 4);
  if (bytes[4] != kEpsrVersion) {
    throw FormatError("EPSR: unsupported version " + std::to_string(bytes[4]), 4);
  }
  if (bytes.size() < kEpsrHeaderSize) throw FormatError("EPSR: truncated header", bytes.size());
  const std::uint64_t rows = get_u64(bytes, 5);
  const std::uint64_t cols = get_u64(bytes, 13);
  if (rows == 0) throw FormatError("EPSR: zero row count", 5);
  if (cols == 0) throw FormatError("EPSR: zero column count", 13);
  constexpr std::uint64_t kMaxEntries = (std::numeric_limits<std::uint64_t>::max() - 64) / 8;
  if (rows > kMaxEntries / cols) {
    throw FormatError("EPSR: dimensions " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " overflow",
                      5);
  }
  const std::uint64_t count = rows * cols;
  const std::uint64_t expected = kEpsrHeaderSize + 8 * count;
  if (bytes.size() < expected) {
    throw FormatError("EPSR: truncated payload, expected " + std::to_string(expected) +
                          " bytes, have " + std::to_string(bytes.size()),
                      bytes.size());
  }
  if (bytes.size() > expected) throw FormatError("EPSR: trailing bytes after payload", expected);
  std::vector<double> data(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::size_t offset = kEpsrHeaderSize + 8 * k;
    data[k] = std::bit_cast<double>(get_u64(bytes, offset));
    if (!std::isfinite(data[k])) throw FormatError("EPSR: non-finite value", offset);
  }
  return DenseMatrix::from_row_major(rows, cols, std::move(data));
}

void write_matrix(const DenseMatrix& x, const std::filesystem::path& path) {
  const auto bytes = encode_epsr(x);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_epsr(bytes);
}

std::string to_csv(const DenseMatrix& x) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
  return out.str();
}

void write_matrix_csv(const DenseMatrix& x, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << to_csv(x);
}

}  // namespace logrank
