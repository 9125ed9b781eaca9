#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "logrank/matrix.hpp"

namespace logrank {

// EPSR binary layout:
//   offset 0   magic "EPSR" (0x45 0x50 0x53 0x52)
//   offset 4   version byte 0x01
//   offset 5   rows, u64 little-endian
//   offset 13  cols, u64 little-endian
//   offset 21  rows*cols binary64 little-endian values, row-major
inline constexpr std::uint8_t kEpsrVersion = 0x01;
inline constexpr std::size_t kEpsrHeaderSize = 21;

std::vector<std::uint8_t> encode_epsr(const DenseMatrix& x);
DenseMatrix decode_epsr(std::span<const std::uint8_t> bytes);

void write_matrix(const DenseMatrix& x, const std::filesystem::path& path);
DenseMatrix read_matrix(const std::filesystem::path& path);

// Export only: 17 significant digits, comma separated, one line per row.
std::string to_csv(const DenseMatrix& x);
void write_matrix_csv(const DenseMatrix& x, const std::filesystem::path& path);

}  // namespace logrank
