#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "logrank/matrix.hpp"

namespace logrank::test {

// Fresh per-test scratch directory under the build tree's temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("logrank_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(LOGRANK_FIXTURE_DIR) / name;
}

inline DenseMatrix gaussian_matrix(std::size_t m, std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> data(m * n);
  for (double& v : data) v = nd(gen);
  return DenseMatrix::from_row_major(m, n, std::move(data));
}

}  // namespace logrank::test
