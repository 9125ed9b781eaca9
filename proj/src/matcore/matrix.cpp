#include "logrank/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "logrank/errors.hpp"

namespace logrank {

namespace {

std::string shape(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape(a.rows(), a.cols()) +
                         " vs " + shape(b.rows(), b.cols()));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("DenseMatrix: dimensions must be positive, got " + shape(rows, cols));
  }
  if (rows > std::numeric_limits<std::size_t>::max() / cols) {
    throw DimensionError("DenseMatrix: " + shape(rows, cols) + " overflows size_t");
  }
  data_.assign(rows * cols, 0.0);
}

DenseMatrix DenseMatrix::from_row_major(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("DenseMatrix: dimensions must be positive, got " + shape(rows, cols));
  }
  if (rows > std::numeric_limits<std::size_t>::max() / cols || data.size() != rows * cols) {
    throw DimensionError("DenseMatrix: data length " + std::to_string(data.size()) +
                         " does not match " + shape(rows, cols));
  }
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!std::isfinite(data[k])) {
      throw ArgumentError("DenseMatrix: non-finite entry at (" + std::to_string(k / cols) + ", " +
                          std::to_string(k % cols) + ")");
    }
  }
  return DenseMatrix(rows, cols, std::move(data));
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw DimensionError("DenseMatrix::from_rows: empty input");
  }
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("DenseMatrix::from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return from_row_major(rows.size(), cols, std::move(data));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<double> data(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) data[i * n + i] = values[i];
  return from_row_major(n, n, std::move(data));
}

double DenseMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) {
    throw DimensionError("DenseMatrix::at: (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") outside " + shape(rows_, cols_));
  }
  return data_[i * cols_ + j];
}

DenseMatrix DenseMatrix::transpose() const {
  if (empty()) return {};
  std::vector<double> out(data_.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out[j * rows_ + i] = data_[i * cols_ + j];
  return DenseMatrix(cols_, rows_, std::move(out));
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.empty() || b.empty() || a.cols() != b.rows()) {
    throw DimensionError("multiply: inner dimensions " + shape(a.rows(), a.cols()) + " * " +
                         shape(b.rows(), b.cols()));
  }
  RowMajorMatrix prod = a.view() * b.view();
  return DenseMatrix::from_eigen(prod);
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  if (a.empty()) return {};
  RowMajorMatrix diff = a.view() - b.view();
  return DenseMatrix::from_eigen(diff);
}

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_difference");
  if (a.empty()) throw DimensionError("max_abs_difference: empty matrix");
  double worst = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) worst = std::max(worst, std::abs(av[k] - bv[k]));
  return worst;
}

double factored_max_error(const DenseMatrix& left, const DenseMatrix& right,
                          const DenseMatrix& reference) {
  if (left.cols() != right.rows() || left.rows() != reference.rows() ||
      right.cols() != reference.cols() || reference.empty()) {
    throw DimensionError("factored_max_error: " + shape(left.rows(), left.cols()) + " * " +
                         shape(right.rows(), right.cols()) + " vs " +
                         shape(reference.rows(), reference.cols()));
  }
  constexpr Eigen::Index kBlock = 256;
  const auto l = left.view();
  const auto r = right.view();
  const auto x = reference.view();
  double worst = 0.0;
  for (Eigen::Index i0 = 0; i0 < l.rows(); i0 += kBlock) {
    const Eigen::Index h = std::min(kBlock, l.rows() - i0);
    RowMajorMatrix block = l.middleRows(i0, h) * r;
    worst = std::max(worst, (block - x.middleRows(i0, h)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace logrank
