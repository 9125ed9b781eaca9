#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace logrank {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

//
// Dense row-major real matrix. Every stored entry is finite; the only way to
// get entries in is through validating constructors, so a DenseMatrix that
// exists is a valid one. A default-constructed matrix is the 0x0 empty matrix.
//
class DenseMatrix {
 public:
  DenseMatrix() = default;

  // rows x cols zeros; both dimensions must be positive.
  DenseMatrix(std::size_t rows, std::size_t cols);

  static DenseMatrix from_row_major(std::size_t rows, std::size_t cols, std::vector<double> data);
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> values);

  template <typename Derived>
  static DenseMatrix from_eigen(const Eigen::MatrixBase<Derived>& m) {
    RowMajorMatrix tmp = m;
    std::vector<double> data(tmp.data(), tmp.data() + tmp.size());
    return from_row_major(static_cast<std::size_t>(tmp.rows()), static_cast<std::size_t>(tmp.cols()),
                          std::move(data));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const;

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> values() const noexcept { return data_; }

  Eigen::Map<const RowMajorMatrix> view() const {
    return {data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }

  DenseMatrix transpose() const;

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) = default;

 private:
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {}

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Elementwise and product helpers. All throw DimensionError on shape mismatch.
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);

// ‖a − b‖_max without materializing the difference.
double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b);

// ‖left·right − reference‖_max, computed one row block at a time.
double factored_max_error(const DenseMatrix& left, const DenseMatrix& right,
                          const DenseMatrix& reference);

}  // namespace logrank
