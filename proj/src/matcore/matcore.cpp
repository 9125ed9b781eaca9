#include "logrank/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "logrank/errors.hpp"

namespace logrank {

namespace {

void require_nonempty(const DenseMatrix& x, const char* op) {
  if (x.empty()) throw DimensionError(std::string(op) + ": empty matrix");
}

Eigen::MatrixXd to_col_major(const DenseMatrix& x) { return x.view(); }

// Residual of the running truncation, peeled one singular triplet at a time.
class ResidualScan {
 public:
  ResidualScan(const DenseMatrix& x, const SvdResult& s)
      : residual_(x.view()), s_(s), k_(s.rank_capacity()) {}

  std::size_t rank() const { return r_; }
  double mu() const {
    if (r_ >= k_) return 0.0;
    return residual_.cwiseAbs().maxCoeff();
  }
  void advance() {
    const auto u = s_.u.view();
    const auto vt = s_.vt.view();
    residual_.noalias() -= s_.singular_values[r_] * (u.col(static_cast<Eigen::Index>(r_)) *
                                                     vt.row(static_cast<Eigen::Index>(r_)));
    ++r_;
  }

 private:
  RowMajorMatrix residual_;
  const SvdResult& s_;
  std::size_t k_;
  std::size_t r_ = 0;
};

}  // namespace

double max_abs_norm(const DenseMatrix& x) {
  require_nonempty(x, "max_abs_norm");
  return x.view().cwiseAbs().maxCoeff();
}

std::vector<double> singular_values(const DenseMatrix& x) {
  require_nonempty(x, "singular_values");
  Eigen::BDCSVD<Eigen::MatrixXd> solver(to_col_major(x));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("singular_values: SVD did not converge on " + std::to_string(x.rows()) +
                         "x" + std::to_string(x.cols()) + " input");
  }
  const auto& sv = solver.singularValues();
  return {sv.data(), sv.data() + sv.size()};
}

double spectral_norm(const DenseMatrix& x) { return singular_values(x).front(); }

SvdResult svd(const DenseMatrix& x) {
  require_nonempty(x, "svd");
  Eigen::BDCSVD<Eigen::MatrixXd> solver(to_col_major(x), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("svd: divide-and-conquer SVD did not converge on " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " input");
  }
  SvdResult out;
  out.u = DenseMatrix::from_eigen(solver.matrixU());
  out.vt = DenseMatrix::from_eigen(solver.matrixV().transpose());
  const auto& sv = solver.singularValues();
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  return out;
}

DenseMatrix truncate_svd(const SvdResult& s, std::size_t r) {
  const std::size_t k = s.rank_capacity();
  if (r > k) {
    throw ArgumentError("truncate_svd: rank " + std::to_string(r) + " outside [0, " +
                        std::to_string(k) + "]");
  }
  const auto u = s.u.view();
  const auto vt = s.vt.view();
  if (r == 0) return DenseMatrix(s.u.rows(), s.vt.cols());
  const auto ri = static_cast<Eigen::Index>(r);
  Eigen::VectorXd sigma = Eigen::Map<const Eigen::VectorXd>(s.singular_values.data(), ri);
  RowMajorMatrix y = u.leftCols(ri) * sigma.asDiagonal() * vt.topRows(ri);
  return DenseMatrix::from_eigen(y);
}

std::vector<double> mu_curve(const DenseMatrix& x, const SvdResult& s, std::size_t r_max) {
  require_nonempty(x, "mu_curve");
  const std::size_t k = s.rank_capacity();
  if (r_max > k) {
    throw ArgumentError("mu_curve: rank " + std::to_string(r_max) + " outside [0, " +
                        std::to_string(k) + "]");
  }
  std::vector<double> curve;
  curve.reserve(r_max + 1);
  ResidualScan scan(x, s);
  curve.push_back(scan.mu());
  while (scan.rank() < r_max) {
    scan.advance();
    curve.push_back(scan.mu());
  }
  return curve;
}

double mu_r(const DenseMatrix& x, std::size_t r) {
  require_nonempty(x, "mu_r");
  const std::size_t k = std::min(x.rows(), x.cols());
  if (r > k) {
    throw ArgumentError("mu_r: rank " + std::to_string(r) + " outside [0, " + std::to_string(k) +
                        "]");
  }
  if (r == 0) return max_abs_norm(x);
  if (r == k) return 0.0;
  const SvdResult s = svd(x);
  return max_abs_difference(x, truncate_svd(s, r));
}

RankBoundResult rank_eps_upper_bound(const DenseMatrix& x, const SvdResult& s, double epsilon) {
  require_nonempty(x, "rank_eps_upper_bound");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ArgumentError("rank_eps_upper_bound: epsilon must be a positive finite number");
  }
  RankBoundResult out;
  out.epsilon = epsilon;
  ResidualScan scan(x, s);
  out.mu_curve.push_back(scan.mu());
  while (out.mu_curve.back() > epsilon) {
    scan.advance();
    out.mu_curve.push_back(scan.mu());
  }
  out.rank_upper_bound = scan.rank();
  return out;
}

RankBoundResult rank_eps_upper_bound(const DenseMatrix& x, double epsilon) {
  require_nonempty(x, "rank_eps_upper_bound");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ArgumentError("rank_eps_upper_bound: epsilon must be a positive finite number");
  }
  // μ_0 needs no factorization.
  if (max_abs_norm(x) <= epsilon) return {epsilon, 0, {max_abs_norm(x)}};
  return rank_eps_upper_bound(x, svd(x), epsilon);
}

std::size_t first_rank_at_or_below(std::span<const double> curve, double epsilon) {
  for (std::size_t r = 0; r < curve.size(); ++r)
    if (curve[r] <= epsilon) return r;
  return curve.size();
}

std::size_t numerical_rank(const DenseMatrix& x, double rel_tol) {
  const auto sv = singular_values(x);
  if (sv.front() == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(sv.begin(), sv.end(), [&](double s) { return s > rel_tol * sv.front(); }));
}

}  // namespace logrank
