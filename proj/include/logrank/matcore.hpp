#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "logrank/matrix.hpp"

namespace logrank {

/// Thin SVD x = u · diag(singular_values) · vt with k = min(m, n).
struct SvdResult {
  DenseMatrix u;                        // m x k, orthonormal columns
  std::vector<double> singular_values;  // length k, nonincreasing
  DenseMatrix vt;                       // k x n, orthonormal rows

  std::size_t rank_capacity() const noexcept { return singular_values.size(); }
};

/// Result of scanning μ_r = ‖X − [X]_r‖_max upward from r = 0.
///
/// rank_upper_bound is the smallest r with μ_r ≤ epsilon. It bounds the
/// ε-rank from above; it is not the ε-rank itself. mu_curve holds μ_0 … μ_rank_upper_bound
/// exactly as measured. Note μ_r is not monotone in r for general matrices
/// (a rank-r truncation may have a larger max-norm residual than a rank-(r−1) one).
struct RankBoundResult {
  double epsilon = 0.0;
  std::size_t rank_upper_bound = 0;
  std::vector<double> mu_curve;
};

double max_abs_norm(const DenseMatrix& x);
double spectral_norm(const DenseMatrix& x);

// Throws NumericalError if the underlying divide-and-conquer solver reports
// non-convergence.
SvdResult svd(const DenseMatrix& x);

// Singular values only, nonincreasing.
std::vector<double> singular_values(const DenseMatrix& x);

// U[:, :r] diag(σ[:r]) Vᵀ[:r, :]; r = 0 gives the zero matrix.
DenseMatrix truncate_svd(const SvdResult& s, std::size_t r);

double mu_r(const DenseMatrix& x, std::size_t r);

// μ_0, …, μ_{r_max} from one factorization. μ_k with k = min(m, n) is 0 by
// definition ([X]_k = X).
std::vector<double> mu_curve(const DenseMatrix& x, const SvdResult& s, std::size_t r_max);

RankBoundResult rank_eps_upper_bound(const DenseMatrix& x, double epsilon);

// Same scan as rank_eps_upper_bound, reusing a precomputed SVD and
// stopping as soon as μ_r ≤ epsilon.
RankBoundResult rank_eps_upper_bound(const DenseMatrix& x, const SvdResult& s, double epsilon);

// Smallest r with curve[r] ≤ epsilon, or curve.size() if none qualifies.
std::size_t first_rank_at_or_below(std::span<const double> curve, double epsilon);

// Number of singular values above rel_tol · σ₁.
std::size_t numerical_rank(const DenseMatrix& x, double rel_tol = 1e-10);

}  // namespace logrank
