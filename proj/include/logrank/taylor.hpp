#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logrank/lvm.hpp"
#include "logrank/matrix.hpp"
#include "logrank/piecewise.hpp"

namespace logrank {

// binomial(N + K, K); CapacityError if it does not fit in 64 bits.
std::uint64_t multi_index_count(int dim, int max_degree);

// All μ ∈ ℕ^N with |μ| ≤ K in graded lexicographic order:
// degree by degree, and within a degree descending in the first coordinate,
// e.g. (0,0) (1,0) (0,1) (2,0) (1,1) (0,2).
class MultiIndexSet {
 public:
  MultiIndexSet(int dim, int max_degree);

  int dim() const noexcept { return dim_; }
  int max_degree() const noexcept { return max_degree_; }
  std::size_t size() const noexcept { return count_; }
  std::span<const int> operator[](std::size_t i) const {
    return {flat_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  // log μ! for index i.
  double log_factorial(std::size_t i) const { return log_factorials_[i]; }
  int degree(std::size_t i) const { return degrees_[i]; }

 private:
  int dim_;
  int max_degree_;
  std::size_t count_;
  std::vector<int> flat_;
  std::vector<int> degrees_;
  std::vector<double> log_factorials_;
};

MultiIndexSet enumerate_multi_indices(int dim, int max_degree);

// K = max(1, ⌈max(2e·N·R·M, log2(C/ε))⌉).
int select_truncation_order(const LvmSpec& spec, double epsilon);

// Upper bound on a positive series, held as a logarithm because the values
// overflow a double for moderate N (log_value = −inf encodes 0).
struct SeriesBound {
  double log_value = 0.0;
  std::size_t terms = 0;
  bool converged = false;

  double value() const { return std::exp(log_value); }
};

// Σ_s (N+s)^N R^{2s} / s!, truncated once the term ratio is ≤ 1/2, plus a
// geometric bound on the remaining tail.
SeriesBound cv_series(int dim, double radius);
// Σ_s (N+s)^N C² M^{2s} / ⌊s/N⌋!, summed in blocks of N terms with a
// geometric bound on the tail of block majorants.
SeriesBound cu_series(int dim, double log_c, double m);

// Plain-valued forms; NumericalError if the series did not settle.
double compute_cv(const LvmSpec& spec);
double compute_cu(const LvmSpec& spec);
SeriesBound cv_bound(const LvmSpec& spec);
SeriesBound cu_bound(const LvmSpec& spec);

struct TaylorOptions {
  // Use this K instead of select_truncation_order. The measured error is then
  // reported as the bound and no consistency check against ε‖f‖ is made.
  std::optional<int> order;
  // √scale split between u and v; defaults to ‖f‖ (1 when ‖f‖ = 0).
  std::optional<double> scale;
  // Reference matrix for the error measurement; generated from the model when null.
  const DenseMatrix* reference = nullptr;
};

struct TaylorFactorization {
  DenseMatrix u;  // m x Ñ, rows u_iᵀ
  DenseMatrix v;  // Ñ x n, columns v_j
  int k_selected = 0;
  // Order actually expanded: min(K, degree in β) for polynomials in β.
  int k_effective = 0;
  std::size_t n_tilde = 0;
  double epsilon = 0.0;
  double sup_norm = 0.0;
  double scale = 1.0;
  double error_bound = 0.0;  // certified ≥ achieved_error
  double achieved_error = 0.0;
  double log_c_u = 0.0;
  double log_c_v = 0.0;
  std::string spec_hash;

  double c_u() const { return std::exp(log_c_u); }
  double c_v() const { return std::exp(log_c_v); }
};

// Rows (u_i)_μ = D^μ f(α_i, 0) / (√μ! · √scale).
DenseMatrix taylor_left_factor(const LvmSpec& spec, const MultiIndexSet& set, const DenseMatrix& alphas,
                               double scale);
// Columns (v_j)_μ = √scale · β_j^μ / √μ!.
DenseMatrix taylor_right_factor(const MultiIndexSet& set, const DenseMatrix& betas, double scale);

TaylorFactorization taylor_factorize(const LvmSpec& spec, const LatentSample& sample, double epsilon,
                                     const TaylorOptions& options = {});

//
// Block vectors for a piecewise model: u_i carries u_i^(l) in block l when
// α_i ∈ A_l and zeros elsewhere, v_j likewise with β_j ∈ B_l. Since exactly
// one cell holds (α_i, β_j), u_iᵀv_j = (u_i^(l_ij))ᵀ v_j^(l_ij).
//
struct PiecewiseFactorization {
  std::vector<TaylorFactorization> pieces;
  std::vector<std::size_t> offsets;  // first column of block l; offsets.back() = total width
  DenseMatrix u;                     // m x Σ Ñ_l
  DenseMatrix v;                     // Σ Ñ_l x n
  double epsilon = 0.0;
  double sup_norm = 0.0;             // max_l ‖f_l‖, shared √ scale of every block
  double error_bound = 0.0;          // ε‖f‖
  double achieved_error = 0.0;       // against the glued matrix
  // Block products reproduced the per-piece products bit for bit.
  bool blocks_exact = false;
  // max over α of Σ_{l: α ∈ A_l} C_u^(l), and the β analogue, as logs.
  double log_c_u = 0.0;
  double log_c_v = 0.0;
};

PiecewiseFactorization piecewise_taylor_factorize(const PiecewiseLvmSpec& spec, const LatentSample& sample,
                                                  double epsilon, const DenseMatrix* reference = nullptr);

// 64-bit FNV-1a of LvmSpec::describe(), as 16 hex digits.
std::string spec_hash(const LvmSpec& spec);

// <prefix>.u.epsr, <prefix>.v.epsr and <prefix>.meta.
void save_taylor(const TaylorFactorization& fact, const std::filesystem::path& prefix);
TaylorFactorization load_taylor(const std::filesystem::path& prefix);

}  // namespace logrank
