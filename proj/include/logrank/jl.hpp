#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "logrank/lvm.hpp"
#include "logrank/matrix.hpp"
#include "logrank/piecewise.hpp"
#include "logrank/taylor.hpp"

namespace logrank {

// ⌈8 ln(n_points + 1) / ε_JL²⌉ (natural log). ArgumentError unless 0 < ε_JL < 1.
std::uint64_t jl_target_dim(std::uint64_t n_points, double eps_jl);

// Dense Gaussian map ℝ^D → ℝ^r with i.i.d. N(0, 1/r) entries drawn from the
// counter-based stream (seed, JlMap, row, column).
struct JlMap {
  DenseMatrix q;  // r x D
  double target_eps_jl = 0.0;
  std::uint64_t seed = 0;

  std::size_t target_dim() const noexcept { return q.rows(); }
  std::size_t input_dim() const noexcept { return q.cols(); }
};

JlMap sample_jl_map(std::size_t input_dim, std::size_t r, std::uint64_t seed, double eps_jl = 0.0);

struct InnerProductReport {
  bool pass = true;
  double worst_ratio = 0.0;  // max |x_iᵀx_j − (Qx_i)ᵀ(Qx_j)| / (ε(‖x_i‖² + ‖x_j‖² − x_iᵀx_j))
  std::size_t worst_i = 0;
  std::size_t worst_j = 0;
  std::size_t pairs = 0;
};

// Points are the rows of `points`. Checks every pair i ≤ j.
InnerProductReport verify_inner_product_preservation(const JlMap& map, const DenseMatrix& points, double eps_jl);

enum class SketchKind { Gaussian, Identity };
std::string to_string(SketchKind k);

struct CompressOptions {
  int max_retries = 20;
  // Project to this many dimensions instead of the theoretical r.
  std::optional<std::size_t> sketch_dim;
};

struct CompressedApprox {
  DenseMatrix left;   // m x rank
  DenseMatrix right;  // rank x n
  std::size_t rank = 0;
  // Theoretical r; saturates at 2^64 − 1, log_rank_budget is exact.
  std::uint64_t rank_budget = 0;
  double log_rank_budget = 0.0;
  double epsilon = 0.0;
  double reference_norm = 0.0;  // ‖X‖₂ (theorem0 sizing) or ‖f‖
  double achieved_max_error = 0.0;
  // max |u_iᵀv_j − (Qu_i)ᵀ(Qv_j)| for the returned map (0 for the identity).
  double jl_error = 0.0;
  double input_error = 0.0;  // error of the uncompressed factors
  std::uint64_t seed = 0;    // seed of the returned map
  int retries_used = 0;
  bool nontrivial = false;   // rank < min(m, n) and a real projection was used
  SketchKind sketch = SketchKind::Gaussian;
};

// SVD + JL: X = ŨṼᵀ with Ũ = U√Σ, Ṽ = V√Σ, ε_JL = ε/3, r = ⌈72 ln(m+n+1)/ε²⌉;
// resamples until ‖X − Y‖_max ≤ ε‖X‖₂.
CompressedApprox theorem0_compress(const DenseMatrix& x, double epsilon, std::uint64_t seed,
                                   const CompressOptions& options = {});

// JL stage on a Taylor factorization made with error_bound ≤ (ε/2)‖f‖;
// r = ⌈8 ln(m+n+1)(1 + 2(C_u + C_v + 1)/ε)²⌉.
CompressedApprox theorem2_compress(const TaylorFactorization& fact, const DenseMatrix& reference, double epsilon,
                                   std::uint64_t seed, const CompressOptions& options = {});

// Samples latents, factorizes at ε/2 and compresses.
struct PipelineResult {
  LatentSample sample;
  DenseMatrix reference;
  TaylorFactorization taylor;
  CompressedApprox approx;
};
PipelineResult theorem2_pipeline(const LvmSpec& spec, std::size_t m, std::size_t n, double epsilon,
                                 std::uint64_t seed, const CompressOptions& options = {});

// Block vectors of a piecewise factorization (made at ε/2), with C_u, C_v
// replaced by the overlap maxima.
CompressedApprox theorem3_compress(const PiecewiseFactorization& pfact, const DenseMatrix& reference,
                                   double epsilon, std::uint64_t seed, const CompressOptions& options = {});

struct PiecewisePipelineResult {
  LatentSample sample;
  DenseMatrix reference;
  PiecewiseFactorization taylor;
  CompressedApprox approx;
};
PiecewisePipelineResult theorem3_pipeline(const PiecewiseLvmSpec& spec, std::size_t m, std::size_t n,
                                          double epsilon, std::uint64_t seed, const CompressOptions& options = {});

// Symmetric model X_ij = f(α_i, α_j): β_j := α_j, sized with ln(2n+1).
struct SymmetricResult {
  DenseMatrix reference;
  TaylorFactorization taylor;
  CompressedApprox approx;
};
SymmetricResult theorem4_compress(const LvmSpec& spec, const DenseMatrix& alphas, double epsilon,
                                  std::uint64_t seed, const CompressOptions& options = {});

// <prefix>.left.epsr, <prefix>.right.epsr and <prefix>.meta.
void save_compressed(const CompressedApprox& approx, const std::filesystem::path& prefix);
CompressedApprox load_compressed(const std::filesystem::path& prefix);

}  // namespace logrank
