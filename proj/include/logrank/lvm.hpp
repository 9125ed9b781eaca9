#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logrank/matrix.hpp"

namespace logrank {

enum class Family { InnerProduct, Polynomial, RbfKernel, Custom };
enum class LatentDistribution { UniformBall, UniformSphere, UniformInterval };

std::string to_string(Family f);
std::string to_string(LatentDistribution d);

/// One term c · α^a · β^b of a polynomial latent function.
struct PolynomialTerm {
  double coefficient = 0.0;
  std::vector<int> alpha_exponents;  // length N
  std::vector<int> beta_exponents;   // length N
};

/// User-supplied latent function. value is required; taylor_coefficient
/// returns D^μ_β f(α, 0) / μ! and is required for Taylor factorization;
/// beta_derivative returns D^μ_β f(α, β) and is optional (finite differences
/// stand in for small N and order).
struct CustomFunction {
  std::function<double(std::span<const double>, std::span<const double>)> value;
  std::function<double(std::span<const double>, std::span<const int>)> taylor_coefficient;
  std::function<double(std::span<const double>, std::span<const double>, std::span<const int>)>
      beta_derivative;
  bool symmetric = false;
  std::optional<int> beta_degree;
};

//
// A nice latent variable model: f, the latent distribution on the radius-R
// ball in ℝ^N, niceness constants (C, M) with ‖D^μ_β f‖ ≤ C·M^|μ|·‖f‖, and the
// sup norm ‖f‖.
//
// Defaults per family:
//   InnerProduct  f = αᵀβ,              ‖f‖ = R²,            C = M = 1
//   RbfKernel     f = exp(−‖α − β‖²),   ‖f‖ = 1,             C = N(4R')^N, M = 4R', R' = max(R, 1/2)
//   Polynomial    f = Σ c α^a β^b,      ‖f‖ = Σ|c|R^deg,     C = 1, M = d/R (d = degree in β)
//
class LvmSpec {
 public:
  static LvmSpec inner_product(int dim, double radius,
                               LatentDistribution dist = LatentDistribution::UniformBall);
  static LvmSpec rbf(int dim, double radius, LatentDistribution dist = LatentDistribution::UniformBall);
  static LvmSpec polynomial(int dim, double radius, std::vector<PolynomialTerm> terms,
                            LatentDistribution dist = LatentDistribution::UniformBall);
  // Custom families must declare ‖f‖; it is checked against a sample grid.
  static LvmSpec custom(int dim, double radius, CustomFunction fn, double sup_norm, double c,
                        double m, LatentDistribution dist = LatentDistribution::UniformBall);

  // Copies with replaced declarations.
  LvmSpec with_constants(double c, double m) const;
  // Rejects a declared ‖f‖ smaller than the largest |f| seen on the sample grid.
  LvmSpec with_sup_norm(double sup_norm) const;
  LvmSpec with_distribution(LatentDistribution dist) const;

  Family family() const noexcept { return family_; }
  int dim() const noexcept { return dim_; }
  double radius() const noexcept { return radius_; }
  // C may be astronomically large (RBF: N(4R)^N), so it is stored as log C.
  double c() const noexcept { return std::exp(log_c_); }
  double log_c() const noexcept { return log_c_; }
  double m() const noexcept { return m_; }
  double sup_norm() const noexcept { return sup_norm_; }
  LatentDistribution distribution() const noexcept { return distribution_; }
  const std::vector<PolynomialTerm>& terms() const noexcept { return terms_; }
  const CustomFunction* custom_function() const noexcept { return custom_.get(); }

  bool symmetric_function() const;
  // Total degree in β when f is a polynomial in β, else nullopt.
  std::optional<int> beta_degree() const;

  // f(α, β). Throws DomainError if either latent lies outside the ball.
  double evaluate(std::span<const double> alpha, std::span<const double> beta) const;
  double evaluate_unchecked(std::span<const double> alpha, std::span<const double> beta) const;

  // D^μ_β f(α, β). Closed form for the built-in families; the custom family
  // uses its callback or central finite differences (N ≤ 3, |μ| ≤ 6).
  double beta_derivative(std::span<const double> alpha, std::span<const double> beta,
                         std::span<const int> mu) const;

  // D^μ_β f(α, 0) / μ!.
  double taylor_coefficient(std::span<const double> alpha, std::span<const int> mu) const;

  bool in_ball(std::span<const double> x) const;
  void require_in_ball(std::span<const double> x, const char* what) const;

  // Stable textual identity (used for the metadata spec hash).
  std::string describe() const;

 private:
  LvmSpec() = default;
  void validate() const;
  double observed_sup_on_grid() const;

  Family family_ = Family::InnerProduct;
  int dim_ = 1;
  double radius_ = 1.0;
  double log_c_ = 0.0;
  double m_ = 1.0;
  double sup_norm_ = 1.0;
  LatentDistribution distribution_ = LatentDistribution::UniformBall;
  std::vector<PolynomialTerm> terms_;
  std::shared_ptr<const CustomFunction> custom_;
};

/// Latent vectors as rows: alphas is m x N, betas is n x N.
struct LatentSample {
  DenseMatrix alphas;
  DenseMatrix betas;
  std::uint64_t seed = 0;
};

// Draws m alphas and n betas. Coordinates come from the counter-based RNG
// keyed by (seed, role, index, coordinate).
LatentSample sample_latents(const LvmSpec& spec, std::size_t m, std::size_t n, std::uint64_t seed);

// The alpha half of sample_latents(spec, n, ·, seed); used for symmetric models.
DenseMatrix sample_alphas(const LvmSpec& spec, std::size_t n, std::uint64_t seed);

double evaluate_entry(const LvmSpec& spec, std::span<const double> alpha, std::span<const double> beta);

DenseMatrix generate_matrix(const LvmSpec& spec, const LatentSample& sample);

// X_ij = f(α_i, α_j). For symmetric f the upper triangle is computed and mirrored,
// so the result is exactly symmetric.
DenseMatrix generate_symmetric_matrix(const LvmSpec& spec, const DenseMatrix& alphas);

struct NicenessReport {
  bool pass = false;
  double worst_ratio = 0.0;  // max |D^μ f| / (C M^|μ| ‖f‖)
  std::vector<double> worst_alpha;
  std::vector<double> worst_beta;
  std::vector<int> worst_mu;
  std::size_t evaluations = 0;
};

// Checks the derivative bound on a tensor grid (grid_points per axis over
// [−R, R]^N, restricted to the ball) for every multi-index with |μ| ≤ max_order.
NicenessReport verify_niceness(const LvmSpec& spec, int max_order, int grid_points);

}  // namespace logrank
