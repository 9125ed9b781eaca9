#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "logrank/lvm.hpp"
#include "logrank/matrix.hpp"

namespace logrank {

// [lo, hi) or [lo, hi] when closed_hi is set.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool closed_hi = false;

  bool contains(double x) const noexcept { return x >= lo && (x < hi || (closed_hi && x == hi)); }
};

// Axis-aligned box in ℝ^N; one interval per coordinate.
struct Box {
  std::vector<Interval> axes;

  bool contains(std::span<const double> x) const noexcept;
  std::string to_string() const;

  // [−R, R]^N (with a 1e-12 relative margin), closed on every axis.
  static Box cube(int dim, double radius);
};

struct Piece {
  LvmSpec spec;
  Box alpha_cell;
  Box beta_cell;
};

//
// Finitely many nice models glued over a partition of the latent product
// domain into cells A_l x B_l. All pieces share N, R and the latent law, so
// one LatentSample serves every piece.
//
class PiecewiseLvmSpec {
 public:
  // Validates shared N/R/distribution and checks on 10^4 random latent pairs
  // that exactly one cell claims each; throws PartitionError otherwise.
  explicit PiecewiseLvmSpec(std::vector<Piece> pieces, std::uint64_t validation_seed = 0x9a27);

  std::size_t size() const noexcept { return pieces_.size(); }
  const Piece& piece(std::size_t l) const { return pieces_.at(l); }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }

  // Spec used for sampling latents (the first piece; all pieces agree on N, R, law).
  const LvmSpec& sampling_spec() const noexcept { return pieces_.front().spec; }
  int dim() const noexcept { return sampling_spec().dim(); }

  // max_l ‖f_l‖.
  double sup_norm() const;

  // The unique l with (α, β) ∈ A_l x B_l. PartitionError naming the point when none.
  std::size_t piece_of(std::span<const double> alpha, std::span<const double> beta) const;

  // Per-piece membership of a single latent: alpha_membership(α)[l] is α ∈ A_l.
  std::vector<bool> alpha_membership(std::span<const double> alpha) const;
  std::vector<bool> beta_membership(std::span<const double> beta) const;

  double evaluate(std::span<const double> alpha, std::span<const double> beta) const;

 private:
  void validate_partition(std::uint64_t seed) const;

  std::vector<Piece> pieces_;
};

// X_ij = f_{l_ij}(α_i, β_j).
DenseMatrix generate_piecewise_matrix(const PiecewiseLvmSpec& spec, const LatentSample& sample);

}  // namespace logrank
