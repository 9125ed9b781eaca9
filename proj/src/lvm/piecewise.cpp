#include "logrank/piecewise.hpp"

#include <algorithm>
#include <sstream>

#include "logrank/errors.hpp"
#include "logrank/keyvalue.hpp"

namespace logrank {

namespace {

constexpr std::size_t kValidationSide = 100;  // 100 x 100 = 10^4 latent pairs

std::string point_string(std::span<const double> alpha, std::span<const double> beta) {
  std::ostringstream out;
  out << "(alpha=[";
  for (std::size_t k = 0; k < alpha.size(); ++k) out << (k ? "," : "") << format_double(alpha[k]);
  out << "], beta=[";
  for (std::size_t k = 0; k < beta.size(); ++k) out << (k ? "," : "") << format_double(beta[k]);
  out << "])";
  return out.str();
}

}  // namespace

bool Box::contains(std::span<const double> x) const noexcept {
  if (x.size() != axes.size()) return false;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (!axes[k].contains(x[k])) return false;
  }
  return true;
}

std::string Box::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (k) out += " x ";
    out += "[" + format_double(axes[k].lo) + "," + format_double(axes[k].hi) + (axes[k].closed_hi ? "]" : ")");
  }
  return out;
}

Box Box::cube(int dim, double radius) {
  // Widened by the same relative slack the ball check allows, so normalized
  // sphere latents a few ulps past R stay inside.
  const double r = radius * (1.0 + 1e-12);
  return Box{std::vector<Interval>(static_cast<std::size_t>(dim), Interval{-r, r, true})};
}

PiecewiseLvmSpec::PiecewiseLvmSpec(std::vector<Piece> pieces, std::uint64_t validation_seed)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw ArgumentError("piecewise model needs at least one piece");
  const LvmSpec& first = pieces_.front().spec;
  for (std::size_t l = 0; l < pieces_.size(); ++l) {
    const Piece& p = pieces_[l];
    const std::string tag = "piece " + std::to_string(l);
    if (p.spec.dim() != first.dim() || p.spec.radius() != first.radius() ||
        p.spec.distribution() != first.distribution()) {
      throw ArgumentError(tag + ": N, R and distribution must match piece 0");
    }
    const auto dim = static_cast<std::size_t>(first.dim());
    if (p.alpha_cell.axes.size() != dim || p.beta_cell.axes.size() != dim) {
      throw ArgumentError(tag + ": cells must have one interval per latent coordinate");
    }
    for (const auto* cell : {&p.alpha_cell, &p.beta_cell}) {
      for (const auto& iv : cell->axes) {
        if (!(iv.lo <= iv.hi) || (iv.lo == iv.hi && !iv.closed_hi)) {
          throw ArgumentError(tag + ": empty or inverted interval in " + cell->to_string());
        }
      }
    }
  }
  validate_partition(validation_seed);
}

void PiecewiseLvmSpec::validate_partition(std::uint64_t seed) const {
  const LatentSample sample = sample_latents(sampling_spec(), kValidationSide, kValidationSide, seed);
  for (std::size_t i = 0; i < kValidationSide; ++i) {
    for (std::size_t j = 0; j < kValidationSide; ++j) {
      const auto a = sample.alphas.row(i);
      const auto b = sample.betas.row(j);
      std::size_t claims = 0;
      for (const auto& p : pieces_) claims += p.alpha_cell.contains(a) && p.beta_cell.contains(b);
      if (claims != 1) {
        throw PartitionError(std::to_string(claims) + " pieces claim the point " + point_string(a, b));
      }
    }
  }
}

double PiecewiseLvmSpec::sup_norm() const {
  double s = 0.0;
  for (const auto& p : pieces_) s = std::max(s, p.spec.sup_norm());
  return s;
}

std::size_t PiecewiseLvmSpec::piece_of(std::span<const double> alpha, std::span<const double> beta) const {
  for (std::size_t l = 0; l < pieces_.size(); ++l) {
    if (pieces_[l].alpha_cell.contains(alpha) && pieces_[l].beta_cell.contains(beta)) return l;
  }
  throw PartitionError("no piece contains the point " + point_string(alpha, beta));
}

std::vector<bool> PiecewiseLvmSpec::alpha_membership(std::span<const double> alpha) const {
  std::vector<bool> out(pieces_.size());
  for (std::size_t l = 0; l < pieces_.size(); ++l) out[l] = pieces_[l].alpha_cell.contains(alpha);
  return out;
}

std::vector<bool> PiecewiseLvmSpec::beta_membership(std::span<const double> beta) const {
  std::vector<bool> out(pieces_.size());
  for (std::size_t l = 0; l < pieces_.size(); ++l) out[l] = pieces_[l].beta_cell.contains(beta);
  return out;
}

double PiecewiseLvmSpec::evaluate(std::span<const double> alpha, std::span<const double> beta) const {
  return pieces_[piece_of(alpha, beta)].spec.evaluate(alpha, beta);
}

DenseMatrix generate_piecewise_matrix(const PiecewiseLvmSpec& spec, const LatentSample& sample) {
  const auto& a = sample.alphas;
  const auto& b = sample.betas;
  if (a.empty() || b.empty() || a.cols() != static_cast<std::size_t>(spec.dim()) || b.cols() != a.cols()) {
    throw DimensionError("generate_piecewise_matrix: latent sample does not match N = " +
                         std::to_string(spec.dim()));
  }
  std::vector<double> data(a.rows() * b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) data[i * b.rows() + j] = spec.evaluate(a.row(i), b.row(j));
  return DenseMatrix::from_row_major(a.rows(), b.rows(), std::move(data));
}

}  // namespace logrank
