#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "logrank/errors.hpp"
#include "logrank/keyvalue.hpp"
#include "logrank/taylor.hpp"

namespace logrank {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxCornerCandidates = 100'000;

double log_sum(const std::vector<double>& logs) {
  double hi = kNegInf;
  for (double v : logs) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

// log max_x Σ_{l: x ∈ cell_l} exp(log_c[l]).
//
// The set of cells containing x only grows when x moves down to the
// coordinatewise max of those cells' lower corners, so the maximum is attained
// on the grid of lower-corner coordinates. Too large a grid falls back to the
// sum over all cells, which is still an upper bound.
double log_max_overlap(const std::vector<const Box*>& cells, const std::vector<double>& log_c) {
  const std::size_t dim = cells.front()->axes.size();
  std::vector<std::vector<double>> grid(dim);
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) {
    std::set<double> los;
    for (const Box* b : cells) los.insert(b->axes[k].lo);
    grid[k].assign(los.begin(), los.end());
    total = total > kMaxCornerCandidates / grid[k].size() ? kMaxCornerCandidates + 1 : total * grid[k].size();
  }
  if (total > kMaxCornerCandidates) return log_sum(log_c);

  double best = kNegInf;
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> point(dim);
  std::vector<double> active;
  while (true) {
    for (std::size_t k = 0; k < dim; ++k) point[k] = grid[k][idx[k]];
    active.clear();
    for (std::size_t l = 0; l < cells.size(); ++l) {
      if (cells[l]->contains(point)) active.push_back(log_c[l]);
    }
    best = std::max(best, log_sum(active));
    std::size_t k = 0;
    while (k < dim && ++idx[k] == grid[k].size()) idx[k++] = 0;
    if (k == dim) break;
  }
  return best;
}

// Plain left-to-right dot product, so block and per-piece sums round identically.
double naive_dot(std::span<const double> a, const DenseMatrix& v, std::size_t col, std::size_t first,
                 std::size_t count) {
  double acc = 0.0;
  for (std::size_t p = 0; p < count; ++p) acc += a[first + p] * v(first + p, col);
  return acc;
}

}  // namespace

PiecewiseFactorization piecewise_taylor_factorize(const PiecewiseLvmSpec& spec, const LatentSample& sample,
                                                  double epsilon, const DenseMatrix* reference) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
  const std::size_t m = sample.alphas.rows();
  const std::size_t n = sample.betas.rows();
  const std::size_t count = spec.size();

  PiecewiseFactorization out;
  out.epsilon = epsilon;
  out.sup_norm = spec.sup_norm();
  const double scale = out.sup_norm > 0.0 ? out.sup_norm : 1.0;

  out.offsets.push_back(0);
  for (const Piece& piece : spec.pieces()) {
    TaylorOptions opts;
    opts.scale = scale;
    out.pieces.push_back(taylor_factorize(piece.spec, sample, epsilon, opts));
    out.offsets.push_back(out.offsets.back() + out.pieces.back().n_tilde);
  }
  const std::size_t width = out.offsets.back();

  std::vector<std::vector<bool>> alpha_in(m), beta_in(n);
  std::vector<double> u(m * width, 0.0), v(width * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    alpha_in[i] = spec.alpha_membership(sample.alphas.row(i));
    for (std::size_t l = 0; l < count; ++l) {
      if (!alpha_in[i][l]) continue;
      const auto src = out.pieces[l].u.row(i);
      std::copy(src.begin(), src.end(), u.begin() + static_cast<std::ptrdiff_t>(i * width + out.offsets[l]));
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    beta_in[j] = spec.beta_membership(sample.betas.row(j));
    for (std::size_t l = 0; l < count; ++l) {
      if (!beta_in[j][l]) continue;
      const auto& pv = out.pieces[l].v;
      for (std::size_t p = 0; p < pv.rows(); ++p) v[(out.offsets[l] + p) * n + j] = pv(p, j);
    }
  }
  out.u = DenseMatrix::from_row_major(m, width, std::move(u));
  out.v = DenseMatrix::from_row_major(width, n, std::move(v));

  // Block reconstruction against each entry's own piece, bit for bit.
  out.blocks_exact = true;
  for (std::size_t i = 0; i < m && out.blocks_exact; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t l = spec.piece_of(sample.alphas.row(i), sample.betas.row(j));
      const double block = naive_dot(out.u.row(i), out.v, j, 0, width);
      const double own = naive_dot(out.pieces[l].u.row(i), out.pieces[l].v, j, 0, out.pieces[l].n_tilde);
      if (block != own) {
        out.blocks_exact = false;
        break;
      }
    }
  }
  if (!out.blocks_exact) throw InternalConsistencyError("piecewise block vectors do not reproduce the pieces");

  DenseMatrix glued;
  if (!reference) {
    glued = generate_piecewise_matrix(spec, sample);
    reference = &glued;
  }
  out.achieved_error = factored_max_error(out.u, out.v, *reference);
  out.error_bound = epsilon * out.sup_norm;
  if (out.achieved_error > out.error_bound) {
    throw InternalConsistencyError("piecewise Taylor error " + format_double(out.achieved_error) +
                                   " exceeds eps*||f|| = " + format_double(out.error_bound));
  }

  std::vector<const Box*> a_cells, b_cells;
  std::vector<double> log_cu, log_cv;
  for (std::size_t l = 0; l < count; ++l) {
    a_cells.push_back(&spec.piece(l).alpha_cell);
    b_cells.push_back(&spec.piece(l).beta_cell);
    log_cu.push_back(out.pieces[l].log_c_u);
    log_cv.push_back(out.pieces[l].log_c_v);
  }
  out.log_c_u = log_max_overlap(a_cells, log_cu);
  out.log_c_v = log_max_overlap(b_cells, log_cv);
  return out;
}

}  // namespace logrank
