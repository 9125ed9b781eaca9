#include "logrank/jl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "logrank/errors.hpp"
#include "logrank/keyvalue.hpp"
#include "logrank/matcore.hpp"
#include "logrank/matrix_io.hpp"
#include "logrank/rng.hpp"

namespace logrank {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();
// Largest sketch materialized: r · (m + n + D) doubles.
constexpr double kMaxSketchEntries = 6e7;

void require_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct Budget {
  std::uint64_t r = 0;
  double log_r = 0.0;
};

// r = ⌈value⌉ with value = exp(log_value); computed directly when finite.
Budget make_budget(double value, double log_value) {
  Budget b;
  b.log_r = log_value;
  if (std::isfinite(value) && value < 1.8e19) {
    b.r = static_cast<std::uint64_t>(std::ceil(value));
  } else {
    b.r = kSaturated;
  }
  return b;
}

// ⌈8 ln(points + 1)(1 + 2(C_u + C_v + 1)/ε)²⌉ from the log constants.
Budget lvm_budget(std::size_t points, double log_c_u, double log_c_v, double epsilon) {
  const double log_points = std::log(8.0 * std::log(static_cast<double>(points) + 1.0));
  const double log_sum = log_add(log_add(log_c_u, log_c_v), 0.0);  // ln(C_u + C_v + 1)
  const double log_factor = log_add(0.0, std::log(2.0) + log_sum - std::log(epsilon));
  const double log_r = log_points + 2.0 * log_factor;
  const double cu = std::exp(log_c_u);
  const double cv = std::exp(log_c_v);
  const double direct = 8.0 * std::log(static_cast<double>(points) + 1.0) *
                        std::pow(1.0 + 2.0 * (cu + cv + 1.0) / epsilon, 2.0);
  return make_budget(direct, log_r);
}

bool materializable(std::uint64_t r, std::size_t m, std::size_t n, std::size_t d) {
  return static_cast<double>(r) * static_cast<double>(m + n + d) <= kMaxSketchEntries;
}

// Projects the factors u (m x D) and v (D x n) through one shared map and
// measures against the reference, resampling up to max_retries times.
CompressedApprox compress_factors(const DenseMatrix& u, const DenseMatrix& v, const DenseMatrix& reference,
                                  double reference_norm, double epsilon, const Budget& budget,
                                  std::uint64_t seed, const CompressOptions& options, const char* what) {
  if (options.max_retries < 0) throw ArgumentError("max_retries must be nonnegative");
  const std::size_t m = u.rows();
  const std::size_t n = v.cols();
  const std::size_t d = u.cols();
  const double target = epsilon * reference_norm;

  CompressedApprox out;
  out.rank_budget = budget.r;
  out.log_rank_budget = budget.log_r;
  out.epsilon = epsilon;
  out.reference_norm = reference_norm;
  out.input_error = factored_max_error(u, v, reference);

  std::uint64_t r = budget.r;
  if (options.sketch_dim) {
    if (*options.sketch_dim == 0) throw ArgumentError("sketch dimension must be positive");
    r = *options.sketch_dim;
  }
  const bool fits = materializable(r, m, n, d);
  if (!options.sketch_dim && !fits) {
    if (r < d) {
      throw CapacityError(std::string(what) + ": sketch dimension r = " + std::to_string(r) +
                          " is below the factor width " + std::to_string(d) + " but too large to materialize");
    }
    // r ≥ D: the identity is an exact embedding, nothing to sample.
    out.sketch = SketchKind::Identity;
    out.left = u;
    out.right = v;
    out.rank = d;
    out.achieved_max_error = out.input_error;
    out.seed = seed;
    if (out.achieved_max_error > target) {
      throw InternalConsistencyError(std::string(what) + ": unsketched factors miss the target, error " +
                                     format_double(out.achieved_max_error) + " > " + format_double(target));
    }
    return out;
  }
  if (!fits) throw CapacityError(std::string(what) + ": sketch dimension " + std::to_string(r) + " too large");

  out.sketch = SketchKind::Gaussian;
  out.rank = static_cast<std::size_t>(r);
  double best = std::numeric_limits<double>::infinity();
  const int attempts = options.max_retries + 1;
  for (int a = 0; a < attempts; ++a) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(a);
    const JlMap map = sample_jl_map(d, out.rank, s);
    const DenseMatrix left = DenseMatrix::from_eigen(u.view() * map.q.view().transpose());
    const DenseMatrix right = DenseMatrix::from_eigen(map.q.view() * v.view());
    const double err = factored_max_error(left, right, reference);
    best = std::min(best, err);
    if (err <= target) {
      out.left = left;
      out.right = right;
      out.achieved_max_error = err;
      out.seed = s;
      out.retries_used = a;
      out.nontrivial = out.rank < std::min(m, n);
      const DenseMatrix exact = multiply(u, v);
      out.jl_error = factored_max_error(left, right, exact);
      const double slack = 1e-12 * std::max(1.0, reference_norm);
      if (out.achieved_max_error > out.input_error + out.jl_error + slack) {
        throw InternalConsistencyError(std::string(what) + ": error exceeds the Taylor plus JL decomposition");
      }
      return out;
    }
  }
  throw ProbabilisticFailure(std::string(what) + ": no sketch reached error " + format_double(target) + " in " +
                                 std::to_string(attempts) + " attempts (best " + format_double(best) + ")",
                             best, attempts);
}

}  // namespace

std::uint64_t jl_target_dim(std::uint64_t n_points, double eps_jl) {
  require_epsilon(eps_jl);
  if (n_points == 0) throw ArgumentError("jl_target_dim: need at least one point");
  const double r = 8.0 * std::log(static_cast<double>(n_points) + 1.0) / (eps_jl * eps_jl);
  return static_cast<std::uint64_t>(std::ceil(r));
}

JlMap sample_jl_map(std::size_t input_dim, std::size_t r, std::uint64_t seed, double eps_jl) {
  if (input_dim == 0 || r == 0) throw ArgumentError("sample_jl_map: dimensions must be positive");
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  std::vector<double> data(r * input_dim);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = 0; b < input_dim; ++b) data[a * input_dim + b] = scale * counter_normal(seed, StreamRole::JlMap, a, b);
  return JlMap{DenseMatrix::from_row_major(r, input_dim, std::move(data)), eps_jl, seed};
}

InnerProductReport verify_inner_product_preservation(const JlMap& map, const DenseMatrix& points, double eps_jl) {
  if (points.cols() != map.input_dim()) {
    throw DimensionError("verify_inner_product_preservation: points have dimension " + std::to_string(points.cols()) +
                        ", map expects " + std::to_string(map.input_dim()));
  }
  const auto x = points.view();
  const Eigen::MatrixXd gram = x * x.transpose();
  const Eigen::MatrixXd projected = x * map.q.view().transpose();
  const Eigen::MatrixXd pgram = projected * projected.transpose();
  InnerProductReport rep;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i; j < gram.cols(); ++j) {
      ++rep.pairs;
      const double lhs = std::abs(gram(i, j) - pgram(i, j));
      const double rhs = eps_jl * (gram(i, i) + gram(j, j) - gram(i, j));
      const double ratio = lhs == 0.0 ? 0.0 : (rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity());
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst_i = static_cast<std::size_t>(i);
        rep.worst_j = static_cast<std::size_t>(j);
      }
    }
  }
  rep.pass = rep.worst_ratio <= 1.0;
  return rep;
}

std::string to_string(SketchKind k) { return k == SketchKind::Gaussian ? "gaussian" : "identity"; }

CompressedApprox theorem0_compress(const DenseMatrix& x, double epsilon, std::uint64_t seed,
                                   const CompressOptions& options) {
  require_epsilon(epsilon);
  if (x.empty()) throw DimensionError("theorem0_compress: empty matrix");
  const SvdResult s = svd(x);
  const std::size_t k = s.rank_capacity();
  Eigen::VectorXd root(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) root(static_cast<Eigen::Index>(i)) = std::sqrt(s.singular_values[i]);
  const DenseMatrix u = DenseMatrix::from_eigen(s.u.view() * root.asDiagonal());
  const DenseMatrix v = DenseMatrix::from_eigen(root.asDiagonal() * s.vt.view());
  const double points = static_cast<double>(x.rows() + x.cols());
  const double r = 72.0 * std::log(points + 1.0) / (epsilon * epsilon);
  const Budget budget = make_budget(r, std::log(r));
  const double norm = s.singular_values.front();
  return compress_factors(u, v, x, norm, epsilon, budget, seed, options, "theorem0");
}

CompressedApprox theorem2_compress(const TaylorFactorization& fact, const DenseMatrix& reference, double epsilon,
                                   std::uint64_t seed, const CompressOptions& options) {
  require_epsilon(epsilon);
  if (fact.error_bound > 0.5 * epsilon * fact.sup_norm) {
    throw ArgumentError("Taylor error bound " + format_double(fact.error_bound) + " exceeds (eps/2)*||f|| = " +
                        format_double(0.5 * epsilon * fact.sup_norm) +
                        "; factorize with a Taylor epsilon of at most eps/2");
  }
  if (reference.rows() != fact.u.rows() || reference.cols() != fact.v.cols()) {
    throw DimensionError("theorem2_compress: reference does not match the factor shapes");
  }
  const Budget budget = lvm_budget(reference.rows() + reference.cols(), fact.log_c_u, fact.log_c_v, epsilon);
  return compress_factors(fact.u, fact.v, reference, fact.sup_norm, epsilon, budget, seed, options, "theorem2");
}

PipelineResult theorem2_pipeline(const LvmSpec& spec, std::size_t m, std::size_t n, double epsilon,
                                 std::uint64_t seed, const CompressOptions& options) {
  require_epsilon(epsilon);
  PipelineResult out;
  out.sample = sample_latents(spec, m, n, seed);
  out.reference = generate_matrix(spec, out.sample);
  TaylorOptions topts;
  topts.reference = &out.reference;
  out.taylor = taylor_factorize(spec, out.sample, 0.5 * epsilon, topts);
  out.approx = theorem2_compress(out.taylor, out.reference, epsilon, seed, options);
  return out;
}

CompressedApprox theorem3_compress(const PiecewiseFactorization& pfact, const DenseMatrix& reference,
                                   double epsilon, std::uint64_t seed, const CompressOptions& options) {
  require_epsilon(epsilon);
  if (pfact.error_bound > 0.5 * epsilon * pfact.sup_norm) {
    throw ArgumentError("piecewise Taylor error bound exceeds (eps/2)*||f||; factorize with epsilon of at most eps/2");
  }
  if (reference.rows() != pfact.u.rows() || reference.cols() != pfact.v.cols()) {
    throw DimensionError("theorem3_compress: reference does not match the factor shapes");
  }
  const Budget budget = lvm_budget(reference.rows() + reference.cols(), pfact.log_c_u, pfact.log_c_v, epsilon);
  return compress_factors(pfact.u, pfact.v, reference, pfact.sup_norm, epsilon, budget, seed, options, "theorem3");
}

PiecewisePipelineResult theorem3_pipeline(const PiecewiseLvmSpec& spec, std::size_t m, std::size_t n,
                                          double epsilon, std::uint64_t seed, const CompressOptions& options) {
  require_epsilon(epsilon);
  PiecewisePipelineResult out;
  out.sample = sample_latents(spec.sampling_spec(), m, n, seed);
  out.reference = generate_piecewise_matrix(spec, out.sample);
  out.taylor = piecewise_taylor_factorize(spec, out.sample, 0.5 * epsilon, &out.reference);
  out.approx = theorem3_compress(out.taylor, out.reference, epsilon, seed, options);
  return out;
}

SymmetricResult theorem4_compress(const LvmSpec& spec, const DenseMatrix& alphas, double epsilon,
                                  std::uint64_t seed, const CompressOptions& options) {
  require_epsilon(epsilon);
  SymmetricResult out;
  out.reference = generate_symmetric_matrix(spec, alphas);
  const LatentSample sample{alphas, alphas, seed};
  TaylorOptions topts;
  topts.reference = &out.reference;
  out.taylor = taylor_factorize(spec, sample, 0.5 * epsilon, topts);
  out.approx = theorem2_compress(out.taylor, out.reference, epsilon, seed, options);
  return out;
}

void save_compressed(const CompressedApprox& approx, const std::filesystem::path& prefix) {
  write_matrix(approx.left, prefix.string() + ".left.epsr");
  write_matrix(approx.right, prefix.string() + ".right.epsr");
  KeyValueWriter meta;
  meta.add("r", approx.rank_budget)
      .add("log_r", approx.log_rank_budget)
      .add("rank", static_cast<std::uint64_t>(approx.rank))
      .add("epsilon", approx.epsilon)
      .add("reference_norm", approx.reference_norm)
      .add("seed", approx.seed)
      .add("retries_used", static_cast<std::int64_t>(approx.retries_used))
      .add("achieved_max_error", approx.achieved_max_error)
      .add("input_error", approx.input_error)
      .add("jl_error", approx.jl_error)
      .add("nontrivial", approx.nontrivial)
      .add("sketch", to_string(approx.sketch));
  meta.save(prefix.string() + ".meta");
}

CompressedApprox load_compressed(const std::filesystem::path& prefix) {
  const auto meta = KeyValueMap::load(prefix.string() + ".meta");
  CompressedApprox c;
  c.left = read_matrix(prefix.string() + ".left.epsr");
  c.right = read_matrix(prefix.string() + ".right.epsr");
  c.rank_budget = meta.find_u64("r").value_or(0);
  c.log_rank_budget = meta.get_double("log_r");
  c.rank = static_cast<std::size_t>(meta.find_u64("rank").value_or(0));
  c.epsilon = meta.get_double("epsilon");
  c.reference_norm = meta.get_double("reference_norm");
  c.seed = meta.find_u64("seed").value_or(0);
  c.retries_used = static_cast<int>(meta.get_int("retries_used"));
  c.achieved_max_error = meta.get_double("achieved_max_error");
  c.input_error = meta.get_double("input_error");
  c.jl_error = meta.get_double("jl_error");
  const std::string flag = meta.get_string("nontrivial");
  if (flag != "true" && flag != "false") meta.fail("nontrivial", "expected true or false");
  c.nontrivial = flag == "true";
  const std::string sketch = meta.get_string("sketch");
  if (sketch != "gaussian" && sketch != "identity") meta.fail("sketch", "expected gaussian or identity");
  c.sketch = sketch == "gaussian" ? SketchKind::Gaussian : SketchKind::Identity;
  if (c.left.cols() != c.rank || c.right.rows() != c.rank) {
    throw FormatError("compressed factors do not match rank = " + std::to_string(c.rank), 0);
  }
  return c;
}

}  // namespace logrank
