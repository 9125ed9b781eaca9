#include "logrank/taylor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "logrank/errors.hpp"
#include "logrank/hermite.hpp"
#include "logrank/keyvalue.hpp"
#include "logrank/matrix_io.hpp"

namespace logrank {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxSeriesTerms = 1'000'000;
constexpr std::size_t kMaxEnumerated = 50'000'000;
constexpr std::uint64_t kMaxTaylorWidth = 1'000'000;
// Stop once the certified tail is below this fraction of the partial sum.
const double kLogTailTolerance = std::log(1e-17);
const double kLogHalf = std::log(0.5);

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(ρ/(1−ρ)) for log ρ < 0.
double log_geometric_tail(double log_ratio) { return log_ratio - std::log1p(-std::exp(log_ratio)); }

constexpr std::uint64_t kU64Max = std::numeric_limits<std::uint64_t>::max();

// Both return false on 64-bit overflow.
bool checked_mul(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  if (a != 0 && b > kU64Max / a) return false;
  out = a * b;
  return true;
}

bool checked_pow(std::uint64_t base, int exp, std::uint64_t& out) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (!checked_mul(r, base, r)) return false;
  }
  out = r;
  return true;
}

double signed_exp(double sign, double log_abs) {
  const double v = sign * std::exp(log_abs);
  if (!std::isfinite(v)) throw NumericalError("Taylor factor entry overflows a double");
  return v;
}

}  // namespace

std::uint64_t multi_index_count(int dim, int max_degree) {
  if (dim < 1 || max_degree < 0) throw ArgumentError("multi_index_count: need N >= 1 and K >= 0");
  const std::uint64_t n = static_cast<std::uint64_t>(dim) + static_cast<std::uint64_t>(max_degree);
  const std::uint64_t k = static_cast<std::uint64_t>(std::min(dim, max_degree));
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // c · (n − k + i) / i is exact (it is binomial(n − k + i, i)); cancel the
    // gcd first so the product only overflows when the result does.
    const std::uint64_t g = std::gcd(c, i);
    const std::uint64_t factor = (n - k + i) / (i / g);
    if (!checked_mul(c / g, factor, c)) {
      throw CapacityError("binomial(N+K, K) for N = " + std::to_string(dim) + ", K = " +
                          std::to_string(max_degree) + " does not fit in 64 bits");
    }
  }
  return c;
}

MultiIndexSet::MultiIndexSet(int dim, int max_degree) : dim_(dim), max_degree_(max_degree) {
  const std::uint64_t count = multi_index_count(dim, max_degree);
  if (count > kMaxEnumerated) {
    throw CapacityError("refusing to enumerate binomial(N+K, K) = " + std::to_string(count) + " multi-indices");
  }
  count_ = static_cast<std::size_t>(count);

  std::uint64_t nk = 0;
  if (max_degree >= 1 && checked_pow(static_cast<std::uint64_t>(dim), max_degree, nk)) {
    std::uint64_t loose = 0;
    if (checked_mul(nk, static_cast<std::uint64_t>(max_degree) + 1, loose) && count > loose) {
      throw InternalConsistencyError("multi-index count exceeds (K+1)N^K");
    }
  }

  flat_.reserve(count_ * static_cast<std::size_t>(dim));
  degrees_.reserve(count_);
  log_factorials_.reserve(count_);
  std::vector<int> mu(static_cast<std::size_t>(dim), 0);
  std::function<void(int, int, int)> emit = [&](int pos, int remaining, int degree) {
    if (pos == dim - 1) {
      mu[pos] = remaining;
      flat_.insert(flat_.end(), mu.begin(), mu.end());
      degrees_.push_back(degree);
      double lf = 0.0;
      for (int e : mu) lf += std::lgamma(e + 1.0);
      log_factorials_.push_back(lf);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      mu[pos] = v;
      emit(pos + 1, remaining - v, degree);
    }
    mu[pos] = 0;
  };
  for (int d = 0; d <= max_degree; ++d) emit(0, d, d);
  if (degrees_.size() != count_) throw InternalConsistencyError("multi-index enumeration count mismatch");
}

MultiIndexSet enumerate_multi_indices(int dim, int max_degree) { return MultiIndexSet(dim, max_degree); }

int select_truncation_order(const LvmSpec& spec, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
  const double growth = 2.0 * std::numbers::e * spec.dim() * spec.radius() * spec.m();
  const double decay = spec.log_c() / std::numbers::ln2 - std::log2(epsilon);
  const double k = std::ceil(std::max(growth, decay));
  if (!(k < 1e9)) throw CapacityError("truncation order K = " + format_double(k) + " is not representable");
  return std::max(1, static_cast<int>(k));
}

SeriesBound cv_series(int dim, double radius) {
  if (dim < 1 || !(radius >= 0.0) || !std::isfinite(radius)) throw ArgumentError("cv_series: bad N or R");
  const double n = dim;
  if (radius == 0.0) return {n * std::log(n), 1, true};
  const double log_r2 = 2.0 * std::log(radius);
  double sum = kNegInf;
  for (std::size_t s = 0; s < kMaxSeriesTerms; ++s) {
    const double sd = static_cast<double>(s);
    const double log_term = n * std::log(n + sd) + sd * log_r2 - std::lgamma(sd + 1.0);
    sum = log_add(sum, log_term);
    // t_{s+1}/t_s = (1 + 1/(N+s))^N R² / (s+1), decreasing in s.
    const double log_ratio = n * std::log1p(1.0 / (n + sd)) + log_r2 - std::log(sd + 1.0);
    if (log_ratio <= kLogHalf) {
      const double log_tail = log_term + log_geometric_tail(log_ratio);
      if (log_tail - sum < kLogTailTolerance) return {log_add(sum, log_tail), s + 1, true};
    }
  }
  return {sum, kMaxSeriesTerms, false};
}

SeriesBound cu_series(int dim, double log_c, double m) {
  if (dim < 1 || std::isnan(log_c) || !(m >= 0.0) || !std::isfinite(m)) throw ArgumentError("cu_series: bad N, C or M");
  const double n = dim;
  if (log_c == kNegInf) return {kNegInf, 0, true};
  if (m == 0.0) return {n * std::log(n) + 2.0 * log_c, 1, true};
  const double log_m2 = 2.0 * std::log(m);
  // Block k holds s = kN … kN+N−1; every term there is at most
  //   ((k+2)N)^N C² M^{2kN} max(1,M)^{2(N−1)} / k!,
  // so U_k = N times that majorizes the block and U_{k+1}/U_k is decreasing in k.
  const double log_block_extra = std::log(n) + 2.0 * log_c + (n - 1.0) * std::max(0.0, log_m2);
  double sum = kNegInf;
  std::size_t terms = 0;
  for (std::size_t k = 0; k < kMaxSeriesTerms; ++k) {
    const double kd = static_cast<double>(k);
    const double log_kfact = std::lgamma(kd + 1.0);
    for (int j = 0; j < dim; ++j) {
      const double s = kd * n + j;
      sum = log_add(sum, n * std::log(n + s) + 2.0 * log_c + s * log_m2 - log_kfact);
      ++terms;
    }
    const double log_ratio = n * std::log((kd + 3.0) / (kd + 2.0)) + n * log_m2 - std::log(kd + 1.0);
    if (log_ratio <= kLogHalf) {
      const double log_majorant = log_block_extra + n * std::log((kd + 2.0) * n) + kd * n * log_m2 - log_kfact;
      const double log_tail = log_majorant + log_geometric_tail(log_ratio);
      if (log_tail - sum < kLogTailTolerance) return {log_add(sum, log_tail), terms, true};
    }
  }
  return {sum, terms, false};
}

SeriesBound cv_bound(const LvmSpec& spec) { return cv_series(spec.dim(), spec.radius()); }

SeriesBound cu_bound(const LvmSpec& spec) { return cu_series(spec.dim(), spec.log_c(), spec.m()); }

double compute_cv(const LvmSpec& spec) {
  const SeriesBound b = cv_bound(spec);
  if (!b.converged) throw NumericalError("C_v series did not settle", static_cast<long>(b.terms));
  return b.value();
}

double compute_cu(const LvmSpec& spec) {
  const SeriesBound b = cu_bound(spec);
  if (!b.converged) throw NumericalError("C_u series did not settle", static_cast<long>(b.terms));
  return b.value();
}

DenseMatrix taylor_left_factor(const LvmSpec& spec, const MultiIndexSet& set, const DenseMatrix& alphas,
                               double scale) {
  if (alphas.cols() != static_cast<std::size_t>(set.dim())) throw DimensionError("taylor_left_factor: N mismatch");
  const double half_log_scale = 0.5 * std::log(scale);
  const std::size_t width = set.size();
  const auto dim = static_cast<std::size_t>(set.dim());
  std::vector<double> data(alphas.rows() * width);
  std::vector<std::vector<double>> hermite(dim);
  for (std::size_t i = 0; i < alphas.rows(); ++i) {
    const auto alpha = alphas.row(i);
    spec.require_in_ball(alpha, "alpha");
    double gauss = 0.0;
    if (spec.family() == Family::RbfKernel) {
      double norm2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        hermite[k] = scaled_hermite_values(alpha[k], set.max_degree());
        norm2 += alpha[k] * alpha[k];
      }
      gauss = std::exp(-norm2);
    }
    for (std::size_t p = 0; p < width; ++p) {
      const auto mu = set[p];
      double coef;
      if (spec.family() == Family::RbfKernel) {
        coef = gauss;
        for (std::size_t k = 0; k < dim; ++k) coef *= hermite[k][static_cast<std::size_t>(mu[k])];
      } else {
        coef = spec.taylor_coefficient(alpha, mu);
      }
      data[i * width + p] =
          coef == 0.0 ? 0.0
                      : signed_exp(coef < 0 ? -1.0 : 1.0, std::log(std::abs(coef)) + 0.5 * set.log_factorial(p) -
                                                               half_log_scale);
    }
  }
  return DenseMatrix::from_row_major(alphas.rows(), width, std::move(data));
}

DenseMatrix taylor_right_factor(const MultiIndexSet& set, const DenseMatrix& betas, double scale) {
  if (betas.cols() != static_cast<std::size_t>(set.dim())) throw DimensionError("taylor_right_factor: N mismatch");
  const double half_log_scale = 0.5 * std::log(scale);
  const std::size_t width = set.size();
  const std::size_t n = betas.rows();
  std::vector<double> data(width * n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto beta = betas.row(j);
    for (std::size_t p = 0; p < width; ++p) {
      const auto mu = set[p];
      double sign = 1.0;
      double log_abs = half_log_scale - 0.5 * set.log_factorial(p);
      bool zero = false;
      for (std::size_t k = 0; k < beta.size(); ++k) {
        if (mu[k] == 0) continue;
        if (beta[k] == 0.0) {
          zero = true;
          break;
        }
        if (beta[k] < 0.0 && (mu[k] % 2)) sign = -sign;
        log_abs += mu[k] * std::log(std::abs(beta[k]));
      }
      data[p * n + j] = zero ? 0.0 : signed_exp(sign, log_abs);
    }
  }
  return DenseMatrix::from_row_major(width, n, std::move(data));
}

TaylorFactorization taylor_factorize(const LvmSpec& spec, const LatentSample& sample, double epsilon,
                                     const TaylorOptions& options) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
  if (spec.family() == Family::Custom && !spec.custom_function()->taylor_coefficient) {
    throw CapabilityError("custom family has no Taylor coefficient callback");
  }
  const auto dim = static_cast<std::size_t>(spec.dim());
  if (sample.alphas.cols() != dim || sample.betas.cols() != dim) {
    throw DimensionError("taylor_factorize: latent sample does not match N = " + std::to_string(dim));
  }

  TaylorFactorization f;
  f.epsilon = epsilon;
  f.sup_norm = spec.sup_norm();
  if (options.order) {
    if (*options.order < 0) throw ArgumentError("Taylor order must be nonnegative");
    f.k_selected = *options.order;
  } else {
    f.k_selected = select_truncation_order(spec, epsilon);
  }
  f.k_effective = f.k_selected;
  if (const auto degree = spec.beta_degree()) f.k_effective = std::min(f.k_effective, *degree);

  const std::uint64_t width = multi_index_count(spec.dim(), f.k_effective);
  if (width > kMaxTaylorWidth) {
    throw CapacityError("Taylor width N~ = " + std::to_string(width) + " exceeds the limit of 10^6 (N = " +
                        std::to_string(dim) + ", K = " + std::to_string(f.k_effective) + ")");
  }
  const MultiIndexSet set(spec.dim(), f.k_effective);
  f.n_tilde = set.size();

  f.scale = options.scale.value_or(f.sup_norm);
  if (!(f.scale >= 0.0) || !std::isfinite(f.scale)) throw ArgumentError("Taylor scale must be finite and >= 0");
  if (f.scale == 0.0) f.scale = 1.0;

  f.u = taylor_left_factor(spec, set, sample.alphas, f.scale);
  f.v = taylor_right_factor(set, sample.betas, f.scale);

  DenseMatrix generated;
  const DenseMatrix* reference = options.reference;
  if (!reference) {
    generated = generate_matrix(spec, sample);
    reference = &generated;
  }
  f.achieved_error = factored_max_error(f.u, f.v, *reference);
  if (options.order) {
    f.error_bound = f.achieved_error;
  } else {
    f.error_bound = epsilon * f.sup_norm;
    if (f.achieved_error > f.error_bound) {
      throw InternalConsistencyError("Taylor factorization error " + format_double(f.achieved_error) +
                                     " exceeds eps*||f|| = " + format_double(f.error_bound) + " at K = " +
                                     std::to_string(f.k_effective));
    }
  }
  f.log_c_u = cu_bound(spec).log_value;
  f.log_c_v = cv_bound(spec).log_value;
  f.spec_hash = spec_hash(spec);
  return f;
}

std::string spec_hash(const LvmSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : spec.describe()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
  return out;
}

void save_taylor(const TaylorFactorization& fact, const std::filesystem::path& prefix) {
  write_matrix(fact.u, prefix.string() + ".u.epsr");
  write_matrix(fact.v, prefix.string() + ".v.epsr");
  KeyValueWriter meta;
  meta.add("K", static_cast<std::int64_t>(fact.k_selected))
      .add("K_effective", static_cast<std::int64_t>(fact.k_effective))
      .add("n_tilde", static_cast<std::uint64_t>(fact.n_tilde))
      .add("epsilon", fact.epsilon)
      .add("sup_norm", fact.sup_norm)
      .add("scale", fact.scale)
      .add("error_bound", fact.error_bound)
      .add("achieved_error", fact.achieved_error)
      .add("c_u", fact.c_u())
      .add("c_v", fact.c_v())
      .add("log_c_u", fact.log_c_u)
      .add("log_c_v", fact.log_c_v)
      .add("spec_hash", fact.spec_hash);
  meta.save(prefix.string() + ".meta");
}

TaylorFactorization load_taylor(const std::filesystem::path& prefix) {
  const auto meta = KeyValueMap::load(prefix.string() + ".meta");
  TaylorFactorization f;
  f.u = read_matrix(prefix.string() + ".u.epsr");
  f.v = read_matrix(prefix.string() + ".v.epsr");
  f.k_selected = static_cast<int>(meta.get_int("K"));
  f.k_effective = static_cast<int>(meta.get_int("K_effective"));
  f.n_tilde = static_cast<std::size_t>(meta.get_int("n_tilde"));
  f.epsilon = meta.get_double("epsilon");
  f.sup_norm = meta.get_double("sup_norm");
  f.scale = meta.get_double("scale");
  f.error_bound = meta.get_double("error_bound");
  f.achieved_error = meta.get_double("achieved_error");
  // c_u and c_v may be "inf" in the file; the log forms are authoritative.
  f.log_c_u = meta.contains("log_c_u") && meta.get_string("log_c_u") == "-inf" ? kNegInf : meta.get_double("log_c_u");
  f.log_c_v = meta.get_double("log_c_v");
  f.spec_hash = meta.get_string("spec_hash");
  if (f.u.cols() != f.n_tilde || f.v.rows() != f.n_tilde) {
    throw FormatError("Taylor factors do not match n_tilde = " + std::to_string(f.n_tilde), 0);
  }
  return f;
}

}  // namespace logrank
