#include "logrank/lvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "logrank/errors.hpp"
#include "logrank/hermite.hpp"
#include "logrank/keyvalue.hpp"
#include "logrank/rng.hpp"

namespace logrank {

namespace {

// Latents on the sphere land within a few ulps of R after normalization.
constexpr double kBallSlack = 1e-12;

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

double falling_factorial(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= n - i;
  return r;
}

double squared_norm(std::span<const double> x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

int total_degree(std::span<const int> mu) { return std::accumulate(mu.begin(), mu.end(), 0); }

double monomial(std::span<const double> x, std::span<const int> exps) {
  double r = 1.0;
  for (std::size_t k = 0; k < exps.size(); ++k) r *= ipow(x[k], exps[k]);
  return r;
}

// Central finite-difference estimate of D^μ_β f(α, β), one axis at a time.
double finite_difference(const std::function<double(std::span<const double>, std::span<const double>)>& f,
                         std::span<const double> alpha, std::vector<double> beta,
                         std::span<const int> mu, std::size_t axis, double scale) {
  while (axis < mu.size() && mu[axis] == 0) ++axis;
  if (axis == mu.size()) return f(alpha, beta);
  const int n = mu[axis];
  const double h = std::pow(2.2e-16, 1.0 / (n + 2)) * scale;
  const double centre = beta[axis];
  double acc = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= n; ++j) {
    beta[axis] = centre + (0.5 * n - j) * h;
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sign * binom * finite_difference(f, alpha, beta, mu, axis + 1, scale);
    binom = binom * (n - j) / (j + 1);
  }
  return acc / std::pow(h, n);
}

void for_each_multi_index(int dim, int max_order, const std::function<void(std::span<const int>)>& fn) {
  std::vector<int> mu(static_cast<std::size_t>(dim), 0);
  std::function<void(int, int)> rec = [&](int axis, int remaining) {
    if (axis == dim - 1) {
      for (int v = 0; v <= remaining; ++v) {
        mu[axis] = v;
        fn(mu);
      }
      mu[axis] = 0;
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      mu[axis] = v;
      rec(axis + 1, remaining - v);
    }
    mu[axis] = 0;
  };
  rec(0, max_order);
}

// Tensor grid over [−R, R]^N restricted to the ball.
std::vector<std::vector<double>> ball_grid(int dim, double radius, int points) {
  std::vector<std::vector<double>> out;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  const double step = points > 1 ? 2.0 * radius / (points - 1) : 0.0;
  while (true) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) x[k] = points > 1 ? -radius + step * idx[k] : 0.0;
    if (squared_norm(x) <= radius * radius * (1.0 + kBallSlack)) out.push_back(std::move(x));
    int k = 0;
    while (k < dim && ++idx[k] == points) idx[k++] = 0;
    if (k == dim) break;
  }
  return out;
}

void draw_latent(const LvmSpec& spec, std::uint64_t seed, StreamRole role, StreamRole radius_role,
                 std::uint64_t index, std::span<double> out) {
  const int dim = spec.dim();
  const double radius = spec.radius();
  if (spec.distribution() == LatentDistribution::UniformInterval) {
    out[0] = (2.0 * counter_uniform(seed, role, index, 0) - 1.0) * radius;
    return;
  }
  double norm2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    out[k] = counter_normal(seed, role, index, static_cast<std::uint64_t>(k));
    norm2 += out[k] * out[k];
  }
  // A zero Gaussian vector has probability zero; fall back to the first axis.
  if (norm2 == 0.0) {
    out[0] = 1.0;
    norm2 = 1.0;
  }
  double target = radius;
  if (spec.distribution() == LatentDistribution::UniformBall) {
    target = radius * std::pow(counter_uniform(seed, radius_role, index, 0), 1.0 / dim);
  }
  const double scale = target / std::sqrt(norm2);
  for (int k = 0; k < dim; ++k) out[k] *= scale;
}

DenseMatrix draw_latents(const LvmSpec& spec, std::size_t count, std::uint64_t seed, StreamRole role,
                         StreamRole radius_role) {
  const auto dim = static_cast<std::size_t>(spec.dim());
  std::vector<double> data(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    draw_latent(spec, seed, role, radius_role, i, std::span<double>(data.data() + i * dim, dim));
  }
  return DenseMatrix::from_row_major(count, dim, std::move(data));
}

double checked_log_constant(double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw ArgumentError("niceness constant C must be finite and >= 0");
  return std::log(c);
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::InnerProduct: return "inner_product";
    case Family::Polynomial: return "polynomial";
    case Family::RbfKernel: return "rbf";
    case Family::Custom: return "custom";
  }
  return "unknown";
}

std::string to_string(LatentDistribution d) {
  switch (d) {
    case LatentDistribution::UniformBall: return "uniform_ball";
    case LatentDistribution::UniformSphere: return "uniform_sphere";
    case LatentDistribution::UniformInterval: return "uniform_interval";
  }
  return "unknown";
}

LvmSpec LvmSpec::inner_product(int dim, double radius, LatentDistribution dist) {
  LvmSpec s;
  s.family_ = Family::InnerProduct;
  s.dim_ = dim;
  s.radius_ = radius;
  s.distribution_ = dist;
  s.log_c_ = 0.0;
  s.m_ = 1.0;
  s.sup_norm_ = radius * radius;
  s.validate();
  return s;
}

LvmSpec LvmSpec::rbf(int dim, double radius, LatentDistribution dist) {
  LvmSpec s;
  s.family_ = Family::RbfKernel;
  s.dim_ = dim;
  s.radius_ = radius;
  s.distribution_ = dist;
  const double r4 = 4.0 * std::max(radius, 0.5);
  s.m_ = r4;
  s.log_c_ = std::log(static_cast<double>(dim)) + dim * std::log(r4);
  s.sup_norm_ = 1.0;
  s.validate();
  return s;
}

LvmSpec LvmSpec::polynomial(int dim, double radius, std::vector<PolynomialTerm> terms,
                            LatentDistribution dist) {
  LvmSpec s;
  s.family_ = Family::Polynomial;
  s.dim_ = dim;
  s.radius_ = radius;
  s.distribution_ = dist;
  s.terms_ = std::move(terms);
  s.validate();
  double bound = 0.0;
  for (const auto& t : s.terms_) {
    bound += std::abs(t.coefficient) *
             std::pow(radius, total_degree(t.alpha_exponents) + total_degree(t.beta_exponents));
  }
  s.sup_norm_ = bound;
  s.log_c_ = 0.0;
  s.m_ = static_cast<double>(s.beta_degree().value_or(0)) / radius;
  return s;
}

LvmSpec LvmSpec::custom(int dim, double radius, CustomFunction fn, double sup_norm, double c, double m,
                        LatentDistribution dist) {
  if (!fn.value) throw ArgumentError("custom family: value callback is required");
  LvmSpec s;
  s.family_ = Family::Custom;
  s.dim_ = dim;
  s.radius_ = radius;
  s.distribution_ = dist;
  s.custom_ = std::make_shared<const CustomFunction>(std::move(fn));
  s.log_c_ = checked_log_constant(c);
  s.m_ = m;
  s.sup_norm_ = 0.0;
  s.validate();
  return s.with_sup_norm(sup_norm);
}

LvmSpec LvmSpec::with_constants(double c, double m) const {
  LvmSpec s = *this;
  s.log_c_ = checked_log_constant(c);
  s.m_ = m;
  s.validate();
  return s;
}

LvmSpec LvmSpec::with_sup_norm(double sup_norm) const {
  LvmSpec s = *this;
  s.sup_norm_ = sup_norm;
  s.validate();
  const double observed = s.observed_sup_on_grid();
  if (sup_norm < observed) {
    throw ArgumentError("declared sup_norm " + format_double(sup_norm) +
                        " is below the observed sup " + format_double(observed));
  }
  return s;
}

LvmSpec LvmSpec::with_distribution(LatentDistribution dist) const {
  LvmSpec s = *this;
  s.distribution_ = dist;
  s.validate();
  return s;
}

void LvmSpec::validate() const {
  if (dim_ < 1) throw ArgumentError("latent dimension N must be at least 1, got " + std::to_string(dim_));
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw ArgumentError("radius R must be positive and finite");
  if (std::isnan(log_c_) || log_c_ == std::numeric_limits<double>::infinity()) {
    throw ArgumentError("niceness constant C must be finite and >= 0");
  }
  if (!(m_ >= 0.0) || !std::isfinite(m_)) throw ArgumentError("niceness constant M must be finite and >= 0");
  if (!(sup_norm_ >= 0.0) || !std::isfinite(sup_norm_)) throw ArgumentError("sup_norm must be finite and >= 0");
  if (distribution_ == LatentDistribution::UniformInterval && dim_ != 1) {
    throw ArgumentError("uniform_interval requires N = 1");
  }
  for (const auto& t : terms_) {
    if (t.alpha_exponents.size() != static_cast<std::size_t>(dim_) ||
        t.beta_exponents.size() != static_cast<std::size_t>(dim_)) {
      throw ArgumentError("polynomial term exponent lists must have length N = " + std::to_string(dim_));
    }
    const auto negative = [](int e) { return e < 0; };
    if (std::any_of(t.alpha_exponents.begin(), t.alpha_exponents.end(), negative) ||
        std::any_of(t.beta_exponents.begin(), t.beta_exponents.end(), negative)) {
      throw ArgumentError("polynomial exponents must be nonnegative");
    }
    if (!std::isfinite(t.coefficient)) throw ArgumentError("polynomial coefficient must be finite");
  }
}

bool LvmSpec::symmetric_function() const {
  switch (family_) {
    case Family::InnerProduct:
    case Family::RbfKernel: return true;
    case Family::Custom: return custom_->symmetric;
    case Family::Polynomial: {
      // Symmetric iff the multiset of terms is invariant under swapping a and b.
      auto key = [](const PolynomialTerm& t, bool swap) {
        return std::make_pair(swap ? t.beta_exponents : t.alpha_exponents,
                              swap ? t.alpha_exponents : t.beta_exponents);
      };
      std::map<std::pair<std::vector<int>, std::vector<int>>, double> fwd, rev;
      for (const auto& t : terms_) {
        fwd[key(t, false)] += t.coefficient;
        rev[key(t, true)] += t.coefficient;
      }
      return fwd == rev;
    }
  }
  return false;
}

std::optional<int> LvmSpec::beta_degree() const {
  switch (family_) {
    case Family::InnerProduct: return 1;
    case Family::RbfKernel: return std::nullopt;
    case Family::Custom: return custom_->beta_degree;
    case Family::Polynomial: {
      int d = 0;
      for (const auto& t : terms_) d = std::max(d, total_degree(t.beta_exponents));
      return d;
    }
  }
  return std::nullopt;
}

bool LvmSpec::in_ball(std::span<const double> x) const {
  return x.size() == static_cast<std::size_t>(dim_) &&
         squared_norm(x) <= radius_ * radius_ * (1.0 + kBallSlack);
}

void LvmSpec::require_in_ball(std::span<const double> x, const char* what) const {
  if (x.size() != static_cast<std::size_t>(dim_)) {
    throw DimensionError(std::string(what) + " has dimension " + std::to_string(x.size()) +
                         ", expected N = " + std::to_string(dim_));
  }
  if (!in_ball(x)) {
    throw DomainError(std::string(what) + " has norm " + format_double(std::sqrt(squared_norm(x))) +
                      " outside the ball of radius " + format_double(radius_));
  }
}

double LvmSpec::evaluate_unchecked(std::span<const double> alpha, std::span<const double> beta) const {
  switch (family_) {
    case Family::InnerProduct: return dot(alpha, beta);
    case Family::RbfKernel: {
      double d2 = 0.0;
      for (std::size_t k = 0; k < alpha.size(); ++k) d2 += (alpha[k] - beta[k]) * (alpha[k] - beta[k]);
      return std::exp(-d2);
    }
    case Family::Polynomial: {
      double acc = 0.0;
      for (const auto& t : terms_)
        acc += t.coefficient * monomial(alpha, t.alpha_exponents) * monomial(beta, t.beta_exponents);
      return acc;
    }
    case Family::Custom: return custom_->value(alpha, beta);
  }
  return 0.0;
}

double LvmSpec::evaluate(std::span<const double> alpha, std::span<const double> beta) const {
  require_in_ball(alpha, "alpha");
  require_in_ball(beta, "beta");
  return evaluate_unchecked(alpha, beta);
}

double LvmSpec::beta_derivative(std::span<const double> alpha, std::span<const double> beta,
                                std::span<const int> mu) const {
  const int order = total_degree(mu);
  switch (family_) {
    case Family::InnerProduct: {
      if (order == 0) return dot(alpha, beta);
      if (order == 1) {
        for (std::size_t k = 0; k < mu.size(); ++k)
          if (mu[k] == 1) return alpha[k];
      }
      return 0.0;
    }
    case Family::RbfKernel: {
      // d^n/dx^n exp(−x²) = (−1)^n H_n(x) exp(−x²), with x = β_k − α_k.
      double acc = 1.0;
      for (std::size_t k = 0; k < mu.size(); ++k) {
        const double x = beta[k] - alpha[k];
        const double h = hermite_values(x, mu[k]).back();
        acc *= ((mu[k] % 2) ? -h : h) * std::exp(-x * x);
      }
      return acc;
    }
    case Family::Polynomial: {
      double acc = 0.0;
      for (const auto& t : terms_) {
        double term = t.coefficient * monomial(alpha, t.alpha_exponents);
        for (std::size_t k = 0; k < mu.size() && term != 0.0; ++k) {
          const int b = t.beta_exponents[k];
          term = mu[k] > b ? 0.0 : term * falling_factorial(b, mu[k]) * ipow(beta[k], b - mu[k]);
        }
        acc += term;
      }
      return acc;
    }
    case Family::Custom: {
      if (custom_->beta_derivative) return custom_->beta_derivative(alpha, beta, mu);
      if (dim_ > 3 || order > 6) {
        throw CapabilityError("finite-difference derivatives support N <= 3 and order <= 6; got N = " +
                              std::to_string(dim_) + ", order " + std::to_string(order));
      }
      return finite_difference(custom_->value, alpha, std::vector<double>(beta.begin(), beta.end()), mu, 0,
                               std::max(1.0, radius_));
    }
  }
  return 0.0;
}

double LvmSpec::taylor_coefficient(std::span<const double> alpha, std::span<const int> mu) const {
  switch (family_) {
    case Family::InnerProduct: {
      if (total_degree(mu) != 1) return 0.0;
      for (std::size_t k = 0; k < mu.size(); ++k)
        if (mu[k] == 1) return alpha[k];
      return 0.0;
    }
    case Family::RbfKernel: {
      double acc = std::exp(-squared_norm(alpha));
      for (std::size_t k = 0; k < mu.size(); ++k) acc *= scaled_hermite_values(alpha[k], mu[k]).back();
      return acc;
    }
    case Family::Polynomial: {
      double acc = 0.0;
      for (const auto& t : terms_) {
        if (std::equal(t.beta_exponents.begin(), t.beta_exponents.end(), mu.begin(), mu.end())) {
          acc += t.coefficient * monomial(alpha, t.alpha_exponents);
        }
      }
      return acc;
    }
    case Family::Custom: {
      if (!custom_->taylor_coefficient) {
        throw CapabilityError("custom family has no Taylor coefficient callback");
      }
      return custom_->taylor_coefficient(alpha, mu);
    }
  }
  return 0.0;
}

double LvmSpec::observed_sup_on_grid() const {
  double worst = 0.0;
  if (dim_ <= 3) {
    const auto grid = ball_grid(dim_, radius_, dim_ == 1 ? 33 : (dim_ == 2 ? 13 : 7));
    for (const auto& a : grid)
      for (const auto& b : grid) worst = std::max(worst, std::abs(evaluate_unchecked(a, b)));
    return worst;
  }
  LvmSpec ball = *this;
  ball.distribution_ = LatentDistribution::UniformBall;
  const DenseMatrix a = draw_latents(ball, 64, 0x5ca1ab1eull, StreamRole::Alpha, StreamRole::AlphaRadius);
  const DenseMatrix b = draw_latents(ball, 64, 0x5ca1ab1eull, StreamRole::Beta, StreamRole::BetaRadius);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) worst = std::max(worst, std::abs(evaluate_unchecked(a.row(i), b.row(j))));
  return worst;
}

std::string LvmSpec::describe() const {
  std::ostringstream out;
  out.precision(17);
  out << "family=" << to_string(family_) << ";N=" << dim_ << ";R=" << radius_ << ";logC=" << log_c_ << ";M=" << m_
      << ";sup_norm=" << sup_norm_ << ";distribution=" << to_string(distribution_);
  for (const auto& t : terms_) {
    out << ";term=" << t.coefficient << ':';
    for (int e : t.alpha_exponents) out << e << ',';
    out << ':';
    for (int e : t.beta_exponents) out << e << ',';
  }
  return out.str();
}

LatentSample sample_latents(const LvmSpec& spec, std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || n == 0) throw ArgumentError("sample_latents: m and n must be at least 1");
  return LatentSample{draw_latents(spec, m, seed, StreamRole::Alpha, StreamRole::AlphaRadius),
                      draw_latents(spec, n, seed, StreamRole::Beta, StreamRole::BetaRadius), seed};
}

DenseMatrix sample_alphas(const LvmSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("sample_alphas: n must be at least 1");
  return draw_latents(spec, n, seed, StreamRole::Alpha, StreamRole::AlphaRadius);
}

double evaluate_entry(const LvmSpec& spec, std::span<const double> alpha, std::span<const double> beta) {
  return spec.evaluate(alpha, beta);
}

DenseMatrix generate_matrix(const LvmSpec& spec, const LatentSample& sample) {
  const auto& a = sample.alphas;
  const auto& b = sample.betas;
  if (a.empty() || b.empty() || a.cols() != static_cast<std::size_t>(spec.dim()) || b.cols() != a.cols()) {
    throw DimensionError("generate_matrix: latent sample does not match N = " + std::to_string(spec.dim()));
  }
  for (std::size_t i = 0; i < a.rows(); ++i) spec.require_in_ball(a.row(i), "alpha");
  for (std::size_t j = 0; j < b.rows(); ++j) spec.require_in_ball(b.row(j), "beta");
  std::vector<double> data(a.rows() * b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) data[i * b.rows() + j] = spec.evaluate_unchecked(a.row(i), b.row(j));
  return DenseMatrix::from_row_major(a.rows(), b.rows(), std::move(data));
}

DenseMatrix generate_symmetric_matrix(const LvmSpec& spec, const DenseMatrix& alphas) {
  if (alphas.empty() || alphas.cols() != static_cast<std::size_t>(spec.dim())) {
    throw DimensionError("generate_symmetric_matrix: latents do not match N = " + std::to_string(spec.dim()));
  }
  const std::size_t n = alphas.rows();
  for (std::size_t i = 0; i < n; ++i) spec.require_in_ball(alphas.row(i), "alpha");
  std::vector<double> data(n * n);
  const bool mirror = spec.symmetric_function();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = mirror ? i : 0; j < n; ++j) {
      const double v = spec.evaluate_unchecked(alphas.row(i), alphas.row(j));
      data[i * n + j] = v;
      if (mirror) data[j * n + i] = v;
    }
  }
  return DenseMatrix::from_row_major(n, n, std::move(data));
}

NicenessReport verify_niceness(const LvmSpec& spec, int max_order, int grid_points) {
  if (max_order < 0 || grid_points < 1) throw ArgumentError("verify_niceness: bad order or grid size");
  if (spec.family() == Family::Custom && !spec.custom_function()->beta_derivative &&
      (spec.dim() > 3 || max_order > 6)) {
    throw CapabilityError("verify_niceness: finite differences support N <= 3 and order <= 6");
  }
  if (spec.dim() > 3) {
    throw CapabilityError("verify_niceness: tensor grids support N <= 3, got N = " + std::to_string(spec.dim()));
  }
  NicenessReport report;
  const auto grid = ball_grid(spec.dim(), spec.radius(), grid_points);
  for_each_multi_index(spec.dim(), max_order, [&](std::span<const int> mu) {
    const double bound = spec.c() * std::pow(spec.m(), total_degree(mu)) * spec.sup_norm();
    for (const auto& a : grid) {
      for (const auto& b : grid) {
        const double d = std::abs(spec.beta_derivative(a, b, mu));
        ++report.evaluations;
        double ratio = 0.0;
        if (bound > 0.0) {
          ratio = d / bound;
        } else if (d > 1e-12) {
          ratio = std::numeric_limits<double>::infinity();
        }
        if (ratio > report.worst_ratio || report.worst_mu.empty()) {
          report.worst_ratio = ratio;
          report.worst_alpha = a;
          report.worst_beta = b;
          report.worst_mu.assign(mu.begin(), mu.end());
        }
      }
    }
  });
  // Equality cases (e.g. the monomial bound at |β| = R) land within rounding of 1.
  report.pass = report.worst_ratio <= 1.0 + 1e-9;
  return report;
}

}  // namespace logrank
