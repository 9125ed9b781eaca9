#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logrank/errors.hpp"
#include "logrank/jl.hpp"
#include "logrank/matcore.hpp"
#include "logrank/rng.hpp"
#include "test_support.hpp"

using namespace logrank;
using doctest::Approx;

namespace {

// log C_u, log C_v for the default RBF constants at N = 2, R = 1
// (60-digit series summation, frozen).
constexpr double kLogCuRbf2 = 278.256645022572;
constexpr double kLogCvRbf2 = 3.30258509299405;

DenseMatrix unit_rows(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::vector<double> data(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      data[i * dim + k] = counter_normal(seed, StreamRole::Test, i, k);
      s += data[i * dim + k] * data[i * dim + k];
    }
    for (std::size_t k = 0; k < dim; ++k) data[i * dim + k] /= std::sqrt(s);
  }
  return DenseMatrix::from_row_major(count, dim, std::move(data));
}

}  // namespace

TEST_CASE("jl_target_dim") {
  CHECK(jl_target_dim(1, 1.0 - 1e-9) == 6);
  CHECK(jl_target_dim(2000, 0.1) == 6082);
  for (double eps : {0.5, 0.3, 0.1, 0.07}) {
    CAPTURE(eps);
    CHECK(jl_target_dim(100, eps / 2) >= 4 * jl_target_dim(100, eps) - 4);
  }
  CHECK_THROWS_AS(jl_target_dim(10, 1.0), ArgumentError);
  CHECK_THROWS_AS(jl_target_dim(10, 0.0), ArgumentError);
  CHECK_THROWS_AS(jl_target_dim(0, 0.5), ArgumentError);
}

TEST_CASE("sample_jl_map") {
  const JlMap a = sample_jl_map(300, 64, 17);
  const JlMap b = sample_jl_map(300, 64, 17);
  CHECK(a.q == b.q);
  CHECK(a.target_dim() == 64);
  CHECK(a.input_dim() == 300);
  CHECK_FALSE(a.q == sample_jl_map(300, 64, 18).q);

  // Column sums of N(0, 1/r) entries: the grand mean has sd 1/√(r·D).
  double mean = 0.0, second = 0.0;
  for (double v : a.q.values()) {
    mean += v;
    second += v * v;
  }
  mean /= static_cast<double>(a.q.size());
  second /= static_cast<double>(a.q.size());
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(64.0 * 300.0));
  CHECK(second == Approx(1.0 / 64).epsilon(0.05));
}

TEST_CASE("E‖Qx‖² matches ‖x‖²") {
  const DenseMatrix x = unit_rows(1, 200, 3);
  double acc = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const JlMap q = sample_jl_map(200, 512, 1000 + s);
    const Eigen::VectorXd y = q.q.view() * x.view().row(0).transpose();
    acc += y.squaredNorm();
  }
  CHECK(acc / 100 == Approx(1.0).epsilon(0.05));
}

TEST_CASE("inner product preservation") {
  SUBCASE("zero points pass trivially") {
    const JlMap q = sample_jl_map(5, 3, 1);
    const auto r = verify_inner_product_preservation(q, DenseMatrix(4, 5), 0.1);
    CHECK(r.pass);
    CHECK(r.pairs == 10);
  }
  SUBCASE("single point reduces to the norm check") {
    const DenseMatrix x = DenseMatrix::from_rows({{3.0, 4.0}});
    const JlMap q = sample_jl_map(2, 50, 2);
    const Eigen::VectorXd y = q.q.view() * x.view().row(0).transpose();
    const double rel = std::abs(y.squaredNorm() - 25.0) / 25.0;
    CHECK(verify_inner_product_preservation(q, x, rel * 1.001).pass);
    CHECK_FALSE(verify_inner_product_preservation(q, x, rel * 0.999).pass);
    CHECK(verify_inner_product_preservation(q, x, 0.5).worst_ratio == Approx(rel / 0.5));
  }
  SUBCASE("50 unit vectors in R^1000 within 20 seeds") {
    const DenseMatrix pts = unit_rows(50, 1000, 9);
    const std::size_t r = jl_target_dim(50, 0.2);
    CHECK(r == 787);  // ⌈200 ln 51⌉
    int passed_at = -1;
    for (int a = 0; a < 20 && passed_at < 0; ++a) {
      if (verify_inner_product_preservation(sample_jl_map(1000, r, 500 + a), pts, 0.2).pass) passed_at = a;
    }
    CHECK(passed_at >= 0);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(verify_inner_product_preservation(sample_jl_map(3, 2, 1), DenseMatrix(2, 4), 0.1),
                    DimensionError);
  }
}

TEST_CASE("theorem0_compress") {
  SUBCASE("zero matrix") {
    const CompressedApprox c = theorem0_compress(DenseMatrix(30, 20), 0.5, 1);
    CHECK(c.achieved_max_error == 0.0);
    CHECK(max_abs_norm(c.left) == 0.0);
  }
  SUBCASE("identity 500x500") {
    const CompressedApprox c = theorem0_compress(DenseMatrix::identity(500), 0.5, 4);
    CHECK(c.achieved_max_error <= 0.5);
    CHECK(c.reference_norm == Approx(1.0));
    // ⌈72 ln 1001 / 0.25⌉ = 1990 > 500.
    CHECK(c.rank_budget == 1990);
    CHECK_FALSE(c.nontrivial);
  }
  SUBCASE("gaussian 200x200 at 0.9") {
    const DenseMatrix x = test::gaussian_matrix(200, 200, 21);
    const CompressedApprox c = theorem0_compress(x, 0.9, 7);
    const double sigma1 = spectral_norm(x);
    const double measured = max_abs_difference(multiply(c.left, c.right), x);
    CHECK(measured <= 0.9 * sigma1);
    CHECK(measured == Approx(c.achieved_max_error).epsilon(1e-9));
    CHECK(c.retries_used <= 20);
  }
  SUBCASE("a hopeless sketch exhausts its retries") {
    CompressOptions opts;
    opts.sketch_dim = 1;
    opts.max_retries = 3;
    try {
      theorem0_compress(DenseMatrix::identity(60), 0.3, 1, opts);
      FAIL("expected ProbabilisticFailure");
    } catch (const ProbabilisticFailure& e) {
      CHECK(e.attempts() == 4);
      CHECK(e.best_error() > 0.3);
    }
  }
}

TEST_CASE("theorem2 pipeline") {
  SUBCASE("RBF N=2, 200x200, eps 0.2") {
    const auto spec = LvmSpec::rbf(2, 1.0);
    const PipelineResult p = theorem2_pipeline(spec, 200, 200, 0.2, 31);
    CHECK(p.approx.achieved_max_error <= 0.2);
    CHECK(max_abs_difference(multiply(p.approx.left, p.approx.right), p.reference) <= 0.2);
    CHECK(p.taylor.log_c_u == Approx(kLogCuRbf2).epsilon(1e-12));
    CHECK(p.taylor.log_c_v == Approx(kLogCvRbf2).epsilon(1e-12));
    // log r = log(8 ln 401) + 2 log(1 + 2(C_u + C_v + 1)/ε), C_u dominating.
    const double log_r = std::log(8 * std::log(401.0)) + 2 * (kLogCuRbf2 + std::log(2 / 0.2));
    CHECK(p.approx.log_rank_budget == Approx(log_r).epsilon(1e-12));
    CHECK(p.approx.rank <= p.taylor.n_tilde);
    CHECK(p.approx.retries_used >= 0);
  }
  SUBCASE("inner product N=500, 400x400, eps 0.5") {
    const auto spec = LvmSpec::inner_product(500, 1.0);
    const PipelineResult p = theorem2_pipeline(spec, 400, 400, 0.5, 3);
    CHECK(p.approx.achieved_max_error <= 0.5);

    CompressOptions opts;
    opts.sketch_dim = 300;
    const CompressedApprox c = theorem2_compress(p.taylor, p.reference, 0.5, 3, opts);
    CHECK(c.rank == 300);
    CHECK(c.rank < 500);
    CHECK(c.sketch == SketchKind::Gaussian);
    CHECK(c.nontrivial);
    CHECK(max_abs_difference(multiply(c.left, c.right), p.reference) <= 0.5);
    CHECK(c.achieved_max_error <= c.input_error + c.jl_error + 1e-12);
  }
  SUBCASE("the Taylor stage must leave half the budget") {
    const auto spec = LvmSpec::rbf(1, 1.0);
    const LatentSample s = sample_latents(spec, 10, 10, 1);
    const DenseMatrix x = generate_matrix(spec, s);
    const TaylorFactorization f = taylor_factorize(spec, s, 0.2);
    CHECK_THROWS_AS(theorem2_compress(f, x, 0.2, 1), ArgumentError);
  }
}

TEST_CASE("theorem3 piecewise") {
  const Box whole = Box::cube(1, 1.0);
  Box left = whole, right = whole;
  left.axes[0] = Interval{whole.axes[0].lo, 0.0, false};
  right.axes[0] = Interval{0.0, whole.axes[0].hi, true};
  const PiecewiseLvmSpec spec({Piece{LvmSpec::inner_product(1, 1.0), left, whole},
                               Piece{LvmSpec::rbf(1, 1.0), right, whole}});
  const PiecewisePipelineResult p = theorem3_pipeline(spec, 150, 150, 0.25, 5);
  CHECK(p.taylor.blocks_exact);
  CHECK(p.approx.achieved_max_error <= 0.25 * spec.sup_norm());
  CHECK(max_abs_difference(multiply(p.approx.left, p.approx.right), p.reference) <= 0.25);

  // P = 1: same contract as theorem 2 on the plain model.
  const auto rbf = LvmSpec::rbf(1, 1.0);
  const PiecewiseLvmSpec one({Piece{rbf, whole, whole}});
  const PiecewisePipelineResult q = theorem3_pipeline(one, 80, 60, 0.25, 2);
  const PipelineResult r = theorem2_pipeline(rbf, 80, 60, 0.25, 2);
  CHECK(q.approx.left == r.approx.left);
  CHECK(q.approx.right == r.approx.right);
  CHECK(q.approx.log_rank_budget == r.approx.log_rank_budget);
}

TEST_CASE("theorem4 symmetric") {
  const auto spec = LvmSpec::rbf(2, 1.0);
  SUBCASE("n = 1") {
    const SymmetricResult s = theorem4_compress(spec, sample_alphas(spec, 1, 4), 0.3, 4);
    CHECK(s.reference(0, 0) == 1.0);
    CHECK(s.approx.achieved_max_error <= 1e-12);
  }
  SUBCASE("RBF graphon n = 200") {
    const SymmetricResult s = theorem4_compress(spec, sample_alphas(spec, 200, 6), 0.2, 6);
    CHECK(s.approx.achieved_max_error <= 0.2);
    CHECK(s.reference == s.reference.transpose());
    CHECK(max_abs_difference(multiply(s.approx.left, s.approx.right), s.reference) <= 0.2);
    // ln(2n + 1) sizing.
    const double log_r = std::log(8 * std::log(401.0)) + 2 * (kLogCuRbf2 + std::log(2 / 0.2));
    CHECK(s.approx.log_rank_budget == Approx(log_r).epsilon(1e-12));
  }
}

TEST_CASE("compressed save and load") {
  const auto dir = test::scratch_dir("jl_io");
  const CompressedApprox c = theorem0_compress(test::gaussian_matrix(40, 30, 2), 0.8, 12);
  save_compressed(c, dir / "c");
  const CompressedApprox d = load_compressed(dir / "c");
  CHECK(d.left == c.left);
  CHECK(d.right == c.right);
  CHECK(d.rank == c.rank);
  CHECK(d.rank_budget == c.rank_budget);
  CHECK(d.seed == c.seed);
  CHECK(d.achieved_max_error == c.achieved_max_error);
  CHECK(d.nontrivial == c.nontrivial);
  CHECK(d.sketch == c.sketch);
}
