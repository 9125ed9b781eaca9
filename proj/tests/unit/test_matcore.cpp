#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "logrank/errors.hpp"
#include "logrank/matcore.hpp"
#include "logrank/matrix_io.hpp"
#include "test_support.hpp"

using namespace logrank;
using doctest::Approx;

namespace {

DenseMatrix diag2(double a, double b) { return DenseMatrix::from_rows({{a, 0.0}, {0.0, b}}); }

double orthogonality_residual(const DenseMatrix& q, bool columns) {
  const Eigen::MatrixXd m = q.view();
  const Eigen::MatrixXd g = columns ? Eigen::MatrixXd(m.transpose() * m) : Eigen::MatrixXd(m * m.transpose());
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("dense matrix rejects bad shapes and non-finite entries") {
  CHECK_THROWS_AS(DenseMatrix::from_row_major(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(DenseMatrix::from_rows({{1.0, 2.0}, {3.0}}), DimensionError);
  CHECK_THROWS_AS(DenseMatrix::from_rows({{1.0, NAN}}), ArgumentError);
  CHECK_THROWS_AS(DenseMatrix::from_rows({{INFINITY}}), ArgumentError);
  CHECK_THROWS_AS(multiply(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionError);
}

TEST_CASE("max_abs_norm") {
  CHECK(max_abs_norm(DenseMatrix(2, 2)) == 0.0);
  CHECK(max_abs_norm(DenseMatrix::from_rows({{1, -3}, {2, 0.5}})) == 3.0);
  CHECK(max_abs_norm(DenseMatrix::identity(5)) == 1.0);
}

TEST_CASE("spectral_norm") {
  CHECK(spectral_norm(DenseMatrix::identity(7)) == Approx(1.0).epsilon(1e-14));
  CHECK(spectral_norm(diag2(3, 1)) == Approx(3.0).epsilon(1e-14));
  CHECK(spectral_norm(DenseMatrix::from_rows({{1, 1}, {1, 1}})) == Approx(2.0).epsilon(1e-14));
  CHECK(spectral_norm(DenseMatrix(3, 4)) == 0.0);
}

TEST_CASE("svd of small closed-form cases") {
  SUBCASE("diagonal") {
    const SvdResult s = svd(diag2(2, 1));
    REQUIRE(s.singular_values.size() == 2);
    CHECK(s.singular_values[0] == Approx(2.0));
    CHECK(s.singular_values[1] == Approx(1.0));
    CHECK(std::abs(s.u(0, 0)) == Approx(1.0));
    CHECK(std::abs(s.u(1, 1)) == Approx(1.0));
    CHECK(std::abs(s.vt(0, 0)) == Approx(1.0));
    CHECK(std::abs(s.vt(1, 1)) == Approx(1.0));
  }
  SUBCASE("rank one outer product") {
    const std::vector<double> a = {1, 2, 3}, b = {4, -1, 0, 2};
    std::vector<std::vector<double>> rows;
    for (double x : a) rows.push_back({x * b[0], x * b[1], x * b[2], x * b[3]});
    const SvdResult s = svd(DenseMatrix::from_rows(rows));
    CHECK(s.singular_values[0] == Approx(std::sqrt(14.0) * std::sqrt(21.0)).epsilon(1e-13));
    for (std::size_t k = 1; k < s.singular_values.size(); ++k) {
      CHECK(s.singular_values[k] <= 1e-10 * s.singular_values[0]);
    }
  }
  SUBCASE("random 20x30 is orthonormal") {
    const SvdResult s = svd(test::gaussian_matrix(20, 30, 3));
    CHECK(s.u.rows() == 20);
    CHECK(s.u.cols() == 20);
    CHECK(s.vt.rows() == 20);
    CHECK(s.vt.cols() == 30);
    CHECK(orthogonality_residual(s.u, true) <= 1e-10);
    CHECK(orthogonality_residual(s.vt, false) <= 1e-10);
    CHECK(std::is_sorted(s.singular_values.rbegin(), s.singular_values.rend()));
  }
}

TEST_CASE("truncate_svd") {
  const DenseMatrix x = test::gaussian_matrix(12, 9, 5);
  const SvdResult s = svd(x);
  CHECK(max_abs_difference(truncate_svd(s, 9), x) <= 1e-10);
  CHECK(max_abs_norm(truncate_svd(s, 0)) == 0.0);

  const DenseMatrix t = truncate_svd(svd(diag2(3, 1)), 1);
  CHECK(max_abs_difference(t, diag2(3, 0)) <= 1e-14);
  CHECK_THROWS_AS(truncate_svd(s, 10), ArgumentError);
}

TEST_CASE("mu_r") {
  CHECK(mu_r(diag2(3, 1), 1) == Approx(1.0));
  CHECK(mu_r(DenseMatrix::from_rows({{1, 2}, {2, 4}, {3, 6}}), 1) <= 1e-10);
  CHECK(mu_r(DenseMatrix::identity(10), 5) == Approx(1.0));
  CHECK(mu_r(diag2(3, 1), 2) == 0.0);
}

TEST_CASE("rank_eps_upper_bound closed-form cases") {
  CHECK(rank_eps_upper_bound(DenseMatrix(4, 4), 0.5).rank_upper_bound == 0);
  CHECK(rank_eps_upper_bound(diag2(3, 1), 0.5).rank_upper_bound == 2);
  CHECK(rank_eps_upper_bound(diag2(3, 1), 1.0).rank_upper_bound == 1);

  const auto r = rank_eps_upper_bound(diag2(3, 1), 0.5);
  REQUIRE(r.mu_curve.size() == 3);
  CHECK(r.mu_curve[0] == 3.0);
  CHECK(r.mu_curve[2] == 0.0);
  CHECK_THROWS_AS(rank_eps_upper_bound(diag2(3, 1), 0.0), ArgumentError);
}

// Fixture: RBF, N = 2, R = 1, uniform ball, 50x50, latent seed 20240611.
// Reference ranks from an independent full scan with Eigen::JacobiSVD:
// μ_16 = 1.11885e-3 > 1e-3 ≥ μ_17 = 3.93812e-4.
TEST_CASE("50x50 RBF regression fixture") {
  const DenseMatrix x = read_matrix(test::fixture("rbf_n2_50x50.epsr"));
  REQUIRE(x.rows() == 50);
  CHECK(rank_eps_upper_bound(x, 1e-3).rank_upper_bound == 17);
  CHECK(rank_eps_upper_bound(x, 1e-2).rank_upper_bound == 12);
  CHECK(rank_eps_upper_bound(x, 1e-1).rank_upper_bound == 7);

  const auto curve = rank_eps_upper_bound(x, 1e-3).mu_curve;
  CHECK(curve[16] == Approx(1.11885e-3).epsilon(1e-5));
  CHECK(curve[17] == Approx(3.93812e-4).epsilon(1e-5));
}

// μ_r is not monotone: the rank-9 truncation of the fixture is worse in max
// norm than the rank-8 one (0.0350037 vs 0.0338499 by JacobiSVD).
TEST_CASE("mu curve can increase") {
  const DenseMatrix x = read_matrix(test::fixture("rbf_n2_50x50.epsr"));
  const SvdResult s = svd(x);
  const auto curve = mu_curve(x, s, 12);
  CHECK(curve[8] == Approx(0.0338499).epsilon(1e-5));
  CHECK(curve[9] == Approx(0.0350037).epsilon(1e-5));
  CHECK(curve[9] > curve[8]);
}

TEST_CASE("first_rank_at_or_below") {
  const std::vector<double> c = {1.0, 0.5, 0.6, 0.2, 0.0};
  CHECK(first_rank_at_or_below(c, 0.55) == 1);
  CHECK(first_rank_at_or_below(c, 0.2) == 3);
  CHECK(first_rank_at_or_below(c, 2.0) == 0);
  CHECK(first_rank_at_or_below(c, -1.0) == 5);
}

TEST_CASE("rank bound is nonincreasing in epsilon") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const DenseMatrix x = test::gaussian_matrix(30 + seed, 40, seed);
    const SvdResult s = svd(x);
    std::size_t previous = s.rank_capacity();
    for (double eps = 1e-3; eps < 10.0; eps *= 1.7) {
      const std::size_t r = rank_eps_upper_bound(x, s, eps).rank_upper_bound;
      CHECK(r <= previous);
      previous = r;
    }
  }
}

TEST_CASE("EPSR round trip and corrupt input") {
  const auto dir = test::scratch_dir("matcore_io");
  const DenseMatrix x = DenseMatrix::from_rows({{1.0, -0.0, 1e-310}, {3.141592653589793, -2.5e300, 7.0}});
  write_matrix(x, dir / "x.epsr");
  const DenseMatrix y = read_matrix(dir / "x.epsr");
  CHECK(encode_epsr(y) == encode_epsr(x));
  CHECK(std::signbit(y(0, 1)));

  auto bytes = encode_epsr(x);
  CHECK(bytes.size() == kEpsrHeaderSize + 6 * 8);
  CHECK(bytes[0] == 'E');
  CHECK(bytes[4] == kEpsrVersion);

  SUBCASE("wrong magic") {
    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(decode_epsr(bad), FormatError);
  }
  SUBCASE("truncated payload") {
    auto bad = bytes;
    bad.pop_back();
    try {
      decode_epsr(bad);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() == kEpsrHeaderSize + 6 * 8 - 1);
    }
  }
  SUBCASE("truncated header") {
    CHECK_THROWS_AS(decode_epsr(std::span(bytes).first(10)), FormatError);
  }
  SUBCASE("wrong version") {
    auto bad = bytes;
    bad[4] = 2;
    CHECK_THROWS_AS(decode_epsr(bad), FormatError);
  }
  SUBCASE("non-finite payload") {
    auto bad = bytes;
    const double inf = std::numeric_limits<double>::infinity();
    std::memcpy(bad.data() + kEpsrHeaderSize, &inf, sizeof inf);
    CHECK_THROWS_AS(decode_epsr(bad), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_matrix(dir / "absent.epsr"), IoError);
  }
}

TEST_CASE("numerical_rank") {
  CHECK(numerical_rank(DenseMatrix::from_rows({{1, 2}, {2, 4}})) == 1);
  CHECK(numerical_rank(DenseMatrix::identity(4)) == 4);
  CHECK(numerical_rank(DenseMatrix(3, 3)) == 0);
}
