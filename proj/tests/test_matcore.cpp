#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"

using cmvn::Matrix;
using cmvn::SpdMatrix;

TEST(MatrixTest, ConstructorsValidate) {
  EXPECT_THROW(Matrix(0, 2), cmvn::DomainError);
  EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), cmvn::DimensionMismatch);
  EXPECT_THROW(Matrix(1, 2, {1.0, std::nan("")}), cmvn::DomainError);
  EXPECT_THROW(Matrix(1, 1, {INFINITY}), cmvn::DomainError);
  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.transposed()(2, 1), 6.0);
}

TEST(MatrixTest, ProductAndKronecker) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{0, 1}, {1, 0}});
  EXPECT_EQ(a * b, Matrix::from_rows({{2, 1}, {4, 3}}));
  const Matrix k = cmvn::kronecker(a, b);
  EXPECT_EQ(k.rows(), 4u);
  EXPECT_EQ(k(0, 1), 1.0);
  EXPECT_EQ(k(3, 2), 4.0);
  EXPECT_EQ(k(2, 1), 3.0);
}

TEST(CholeskyTest, Identity) {
  EXPECT_EQ(cmvn::cholesky(Matrix::identity(3)).matrix(), Matrix::identity(3));
}

TEST(CholeskyTest, TwoByTwo) {
  const auto l = cmvn::cholesky(SpdMatrix(Matrix::from_rows({{4, 2}, {2, 3}})));
  EXPECT_DOUBLE_EQ(l(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(l(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(l(1, 0), 1.0);
  EXPECT_NEAR(l(1, 1), std::sqrt(2.0), 1e-15);
  EXPECT_LT((l.reconstruct() - Matrix::from_rows({{4, 2}, {2, 3}})).max_abs(), 1e-15);
}

TEST(CholeskyTest, IndefiniteRejected) {
  EXPECT_THROW(SpdMatrix(Matrix::from_rows({{1, 2}, {2, 1}})), cmvn::NotPositiveDefinite);
  EXPECT_THROW(cmvn::cholesky(Matrix::from_rows({{1, 2}, {2, 1}})), cmvn::NotPositiveDefinite);
  EXPECT_THROW(SpdMatrix(Matrix(2, 2)), cmvn::NotPositiveDefinite);
}

TEST(SpdMatrixTest, SymmetryTolerance) {
  const SpdMatrix s(Matrix::from_rows({{2.0, 0.5 + 4e-11}, {0.5 - 4e-11, 1.0}}));
  EXPECT_EQ(s(0, 1), s(1, 0));
  EXPECT_NEAR(s(0, 1), 0.5, 1e-15);
  EXPECT_THROW(SpdMatrix(Matrix::from_rows({{2.0, 0.5}, {0.5 + 1e-9, 1.0}})), cmvn::DomainError);
}

TEST(SpdMatrixTest, ReconstructionProperty) {
  cmvn::SeededGenerator rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(6);
    const auto s = gen::spd(n, rng, 0.1);
    const double rel = (s.factor().reconstruct() - s.matrix()).frobenius_norm() / s.matrix().frobenius_norm();
    EXPECT_LT(rel, 1e-12);
  }
}

TEST(LogDetTest, Examples) {
  EXPECT_EQ(cmvn::log_det_spd(SpdMatrix::identity(4)), 0.0);
  const double d[] = {2.0, 8.0};
  EXPECT_NEAR(cmvn::log_det_spd(SpdMatrix(Matrix::diagonal(d))), std::log(16.0), 1e-15);
  EXPECT_NEAR(std::log(16.0), 2.7726, 1e-4);
}

TEST(LogDetTest, MatchesCofactorExpansion) {
  cmvn::SeededGenerator rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(4);
    const auto s = gen::spd(n, rng);
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] = s(i, j);
    EXPECT_NEAR(s.log_det(), std::log(oracle::cofactor_det(a)), 1e-11);
  }
}

TEST(TraceQuadFormTest, Examples) {
  cmvn::SeededGenerator rng(3);
  const auto sigma = gen::spd(2, rng), psi = gen::spd(3, rng);
  const Matrix m = gen::matrix(2, 3, rng);
  EXPECT_EQ(cmvn::trace_quad_form(m, m, sigma, psi), 0.0);
  const Matrix x = gen::matrix(2, 3, rng);
  const double f = (x - m).frobenius_norm();
  EXPECT_NEAR(cmvn::trace_quad_form(x, m, SpdMatrix::identity(2), SpdMatrix::identity(3)), f * f, 1e-12);
  EXPECT_THROW(cmvn::trace_quad_form(x, m, SpdMatrix::identity(3), SpdMatrix::identity(3)), cmvn::DimensionMismatch);
}

TEST(TraceQuadFormTest, MatchesKroneckerOracle) {
  cmvn::SeededGenerator rng(17);
  for (int t = 0; t < 200; ++t) {
    const std::size_t r = 1 + rng.below(4), p = 1 + rng.below(4);
    const auto sigma = gen::spd(r, rng), psi = gen::spd(p, rng);
    const Matrix x = gen::matrix(r, p, rng, 2.0), m = gen::matrix(r, p, rng);
    const Eigen::VectorXd d = oracle::vec(oracle::to_eigen(x - m));
    const Eigen::MatrixXd cov = oracle::kron(oracle::to_eigen(psi.matrix()), oracle::to_eigen(sigma.matrix()));
    const double expected = d.dot(cov.inverse() * d);
    EXPECT_NEAR(cmvn::trace_quad_form(x, m, sigma, psi), expected, 1e-9 * (1.0 + expected));
    EXPECT_NEAR(cmvn::trace_quad_form(x, m, sigma, psi), oracle::trace_form(x, m, sigma.matrix(), psi.matrix()),
                1e-9 * (1.0 + expected));
  }
}

TEST(TraceQuadFormTest, ScaleCancellation) {
  cmvn::SeededGenerator rng(19);
  for (int t = 0; t < 100; ++t) {
    const std::size_t r = 1 + rng.below(4), p = 1 + rng.below(4);
    const auto sigma = gen::spd(r, rng), psi = gen::spd(p, rng);
    const Matrix x = gen::matrix(r, p, rng), m = gen::matrix(r, p, rng);
    const double c = std::exp(rng.uniform(-3.0, 3.0));
    const double a = cmvn::trace_quad_form(x, m, sigma, psi);
    const double b = cmvn::trace_quad_form(x, m, sigma.scaled(c), psi.scaled(1.0 / c));
    EXPECT_NEAR(a, b, 1e-11 * (1.0 + a));
  }
}

TEST(TraceQuadFormTest, TranspositionInvariance) {
  cmvn::SeededGenerator rng(23);
  for (int t = 0; t < 100; ++t) {
    const std::size_t r = 1 + rng.below(4), p = 1 + rng.below(4);
    const auto sigma = gen::spd(r, rng), psi = gen::spd(p, rng);
    const Matrix x = gen::matrix(r, p, rng), m = gen::matrix(r, p, rng);
    const double a = cmvn::trace_quad_form(x, m, sigma, psi);
    const double b = cmvn::trace_quad_form(x.transposed(), m.transposed(), psi, sigma);
    EXPECT_NEAR(a, b, 1e-11 * (1.0 + a));
  }
}

TEST(SeededGeneratorTest, Deterministic) {
  cmvn::SeededGenerator a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
  EXPECT_EQ(a.draws(), 100u);
}

TEST(SeededGeneratorTest, NormalUsesTwoDraws) {
  cmvn::SeededGenerator a(1);
  a.normal();
  EXPECT_EQ(a.draws(), 2u);
}

TEST(SeededGeneratorTest, BelowIsUniform) {
  cmvn::SeededGenerator rng(9);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5.0 * std::sqrt(n / 7.0));
  EXPECT_THROW(rng.below(0), cmvn::DomainError);
}

TEST(SeededGeneratorTest, SplitStreamsDiffer) {
  const cmvn::SeededGenerator root(7);
  auto s1 = root.split(1), s2 = root.split(2), s1b = root.split(1);
  EXPECT_NE(s1.next_u64(), s2.next_u64());
  s1 = root.split(1);
  EXPECT_EQ(s1.next_u64(), s1b.next_u64());
  EXPECT_EQ(root.draws(), 0u);
}

TEST(ParallelForTest, CoversEveryIndexAndRethrows) {
  std::vector<int> hits(57, 0);
  cmvn::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(cmvn::parallel_for(
                   10,
                   [](std::size_t i) {
                     if (i == 3) throw cmvn::DomainError("boom");
                   },
                   3),
               cmvn::DomainError);
}
