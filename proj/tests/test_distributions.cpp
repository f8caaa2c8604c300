#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"

using cmvn::CmvnParams;
using cmvn::Matrix;
using cmvn::MvnParams;
using cmvn::SpdMatrix;

namespace {

MvnParams unit_params(std::size_t r, std::size_t p) {
  return MvnParams{Matrix(r, p), SpdMatrix::identity(r), SpdMatrix::identity(p)};
}

}  // namespace

TEST(MvnDensityTest, AtTheMean) {
  const auto params = unit_params(2, 2);
  EXPECT_NEAR(cmvn::mvn_log_density(params.mean, params), -2.0 * std::log(2.0 * M_PI), 1e-14);
  EXPECT_NEAR(cmvn::mvn_log_density(params.mean, params), -3.67575, 1e-5);
}

TEST(MvnDensityTest, SingleEntryShift) {
  const auto params = unit_params(2, 3);
  const double base = cmvn::mvn_log_density(params.mean, params);
  for (double t : {0.5, 1.0, 3.0}) {
    Matrix x = params.mean;
    x(0, 0) += t;
    EXPECT_NEAR(base - cmvn::mvn_log_density(x, params), 0.5 * t * t, 1e-13);
  }
}

TEST(MvnDensityTest, KroneckerConsistency) {
  cmvn::SeededGenerator rng(101);
  for (int t = 0; t < 200; ++t) {
    const std::size_t r = 1 + rng.below(4), p = 1 + rng.below(4);
    const auto params = gen::mvn(r, p, rng);
    const Matrix x = params.mean + gen::matrix(r, p, rng, 1.5);
    EXPECT_NEAR(cmvn::mvn_log_density(x, params),
                oracle::vec_mvn_log_density(x, params.mean, params.sigma.matrix(), params.psi.matrix()), 1e-10);
  }
}

TEST(MvnDensityTest, RejectsShapeMismatch) {
  const auto params = unit_params(2, 3);
  EXPECT_THROW(cmvn::mvn_log_density(Matrix(3, 2), params), cmvn::DimensionMismatch);
}

TEST(MvnDensityTest, NormalizationNeutrality) {
  cmvn::SeededGenerator rng(7);
  for (int t = 0; t < 100; ++t) {
    const std::size_t r = 1 + rng.below(4), p = 1 + rng.below(4);
    const auto params = gen::mvn(r, p, rng);
    const auto normalized = cmvn::normalize_scales(params);
    EXPECT_NEAR(normalized.sigma(0, 0), 1.0, 1e-15);
    const Matrix x = params.mean + gen::matrix(r, p, rng);
    EXPECT_NEAR(cmvn::mvn_log_density(x, params), cmvn::mvn_log_density(x, normalized), 1e-12);
    const Matrix k0 = cmvn::kronecker(params.psi.matrix(), params.sigma.matrix());
    const Matrix k1 = cmvn::kronecker(normalized.psi.matrix(), normalized.sigma.matrix());
    EXPECT_LT((k0 - k1).frobenius_norm() / k0.frobenius_norm(), 1e-12);
  }
}

TEST(MvnDensityTest, InflationFactorization) {
  cmvn::SeededGenerator rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t r = 1 + rng.below(4), p = 1 + rng.below(4);
    const auto params = gen::mvn(r, p, rng);
    const double es = rng.uniform(1.0, 20.0), ep = rng.uniform(1.0, 20.0);
    const Matrix x = params.mean + gen::matrix(r, p, rng, 3.0);
    const MvnParams both{params.mean, params.sigma.scaled(es), params.psi.scaled(ep)};
    const MvnParams one{params.mean, params.sigma.scaled(es * ep), params.psi};
    EXPECT_NEAR(cmvn::mvn_log_density(x, both), cmvn::mvn_log_density(x, one), 1e-12);
  }
}

TEST(CmvnDensityTest, AtTheMean) {
  const CmvnParams c{unit_params(2, 2), 0.9, 4.0};
  EXPECT_NEAR(cmvn::cmvn_log_density(c.base.mean, c), std::log(0.90625) - 2.0 * std::log(2.0 * M_PI), 1e-14);
  EXPECT_NEAR(cmvn::posterior_good_prob(c.base.mean, c), 0.9 / 0.90625, 1e-15);
  EXPECT_NEAR(cmvn::posterior_good_prob(c.base.mean, c), 0.993103, 1e-6);
}

TEST(CmvnDensityTest, AlphaNearOne) {
  cmvn::SeededGenerator rng(4);
  const auto base = gen::mvn(2, 3, rng);
  const CmvnParams c{base, 1.0 - 1e-12, 5.0};
  const Matrix x = base.mean + gen::matrix(2, 3, rng);
  EXPECT_NEAR(cmvn::cmvn_log_density(x, c), cmvn::mvn_log_density(x, base), 1e-9);
}

TEST(CmvnDensityTest, MatchesTwoTermOracle) {
  cmvn::SeededGenerator rng(12);
  for (int t = 0; t < 100; ++t) {
    const std::size_t r = 1 + rng.below(3), p = 1 + rng.below(3);
    const auto c = gen::cmvn_params(r, p, rng);
    const Matrix x = c.base.mean + gen::matrix(r, p, rng, 1.5);
    const auto& b = c.base;
    const double good = oracle::vec_mvn_log_density(x, b.mean, b.sigma.matrix(), b.psi.matrix());
    const double bad = oracle::vec_mvn_log_density(x, b.mean, b.sigma.matrix(), b.psi.matrix(), c.eta);
    const double expected = std::log(c.alpha * std::exp(good) + (1.0 - c.alpha) * std::exp(bad));
    EXPECT_NEAR(cmvn::cmvn_log_density(x, c), expected, 1e-9);
    const double v = c.alpha * std::exp(good) / std::exp(expected);
    EXPECT_NEAR(cmvn::posterior_good_prob(x, c), v, 1e-9);
  }
}

TEST(CmvnDensityTest, NoInflationGivesAlpha) {
  cmvn::SeededGenerator rng(13);
  const auto base = gen::mvn(2, 2, rng);
  const CmvnParams c{base, 0.8, cmvn::kEtaMin};
  for (int t = 0; t < 20; ++t) {
    const Matrix x = base.mean + gen::matrix(2, 2, rng);
    EXPECT_NEAR(cmvn::posterior_good_prob(x, c), 0.8, 1e-3);
  }
}

TEST(CmvnParamsTest, Domain) {
  const auto base = unit_params(1, 1);
  EXPECT_THROW((CmvnParams{base, 0.4, 2.0}.check()), cmvn::DomainError);
  EXPECT_THROW((CmvnParams{base, 1.0, 2.0}.check()), cmvn::DomainError);
  EXPECT_THROW((CmvnParams{base, 0.9, 1.0}.check()), cmvn::DomainError);
  EXPECT_NO_THROW((CmvnParams{base, 0.9, cmvn::kEtaMin}.check()));
}

TEST(RobustnessWeightTest, Examples) {
  EXPECT_NEAR(cmvn::h_weight(0.0, 0.9, 4.0, 2, 2), 0.9 / 0.90625, 1e-15);
  const double far = cmvn::h_weight(1e4, 0.9, 4.0, 2, 2);
  EXPECT_LT(far, 1e-300);
  EXPECT_GE(far, 0.0);
  EXPECT_NEAR(cmvn::w_weight(0.0, 1.0 - 1e-15, 4.0, 2, 2), 1.0, 1e-12);
  EXPECT_NEAR(cmvn::w_weight(1e5, 0.9, 4.0, 2, 2), 0.25, 1e-15);
  EXPECT_THROW(cmvn::h_weight(-1.0, 0.9, 4.0, 2, 2), cmvn::DomainError);
  EXPECT_THROW(cmvn::h_weight(1.0, 0.3, 4.0, 2, 2), cmvn::DomainError);
  EXPECT_THROW(cmvn::h_weight(1.0, 0.9, 1.0, 2, 2), cmvn::DomainError);
}

TEST(RobustnessWeightTest, MonotoneAndBounded) {
  cmvn::SeededGenerator rng(21);
  for (int t = 0; t < 50; ++t) {
    const double alpha = rng.uniform(0.51, 0.999), eta = rng.uniform(1.01, 50.0);
    const std::size_t r = 1 + rng.below(4), p = 1 + rng.below(4);
    double last_h = 2.0, last_w = 2.0;
    // Step sizes keep h away from exact 0 so strictness is observable.
    for (double d = 0.0; d < 200.0; d += 0.5) {
      const double h = cmvn::h_weight(d, alpha, eta, r, p), w = cmvn::w_weight(d, alpha, eta, r, p);
      if (h > 1e-300) EXPECT_LT(h, last_h);
      // Once (η−1)h drops below one ulp of 1, w rounds to 1/η.
      if ((eta - 1.0) * h > 1e-12) EXPECT_LT(w, last_w);
      EXPECT_GE(w, 1.0 / eta - 1e-15);
      EXPECT_LE(w, 1.0);
      last_h = h;
      last_w = w;
    }
  }
}

TEST(RobustnessWeightTest, AgreesWithPosterior) {
  cmvn::SeededGenerator rng(22);
  for (int t = 0; t < 200; ++t) {
    const std::size_t r = 1 + rng.below(3), p = 1 + rng.below(3);
    const auto c = gen::cmvn_params(r, p, rng);
    const Matrix x = c.base.mean + gen::matrix(r, p, rng, rng.uniform(0.1, 4.0));
    const double delta = cmvn::trace_quad_form(x, c.base.mean, c.base.sigma, c.base.psi);
    const double h = cmvn::h_weight(delta, c.alpha, c.eta, r, p);
    const double v = cmvn::posterior_good_prob(x, c);
    EXPECT_NEAR(h, v, 1e-12);
    EXPECT_EQ(h > 0.5, v > 0.5);
  }
}

TEST(SamplerTest, LawOfLargeNumbers) {
  cmvn::SeededGenerator rng(31);
  const MvnParams params{Matrix::from_rows({{1.0, -2.0}, {0.5, 3.0}}), SpdMatrix::identity(2), SpdMatrix::identity(2)};
  const int n = 10000;
  Matrix mean(2, 2);
  for (int i = 0; i < n; ++i) mean += cmvn::sample_mvn(params, rng);
  mean *= 1.0 / n;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(mean(i, j), params.mean(i, j), 4.0 / std::sqrt(n));
}

TEST(SamplerTest, CovarianceConverges) {
  cmvn::SeededGenerator rng(32);
  const auto params = gen::mvn(2, 3, rng);
  const Eigen::MatrixXd truth = oracle::kron(oracle::to_eigen(params.psi.matrix()), oracle::to_eigen(params.sigma.matrix()));
  std::vector<double> errors;
  for (int n : {1000, 30000}) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd d = oracle::vec(oracle::to_eigen(cmvn::sample_mvn(params, rng) - params.mean));
      acc += d * d.transpose();
    }
    acc /= n;
    errors.push_back((acc - truth).norm() / truth.norm());
  }
  EXPECT_LT(errors[1], errors[0]);
  EXPECT_LT(errors[1], 0.05);
}

TEST(SamplerTest, Deterministic) {
  cmvn::SeededGenerator a(99), b(99);
  const auto params = gen::mvn(3, 2, a);
  gen::mvn(3, 2, b);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(cmvn::sample_mvn(params, a), cmvn::sample_mvn(params, b));
}

TEST(SamplerTest, BadDrawsInflateDelta) {
  cmvn::SeededGenerator rng(33);
  const auto base = gen::mvn(2, 2, rng);
  const CmvnParams c{base, 0.6, 100.0};
  double sum = 0.0;
  int bad = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto d = cmvn::sample_cmvn(c, rng);
    if (d.good) continue;
    sum += cmvn::trace_quad_form(d.x, base.mean, base.sigma, base.psi);
    ++bad;
  }
  // δ/η ~ χ²_rp, so the mean is η·rp with standard error η·√(2rp/bad).
  EXPECT_NEAR(sum / bad, 400.0, 4.0 * 100.0 * std::sqrt(8.0 / bad));
}

TEST(SamplerTest, GoodFraction) {
  cmvn::SeededGenerator rng(34);
  const CmvnParams c{unit_params(2, 2), 0.75, 5.0};
  const int n = 10000;
  int good = 0;
  for (int i = 0; i < n; ++i) good += cmvn::sample_cmvn(c, rng).good;
  EXPECT_NEAR(good / static_cast<double>(n), 0.75, 3.0 * std::sqrt(0.75 * 0.25 / n));
  const CmvnParams almost{unit_params(2, 2), 1.0 - 1e-12, 5.0};
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(cmvn::sample_cmvn(almost, rng).good);
}
