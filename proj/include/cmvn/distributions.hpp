#pragma once

// Matrix-variate normal (MVN) and contaminated matrix-variate normal (CMVN)
// densities, samplers, the posterior probability of being a good point and the
// robustness weights h(δ) and w(δ). All density arithmetic is in log space.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cmvn/error.hpp"
#include "cmvn/matrix.hpp"
#include "cmvn/random.hpp"

namespace cmvn {

inline constexpr double kEtaMin = 1.0001;
inline const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

struct MvnParams {
  Matrix mean;      // r×p
  SpdMatrix sigma;  // r×r row covariance
  SpdMatrix psi;    // p×p column covariance

  std::size_t rows() const noexcept { return mean.rows(); }
  std::size_t cols() const noexcept { return mean.cols(); }

  void check() const {
    if (mean.empty() || sigma.dim() != mean.rows() || psi.dim() != mean.cols())
      throw DimensionMismatch("MvnParams: sigma must be r×r and psi p×p for an r×p mean");
  }

  bool operator==(const MvnParams&) const = default;
};

// Rescales so that Σ[0,0] = 1, moving the factor into Ψ. Ψ⊗Σ is unchanged.
inline MvnParams normalize_scales(MvnParams params) {
  const double s11 = params.sigma(0, 0);
  if (s11 != 1.0) {
    params.sigma = params.sigma.divided(s11);
    params.psi = params.psi.scaled(s11);
  }
  return params;
}

inline MvnParams make_mvn(Matrix mean, SpdMatrix sigma, SpdMatrix psi) {
  MvnParams params{std::move(mean), std::move(sigma), std::move(psi)};
  params.check();
  return normalize_scales(std::move(params));
}

struct CmvnParams {
  MvnParams base;
  double alpha = 1.0;  // proportion of good points
  double eta = kEtaMin;  // inflation of the bad-point scale

  // Public invariant: α ∈ (0.5, 1), η ≥ η_min.
  void check(double eta_min = kEtaMin) const {
    base.check();
    if (!(alpha > 0.5 && alpha < 1.0))
      throw DomainError("CmvnParams: alpha must lie in (0.5, 1), got " + std::to_string(alpha));
    if (!(eta >= eta_min) || !std::isfinite(eta))
      throw DomainError("CmvnParams: eta must be >= eta_min, got " + std::to_string(eta));
  }

  bool operator==(const CmvnParams&) const = default;
};

namespace detail {

inline double log_sum_exp(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double mvn_log_density_from_delta(double delta, double log_det_sigma, double log_det_psi,
                                         std::size_t r, std::size_t p) noexcept {
  const double rd = static_cast<double>(r), pd = static_cast<double>(p);
  return -0.5 * rd * pd * kLogTwoPi - 0.5 * pd * log_det_sigma - 0.5 * rd * log_det_psi - 0.5 * delta;
}

struct CmvnTerms {
  double log_good;     // log α + log f_MVN(X | M, Σ, Ψ)
  double log_bad;      // log(1−α) + log f_MVN(X | M, ηΣ, Ψ)
  double log_density;  // log f_CMVN
};

// α ∈ (0, 1] is accepted here: fitted components are not projected into (0.5, 1).
inline CmvnTerms cmvn_terms(double delta, double log_det_sigma, double log_det_psi, std::size_t r,
                            std::size_t p, double alpha, double eta) noexcept {
  const double rd = static_cast<double>(r), pd = static_cast<double>(p);
  const double base = -0.5 * rd * pd * kLogTwoPi - 0.5 * pd * log_det_sigma - 0.5 * rd * log_det_psi;
  const double log_eta = std::log(eta);
  CmvnTerms t{};
  t.log_good = std::log(alpha) + base - 0.5 * delta;
  t.log_bad = alpha < 1.0 ? std::log1p(-alpha) + base - 0.5 * rd * pd * log_eta - 0.5 * delta / eta
                          : -std::numeric_limits<double>::infinity();
  t.log_density = log_sum_exp(t.log_good, t.log_bad);
  return t;
}

inline void require_shape(const Matrix& x, const MvnParams& params, const char* what) {
  params.check();
  if (x.rows() != params.rows() || x.cols() != params.cols())
    throw DimensionMismatch(std::string(what) + ": observation shape does not match parameters");
}

}  // namespace detail

inline double mvn_log_density(const Matrix& x, const MvnParams& params) {
  detail::require_shape(x, params, "mvn_log_density");
  const double delta = trace_quad_form(x, params.mean, params.sigma, params.psi);
  return detail::mvn_log_density_from_delta(delta, params.sigma.log_det(), params.psi.log_det(), x.rows(),
                                            x.cols());
}

inline double cmvn_log_density(const Matrix& x, const CmvnParams& params) {
  detail::require_shape(x, params.base, "cmvn_log_density");
  params.check();
  const auto& b = params.base;
  const double delta = trace_quad_form(x, b.mean, b.sigma, b.psi);
  return detail::cmvn_terms(delta, b.sigma.log_det(), b.psi.log_det(), x.rows(), x.cols(), params.alpha,
                            params.eta)
      .log_density;
}

// v̂ = α f_MVN(X | M, Σ, Ψ) / f_CMVN(X | M, Σ, Ψ, η, α)
inline double posterior_good_prob(const Matrix& x, const CmvnParams& params) {
  detail::require_shape(x, params.base, "posterior_good_prob");
  params.check();
  const auto& b = params.base;
  const double delta = trace_quad_form(x, b.mean, b.sigma, b.psi);
  const auto t = detail::cmvn_terms(delta, b.sigma.log_det(), b.psi.log_det(), x.rows(), x.cols(),
                                    params.alpha, params.eta);
  return std::exp(t.log_good - t.log_density);
}

namespace detail {

inline void check_weight_domain(double delta, double alpha, double eta, std::size_t r, std::size_t p) {
  if (std::isnan(delta) || delta < 0.0) throw DomainError("robustness weight: delta must be >= 0");
  if (!(alpha > 0.5 && alpha < 1.0)) throw DomainError("robustness weight: alpha must lie in (0.5, 1)");
  if (!(eta > 1.0) || !std::isfinite(eta)) throw DomainError("robustness weight: eta must exceed 1");
  if (r == 0 || p == 0) throw DomainError("robustness weight: r and p must be positive");
}

}  // namespace detail

// h(δ; α, η) = {1 + ((1−α)/α) η^(−rp/2) exp[(δ/2)(1 − 1/η)]}⁻¹, strictly decreasing in δ.
inline double h_weight(double delta, double alpha, double eta, std::size_t r, std::size_t p) {
  detail::check_weight_domain(delta, alpha, eta, r, p);
  const double rp = static_cast<double>(r * p);
  const double t = std::log1p(-alpha) - std::log(alpha) - 0.5 * rp * std::log(eta) +
                   0.5 * delta * (1.0 - 1.0 / eta);
  if (t > 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

// w(δ; α, η) = (1/η)[1 + (η − 1) h(δ; α, η)] ∈ [1/η, 1]; the weight of X_i in the mean update.
inline double w_weight(double delta, double alpha, double eta, std::size_t r, std::size_t p) {
  const double h = h_weight(delta, alpha, eta, r, p);
  return (1.0 + (eta - 1.0) * h) / eta;
}

// X = M + A·Z·Bᵀ with A = chol(Σ), B = chol(Ψ) and Z iid standard normal (row-major draw order).
inline Matrix sample_mvn(const MvnParams& params, SeededGenerator& rng) {
  params.check();
  const std::size_t r = params.rows(), p = params.cols();
  Matrix z(r, p);
  for (double& v : z.entries()) v = rng.normal();
  const auto& a = params.sigma.factor();
  const auto& b = params.psi.factor();
  Matrix az(r, p);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k <= i; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < p; ++j) az(i, j) += aik * z(k, j);
    }
  Matrix x = params.mean;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += az(i, k) * b(j, k);
      x(i, j) += s;
    }
  return x;
}

struct CmvnDraw {
  Matrix x;
  bool good = true;
};

inline CmvnDraw sample_cmvn(const CmvnParams& params, SeededGenerator& rng) {
  params.check();
  const bool good = rng.bernoulli(params.alpha);
  if (good) return {sample_mvn(params.base, rng), true};
  MvnParams inflated = params.base;
  inflated.sigma = inflated.sigma.scaled(params.eta);
  return {sample_mvn(inflated, rng), false};
}

}  // namespace cmvn
