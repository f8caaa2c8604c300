#pragma once

// ECM estimation for finite mixtures of MVN or CMVN distributions.
//
// One cycle is E → CM1 (π, α, M) → CM2 (Σ) → CM3 (Ψ) → CM4 (η). Quantities
// from the previous cycle (η̇, Ψ̇) enter the conditional maximizations exactly
// as in the ECM ascent argument, so the observed log-likelihood never
// decreases. MVN mixtures run the same machinery with v ≡ 1 and no CM4.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmvn/dataset.hpp"
#include "cmvn/distributions.hpp"
#include "cmvn/error.hpp"
#include "cmvn/matrix.hpp"
#include "cmvn/parallel.hpp"
#include "cmvn/random.hpp"

namespace cmvn {

enum class ModelKind { mvn, cmvn };

inline std::string to_string(ModelKind kind) { return kind == ModelKind::mvn ? "mvn" : "cmvn"; }

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "mvn" || s == "MVN") return ModelKind::mvn;
  if (s == "cmvn" || s == "CMVN") return ModelKind::cmvn;
  throw DomainError("unknown model kind '" + s + "' (expected mvn or cmvn)");
}

// Which closed form CM-step 4 uses. The maximum-likelihood form divides by r·p
// (the stationary point of the complete-data log-likelihood in η); the
// verbatim form omits that divisor and exists for comparison only.
enum class EtaUpdate { maximum_likelihood, verbatim };

inline std::string to_string(EtaUpdate u) { return u == EtaUpdate::verbatim ? "verbatim" : "ml"; }

inline EtaUpdate parse_eta_update(const std::string& s) {
  if (s == "ml") return EtaUpdate::maximum_likelihood;
  if (s == "verbatim") return EtaUpdate::verbatim;
  throw DomainError("unknown eta update '" + s + "' (expected ml or verbatim)");
}

struct MixtureModel {
  ModelKind kind = ModelKind::cmvn;
  std::vector<double> weights;
  // For MVN mixtures only `base` is meaningful; alpha and eta are held at 1 (no contamination).
  std::vector<CmvnParams> components;

  std::size_t g() const noexcept { return components.size(); }
  std::size_t rows() const noexcept { return components.empty() ? 0 : components.front().base.rows(); }
  std::size_t cols() const noexcept { return components.empty() ? 0 : components.front().base.cols(); }

  void check() const {
    if (components.empty() || weights.size() != components.size())
      throw DimensionMismatch("MixtureModel: need one weight per component");
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw DomainError("MixtureModel: weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("MixtureModel: weights must sum to 1");
    for (const auto& c : components) {
      c.base.check();
      if (c.base.rows() != rows() || c.base.cols() != cols())
        throw DimensionMismatch("MixtureModel: components differ in shape");
      if (kind == ModelKind::cmvn) {
        if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw DomainError("MixtureModel: alpha outside (0, 1]");
        if (!(c.eta > 1.0) || !std::isfinite(c.eta)) throw DomainError("MixtureModel: eta must exceed 1");
      }
    }
  }

  bool operator==(const MixtureModel&) const = default;
};

// z: N×G membership posteriors. v: N×G good-point posteriors, empty for MVN.
struct Responsibilities {
  Matrix z;
  Matrix v;

  bool has_v() const noexcept { return !v.empty(); }
  bool operator==(const Responsibilities&) const = default;
};

struct FitConfig {
  std::size_t g = 1;
  std::size_t n_starts = 20;
  std::size_t max_iter = 1000;
  double tol = 1e-8;
  double eta_min = kEtaMin;
  std::uint64_t seed = 0;
  // Chains whose cluster mass N_g drops below this are abandoned. Defaults to r·p/2.
  std::optional<double> min_cluster_weight;
  EtaUpdate eta_update = EtaUpdate::maximum_likelihood;
  // η̇ used by the first CM cycle, before any η has been estimated.
  double initial_eta = 1.01;

  double min_weight_for(std::size_t r, std::size_t p) const {
    return min_cluster_weight.value_or(0.5 * static_cast<double>(r * p));
  }

  void check() const {
    if (g < 1) throw DomainError("FitConfig: g must be >= 1");
    if (n_starts < 1) throw DomainError("FitConfig: n_starts must be >= 1");
    if (max_iter < 1) throw DomainError("FitConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw DomainError("FitConfig: tol must be positive");
    if (!(eta_min > 1.0)) throw DomainError("FitConfig: eta_min must exceed 1");
    if (!(initial_eta > 1.0)) throw DomainError("FitConfig: initial_eta must exceed 1");
  }

  bool operator==(const FitConfig&) const = default;
};

struct FitResult {
  MixtureModel model;
  Responsibilities resp;
  std::vector<double> loglik_trace;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<int> hard_labels;  // 1-based
  std::vector<bool> bad_flags;   // CMVN only
  std::uint64_t seed = 0;
  FitConfig config;
  std::size_t start_index = 0;
  std::size_t failed_starts = 0;
  std::vector<std::string> warnings;

  double loglik() const { return loglik_trace.empty() ? -std::numeric_limits<double>::infinity() : loglik_trace.back(); }
  std::size_t n() const noexcept { return resp.z.rows(); }

  bool operator==(const FitResult&) const = default;
};

namespace detail {

inline void check_model_against_data(const Dataset& data, const MixtureModel& model) {
  if (model.rows() != data.r || model.cols() != data.p)
    throw DimensionMismatch("model shape does not match the dataset's r×p");
  for (const auto& x : data.samples)
    if (x.rows() != data.r || x.cols() != data.p) throw DimensionMismatch("dataset contains a mis-shaped unit");
}

inline void check_resp_against_data(const Dataset& data, const Responsibilities& resp, std::size_t g) {
  if (resp.z.rows() != data.n() || resp.z.cols() != g)
    throw DimensionMismatch("responsibilities z must be N×G");
  if (resp.has_v() && (resp.v.rows() != data.n() || resp.v.cols() != g))
    throw DimensionMismatch("responsibilities v must be N×G");
}

// v + (1 − v)/η̇, or 1 when there is no contamination component.
inline double effective_weight(const Responsibilities& resp, std::size_t i, std::size_t g, double eta) {
  if (!resp.has_v()) return 1.0;
  const double v = resp.v(i, g);
  return v + (1.0 - v) / eta;
}

inline double cluster_mass(const Responsibilities& resp, std::size_t g) {
  double s = 0.0;
  for (std::size_t i = 0; i < resp.z.rows(); ++i) s += resp.z(i, g);
  return s;
}

// Fills z (and v for CMVN) and returns the observed-data log-likelihood.
inline double e_step_into(const Dataset& data, const MixtureModel& model, Responsibilities& out) {
  const std::size_t n = data.n(), G = model.g(), r = data.r, p = data.p;
  const bool contaminated = model.kind == ModelKind::cmvn;
  if (out.z.rows() != n || out.z.cols() != G) out.z = Matrix(n, G);
  if (contaminated && (out.v.rows() != n || out.v.cols() != G)) out.v = Matrix(n, G);
  if (!contaminated) out.v = Matrix();

  std::vector<double> log_det_sigma(G), log_det_psi(G), log_weight(G), lg(G);
  for (std::size_t g = 0; g < G; ++g) {
    log_det_sigma[g] = model.components[g].base.sigma.log_det();
    log_det_psi[g] = model.components[g].base.psi.log_det();
    log_weight[g] = std::log(model.weights[g]);
  }
  std::vector<double> work(r * p);
  double loglik = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = data.samples[i].data();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < G; ++g) {
      const auto& c = model.components[g];
      const double delta = quad_form(x, c.base.mean.data(), r, p, c.base.sigma.factor().data(),
                                     c.base.psi.factor().data(), work.data());
      if (contaminated) {
        const auto t = cmvn_terms(delta, log_det_sigma[g], log_det_psi[g], r, p, c.alpha, c.eta);
        lg[g] = log_weight[g] + t.log_density;
        out.v(i, g) = std::exp(t.log_good - t.log_density);
      } else {
        lg[g] = log_weight[g] + mvn_log_density_from_delta(delta, log_det_sigma[g], log_det_psi[g], r, p);
      }
      top = std::max(top, lg[g]);
    }
    if (!std::isfinite(top)) throw DegenerateCluster("e_step: non-finite component density");
    double s = 0.0;
    for (std::size_t g = 0; g < G; ++g) s += std::exp(lg[g] - top);
    const double lse = top + std::log(s);
    for (std::size_t g = 0; g < G; ++g) out.z(i, g) = std::exp(lg[g] - lse);
    loglik += lse;
  }
  if (!std::isfinite(loglik)) throw DegenerateCluster("e_step: non-finite log-likelihood");
  return loglik;
}

}  // namespace detail

inline Responsibilities e_step(const Dataset& data, const MixtureModel& model) {
  model.check();
  detail::check_model_against_data(data, model);
  Responsibilities resp;
  detail::e_step_into(data, model, resp);
  return resp;
}

// Σᵢ log Σ_g π_g f_g(X_i)
inline double observed_log_likelihood(const Dataset& data, const MixtureModel& model) {
  model.check();
  detail::check_model_against_data(data, model);
  Responsibilities resp;
  return detail::e_step_into(data, model, resp);
}

struct CmStep1Result {
  std::vector<double> weights;
  std::vector<double> alphas;  // empty for MVN
  std::vector<Matrix> means;
};

// π̈_g = N̈_g/N, α̈_g = Σᵢ z̈v̈/N̈_g, M̈_g = Σᵢ z̈(v̈ + (1−v̈)/η̇_g) X_i / s̈_g.
inline CmStep1Result cm_step_1(const Dataset& data, const Responsibilities& resp, const MixtureModel& prev,
                               double min_cluster_weight = 0.0) {
  const std::size_t n = data.n(), G = prev.g(), rp = data.r * data.p;
  detail::check_resp_against_data(data, resp, G);
  CmStep1Result out;
  out.weights.resize(G);
  if (resp.has_v()) out.alphas.resize(G);
  out.means.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    const double mass = detail::cluster_mass(resp, g);
    if (!(mass >= min_cluster_weight) || !(mass > 0.0))
      throw DegenerateCluster("cm_step_1: cluster " + std::to_string(g + 1) + " has mass " + std::to_string(mass));
    out.weights[g] = mass / static_cast<double>(n);
    const double eta = prev.components[g].eta;
    std::vector<double> acc(rp, 0.0);
    double s = 0.0, good = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = resp.z(i, g);
      if (z == 0.0) continue;
      if (resp.has_v()) good += z * resp.v(i, g);
      const double w = z * detail::effective_weight(resp, i, g, eta);
      s += w;
      const double* x = data.samples[i].data();
      for (std::size_t k = 0; k < rp; ++k) acc[k] += w * x[k];
    }
    for (double& a : acc) a /= s;
    if (resp.has_v()) out.alphas[g] = good / mass;
    out.means.emplace_back(data.r, data.p, std::move(acc));
  }
  return out;
}

// Σ̈_g = (1/(p N̈_g)) Σᵢ z̈(v̈ + (1−v̈)/η̇) (X_i − M̈_g) Ψ̇_g⁻¹ (X_i − M̈_g)ᵀ. Not yet normalized.
inline std::vector<SpdMatrix> cm_step_2_sigma(const Dataset& data, const Responsibilities& resp,
                                              std::span<const Matrix> means, std::span<const SpdMatrix> prev_psi,
                                              std::span<const double> eta_prev) {
  const std::size_t n = data.n(), G = means.size(), r = data.r, p = data.p;
  detail::check_resp_against_data(data, resp, G);
  if (prev_psi.size() != G || (resp.has_v() && eta_prev.size() != G))
    throw DimensionMismatch("cm_step_2_sigma: need one psi and eta per component");
  std::vector<SpdMatrix> out;
  out.reserve(G);
  std::vector<double> work(r * p);
  for (std::size_t g = 0; g < G; ++g) {
    const double mass = detail::cluster_mass(resp, g);
    const double eta = resp.has_v() ? eta_prev[g] : 1.0;
    const double* m = means[g].data();
    const double* lpsi = prev_psi[g].factor().data();
    Matrix acc(r, r);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = resp.z(i, g) * detail::effective_weight(resp, i, g, eta);
      if (w == 0.0) continue;
      const double* x = data.samples[i].data();
      for (std::size_t k = 0; k < r * p; ++k) work[k] = x[k] - m[k];
      detail::forward_solve_cols(lpsi, p, work.data(), r);  // B = D L_Ψ⁻ᵀ, so B Bᵀ = D Ψ⁻¹ Dᵀ
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
          double s = 0.0;
          for (std::size_t k = 0; k < p; ++k) s += work[a * p + k] * work[b * p + k];
          acc(a, b) += w * s;
        }
    }
    const double scale = 1.0 / (static_cast<double>(p) * mass);
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        acc(a, b) *= scale;
        acc(b, a) = acc(a, b);
      }
    out.emplace_back(std::move(acc));
  }
  return out;
}

// Ψ̈_g = (1/(r N̈_g)) Σᵢ z̈(v̈ + (1−v̈)/η̇) (X_i − M̈_g)ᵀ Σ̈_g⁻¹ (X_i − M̈_g).
inline std::vector<SpdMatrix> cm_step_3_psi(const Dataset& data, const Responsibilities& resp,
                                            std::span<const Matrix> means, std::span<const SpdMatrix> new_sigma,
                                            std::span<const double> eta_prev) {
  const std::size_t n = data.n(), G = means.size(), r = data.r, p = data.p;
  detail::check_resp_against_data(data, resp, G);
  if (new_sigma.size() != G || (resp.has_v() && eta_prev.size() != G))
    throw DimensionMismatch("cm_step_3_psi: need one sigma and eta per component");
  std::vector<SpdMatrix> out;
  out.reserve(G);
  std::vector<double> work(r * p);
  for (std::size_t g = 0; g < G; ++g) {
    const double mass = detail::cluster_mass(resp, g);
    const double eta = resp.has_v() ? eta_prev[g] : 1.0;
    const double* m = means[g].data();
    const double* lsigma = new_sigma[g].factor().data();
    Matrix acc(p, p);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = resp.z(i, g) * detail::effective_weight(resp, i, g, eta);
      if (w == 0.0) continue;
      const double* x = data.samples[i].data();
      for (std::size_t k = 0; k < r * p; ++k) work[k] = x[k] - m[k];
      detail::forward_solve_rows(lsigma, r, work.data(), p);  // C = L_Σ⁻¹ D, so Cᵀ C = Dᵀ Σ⁻¹ D
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
          double s = 0.0;
          for (std::size_t k = 0; k < r; ++k) s += work[k * p + a] * work[k * p + b];
          acc(a, b) += w * s;
        }
    }
    const double scale = 1.0 / (static_cast<double>(r) * mass);
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        acc(a, b) *= scale;
        acc(b, a) = acc(a, b);
      }
    out.emplace_back(std::move(acc));
  }
  return out;
}

// Moves each Σ_g[0,0] into Ψ_g so that Σ_g[0,0] = 1; Ψ_g⊗Σ_g is unchanged.
inline void normalize_scales(std::vector<SpdMatrix>& sigma, std::vector<SpdMatrix>& psi) {
  for (std::size_t g = 0; g < sigma.size(); ++g) {
    const double c = sigma[g](0, 0);
    if (c == 1.0) continue;
    sigma[g] = sigma[g].divided(c);
    psi[g] = psi[g].scaled(c);
  }
}

// η̈_g = max{η_min, Σᵢ z̈(1−v̈)δ̈ / (rp · Σᵢ z̈(1−v̈))}; η_min when the bad mass is below 1e-12.
inline std::vector<double> cm_step_4_eta(const Dataset& data, const Responsibilities& resp,
                                         std::span<const Matrix> means, std::span<const SpdMatrix> sigma,
                                         std::span<const SpdMatrix> psi, double eta_min,
                                         EtaUpdate rule = EtaUpdate::maximum_likelihood) {
  const std::size_t n = data.n(), G = means.size(), r = data.r, p = data.p;
  detail::check_resp_against_data(data, resp, G);
  if (!resp.has_v()) throw KindMismatch("cm_step_4_eta: requires good-point posteriors v");
  if (sigma.size() != G || psi.size() != G) throw DimensionMismatch("cm_step_4_eta: need one sigma and psi per component");
  std::vector<double> out(G, eta_min);
  std::vector<double> work(r * p);
  const double divisor = rule == EtaUpdate::maximum_likelihood ? static_cast<double>(r * p) : 1.0;
  for (std::size_t g = 0; g < G; ++g) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double b = resp.z(i, g) * (1.0 - resp.v(i, g));
      if (b == 0.0) continue;
      const double delta = detail::quad_form(data.samples[i].data(), means[g].data(), r, p,
                                             sigma[g].factor().data(), psi[g].factor().data(), work.data());
      num += b * delta;
      den += b;
    }
    if (den < 1e-12) continue;
    out[g] = std::max(eta_min, num / (divisor * den));
  }
  return out;
}

struct CompleteDataLoglik {
  double mixing = 0.0;         // Σ z log π
  double contamination = 0.0;  // Σ z [v log α + (1−v) log(1−α)]
  double scales = 0.0;         // Σ z [v log f(X|Σ) + (1−v) log f(X|ηΣ)], including the −(rp/2) log 2π constant
  double total() const noexcept { return mixing + contamination + scales; }
};

// The three additive terms of the complete-data log-likelihood for given (z, v).
inline CompleteDataLoglik complete_data_loglik(const Dataset& data, const Responsibilities& resp,
                                               const MixtureModel& model) {
  const std::size_t n = data.n(), G = model.g(), r = data.r, p = data.p;
  detail::check_model_against_data(data, model);
  detail::check_resp_against_data(data, resp, G);
  const double rp = static_cast<double>(r * p);
  const auto xlogy = [](double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); };
  CompleteDataLoglik out;
  std::vector<double> work(r * p);
  for (std::size_t g = 0; g < G; ++g) {
    const auto& c = model.components[g];
    const bool contaminated = model.kind == ModelKind::cmvn;
    const double ld_sigma = c.base.sigma.log_det(), ld_psi = c.base.psi.log_det();
    for (std::size_t i = 0; i < n; ++i) {
      const double z = resp.z(i, g);
      if (z == 0.0) continue;
      const double v = contaminated && resp.has_v() ? resp.v(i, g) : 1.0;
      const double delta = detail::quad_form(data.samples[i].data(), c.base.mean.data(), r, p,
                                             c.base.sigma.factor().data(), c.base.psi.factor().data(), work.data());
      out.mixing += z * std::log(model.weights[g]);
      if (contaminated) {
        out.contamination += z * (xlogy(v, c.alpha) + xlogy(1.0 - v, 1.0 - c.alpha));
      }
      const double eta = contaminated ? c.eta : 1.0;
      out.scales += z * (-0.5 * rp * kLogTwoPi - 0.5 * static_cast<double>(p) * ld_sigma -
                         0.5 * static_cast<double>(r) * ld_psi - 0.5 * rp * (1.0 - v) * std::log(eta) -
                         0.5 * (v + (1.0 - v) / eta) * delta);
    }
  }
  return out;
}

// Hard assignment: label = argmax_g z (lowest index on ties, 1-based);
// bad = v̂ at the assigned cluster ≤ 0.5. bad flags are empty without v.
struct Classification {
  std::vector<int> labels;
  std::vector<bool> bad;
};

inline Classification classify(const Responsibilities& resp) {
  Classification out;
  const std::size_t n = resp.z.rows(), G = resp.z.cols();
  out.labels.resize(n);
  if (resp.has_v()) out.bad.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < G; ++g)
      if (resp.z(i, g) > resp.z(i, best)) best = g;
    out.labels[i] = static_cast<int>(best) + 1;
    if (resp.has_v()) out.bad[i] = resp.v(i, best) <= 0.5;
  }
  return out;
}

inline Classification classify(const FitResult& result) { return classify(result.resp); }

struct ChainOutcome {
  bool ok = false;
  std::string failure;
  MixtureModel model;
  Responsibilities resp;
  std::vector<double> loglik_trace;
  bool converged = false;
  std::size_t iterations = 0;
};

using IterationObserver = std::function<void(std::size_t iteration, const MixtureModel&)>;

// Random starting responsibilities for chain `start_index`: z rows from a flat
// Dirichlet over G, v uniform on (0.5, 1) for CMVN.
inline Responsibilities initial_responsibilities(std::size_t n, std::size_t G, ModelKind kind, std::uint64_t seed,
                                                 std::size_t start_index) {
  SeededGenerator rng(seed ^ static_cast<std::uint64_t>(start_index));
  Responsibilities resp;
  resp.z = Matrix(n, G);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t g = 0; g < G; ++g) s += resp.z(i, g) = rng.exponential();
    for (std::size_t g = 0; g < G; ++g) resp.z(i, g) /= s;
  }
  if (kind == ModelKind::cmvn) {
    resp.v = Matrix(n, G);
    for (double& v : resp.v.entries()) v = 0.5 + 0.5 * rng.uniform_open();
  }
  return resp;
}

// One ECM chain from random responsibilities. Numerical failures (degenerate
// clusters, loss of positive definiteness) end the chain with ok = false.
inline ChainOutcome run_chain(const Dataset& data, const FitConfig& config, ModelKind kind, std::size_t start_index,
                              const IterationObserver& observer = {}) {
  config.check();
  const std::size_t n = data.n(), G = config.g, r = data.r, p = data.p;
  const bool contaminated = kind == ModelKind::cmvn;
  const double min_weight = config.min_weight_for(r, p);

  ChainOutcome out;
  Responsibilities resp = initial_responsibilities(n, G, kind, config.seed, start_index);

  // Placeholder carrying the quantities CM-steps need from "the previous cycle" on the first pass.
  MixtureModel prev;
  prev.kind = kind;
  prev.weights.assign(G, 1.0 / static_cast<double>(G));
  prev.components.assign(G, CmvnParams{MvnParams{Matrix(r, p), SpdMatrix::identity(r), SpdMatrix::identity(p)},
                                       1.0, contaminated ? config.initial_eta : 1.0});
  try {
    for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
      auto step1 = cm_step_1(data, resp, prev, min_weight);
      std::vector<double> eta_prev(G);
      std::vector<SpdMatrix> psi_prev;
      psi_prev.reserve(G);
      for (std::size_t g = 0; g < G; ++g) {
        eta_prev[g] = prev.components[g].eta;
        psi_prev.push_back(prev.components[g].base.psi);
      }
      auto sigma = cm_step_2_sigma(data, resp, step1.means, psi_prev, eta_prev);
      auto psi = cm_step_3_psi(data, resp, step1.means, sigma, eta_prev);
      normalize_scales(sigma, psi);
      std::vector<double> eta;
      if (contaminated)
        eta = cm_step_4_eta(data, resp, step1.means, sigma, psi, config.eta_min, config.eta_update);

      MixtureModel model;
      model.kind = kind;
      model.weights = std::move(step1.weights);
      model.components.reserve(G);
      for (std::size_t g = 0; g < G; ++g) {
        CmvnParams c{MvnParams{std::move(step1.means[g]), std::move(sigma[g]), std::move(psi[g])}, 1.0, 1.0};
        if (contaminated) {
          c.alpha = step1.alphas[g];
          c.eta = eta[g];
        }
        model.components.push_back(std::move(c));
      }
      if (observer) observer(iter, model);

      const double ll = detail::e_step_into(data, model, resp);
      out.loglik_trace.push_back(ll);
      prev = std::move(model);
      if (out.loglik_trace.size() >= 2) {
        const double last = out.loglik_trace[out.loglik_trace.size() - 2];
        if (std::abs(ll - last) / (1.0 + std::abs(ll)) < config.tol) {
          out.converged = true;
          break;
        }
      }
    }
  } catch (const NumericError& e) {
    out.ok = false;
    out.failure = e.what();
    out.iterations = out.loglik_trace.size();
    return out;
  }
  out.ok = true;
  out.model = std::move(prev);
  out.resp = std::move(resp);
  out.iterations = out.loglik_trace.size();
  return out;
}

// Multi-start ECM. Starts run concurrently on independent streams; the result
// is the converged chain with the highest final log-likelihood (lowest start
// index on ties), falling back to unconverged chains only if none converged.
inline FitResult fit(const Dataset& data, const FitConfig& config, ModelKind kind,
                     std::size_t threads = default_thread_count()) {
  config.check();
  data.validate();
  if (data.n() < config.g)
    throw DomainError("fit: need at least G = " + std::to_string(config.g) + " observations, got " +
                      std::to_string(data.n()));

  std::vector<ChainOutcome> chains(config.n_starts);
  parallel_for(
      config.n_starts, [&](std::size_t s) { chains[s] = run_chain(data, config, kind, s); }, threads);

  std::optional<std::size_t> best;
  std::size_t failed = 0;
  for (std::size_t s = 0; s < chains.size(); ++s) {
    const auto& c = chains[s];
    if (!c.ok) {
      ++failed;
      continue;
    }
    if (!best) {
      best = s;
      continue;
    }
    const auto& b = chains[*best];
    const bool better = (c.converged && !b.converged) ||
                        (c.converged == b.converged && c.loglik_trace.back() > b.loglik_trace.back());
    if (better) best = s;
  }
  if (!best) {
    throw AllStartsFailed("fit: all " + std::to_string(config.n_starts) + " starts failed (first: " +
                          chains.front().failure + ")");
  }

  auto& chosen = chains[*best];
  FitResult result;
  result.model = std::move(chosen.model);
  result.resp = std::move(chosen.resp);
  result.loglik_trace = std::move(chosen.loglik_trace);
  result.converged = chosen.converged;
  result.iterations = chosen.iterations;
  auto cls = classify(result.resp);
  result.hard_labels = std::move(cls.labels);
  result.bad_flags = std::move(cls.bad);
  result.seed = config.seed;
  result.config = config;
  result.start_index = *best;
  result.failed_starts = failed;
  if (!result.converged)
    result.warnings.push_back("no start converged within " + std::to_string(config.max_iter) + " iterations");
  if (kind == ModelKind::cmvn) {
    for (std::size_t g = 0; g < result.model.g(); ++g)
      if (result.model.components[g].alpha <= 0.5)
        result.warnings.push_back("component " + std::to_string(g + 1) + " is majority-bad (alpha = " +
                                  std::to_string(result.model.components[g].alpha) + ")");
  }
  return result;
}

}  // namespace cmvn
