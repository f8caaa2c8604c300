#pragma once

// BIC model selection over model kinds and component counts.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmvn/ecm.hpp"
#include "cmvn/error.hpp"

namespace cmvn {

// MVN: (G−1) + G·[rp + (r(r+1)/2 − 1) + p(p+1)/2]; the −1 is the Σ[0,0] = 1
// constraint. CMVN adds α_g and η_g per component.
inline std::size_t count_free_params(ModelKind kind, std::size_t g, std::size_t r, std::size_t p) {
  if (g == 0 || r == 0 || p == 0) throw DomainError("count_free_params: arguments must be positive");
  const std::size_t per_component = r * p + (r * (r + 1) / 2 - 1) + p * (p + 1) / 2;
  std::size_t m = (g - 1) + g * per_component;
  if (kind == ModelKind::cmvn) m += 2 * g;
  return m;
}

// 2ℓ − m log N; larger is better.
inline double bic(double loglik, std::size_t m, std::size_t n) {
  if (n < 1) throw DomainError("bic: n must be >= 1");
  return 2.0 * loglik - static_cast<double>(m) * std::log(static_cast<double>(n));
}

struct SweepEntry {
  ModelKind kind = ModelKind::cmvn;
  std::size_t g = 1;
  bool ok = false;
  double loglik = 0.0;
  double bic = 0.0;
  std::size_t n_params = 0;
  std::optional<FitResult> fit;
  std::string error;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::optional<std::size_t> best;

  const SweepEntry* best_entry() const { return best ? &entries[*best] : nullptr; }

  // Best successful entry restricted to one model kind.
  std::optional<std::size_t> best_of(ModelKind kind) const;
};

// Index of the maximal-BIC successful entry; ties go to smaller G, then MVN before CMVN.
inline std::optional<std::size_t> select_best(std::span<const SweepEntry> entries,
                                              std::optional<ModelKind> only = std::nullopt) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (!e.ok || (only && e.kind != *only)) continue;
    if (!best) {
      best = k;
      continue;
    }
    const auto& b = entries[*best];
    const bool better =
        e.bic > b.bic ||
        (e.bic == b.bic && (e.g < b.g || (e.g == b.g && e.kind == ModelKind::mvn && b.kind == ModelKind::cmvn)));
    if (better) best = k;
  }
  return best;
}

inline std::optional<std::size_t> SweepResult::best_of(ModelKind kind) const { return select_best(entries, kind); }

// Fits every (kind, G) cell. A cell whose fit fails is recorded, not fatal.
inline SweepResult sweep(const Dataset& data, std::span<const ModelKind> kinds, std::span<const std::size_t> g_values,
                         const FitConfig& config, std::size_t threads = default_thread_count()) {
  if (kinds.empty() || g_values.empty()) throw DomainError("sweep: need at least one kind and one G");
  for (std::size_t g : g_values) {
    if (g < 1) throw DomainError("sweep: G must be >= 1");
    if (g > data.n()) throw DomainError("sweep: G = " + std::to_string(g) + " exceeds N");
  }
  SweepResult out;
  for (ModelKind kind : kinds) {
    for (std::size_t g : g_values) {
      SweepEntry e;
      e.kind = kind;
      e.g = g;
      e.n_params = count_free_params(kind, g, data.r, data.p);
      FitConfig cell = config;
      cell.g = g;
      try {
        auto res = fit(data, cell, kind, threads);
        e.ok = true;
        e.loglik = res.loglik();
        e.bic = bic(e.loglik, e.n_params, data.n());
        e.fit = std::move(res);
      } catch (const NumericError& err) {
        e.ok = false;
        e.error = err.what();
      }
      out.entries.push_back(std::move(e));
    }
  }
  out.best = select_best(out.entries);
  return out;
}

}  // namespace cmvn
