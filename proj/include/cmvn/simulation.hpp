#pragma once

// Synthetic three-way data: draws from a known mixture, the single-point
// perturbation and the uniform background-noise replacement used by the
// sensitivity studies.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cmvn/dataset.hpp"
#include "cmvn/distributions.hpp"
#include "cmvn/ecm.hpp"
#include "cmvn/random.hpp"

namespace cmvn {

// Two-component 2×4 MVN mixture with equal weights used by both sensitivity studies.
inline MixtureModel reference_model() {
  const Matrix psi = Matrix::from_rows({{1.00, 0.50, 0.25, 0.13},
                                        {0.50, 1.00, 0.50, 0.25},
                                        {0.25, 0.50, 1.00, 0.50},
                                        {0.13, 0.25, 0.50, 1.00}});
  MixtureModel m;
  m.kind = ModelKind::mvn;
  m.weights = {0.5, 0.5};
  m.components.push_back(CmvnParams{
      MvnParams{Matrix::from_rows({{-2.60, -1.10, -0.50, -0.20}, {1.30, 0.60, 0.30, 0.10}}),
                SpdMatrix(Matrix::from_rows({{2.00, 0.00}, {0.00, 1.00}})), SpdMatrix(psi)},
      1.0, 1.0});
  m.components.push_back(CmvnParams{
      MvnParams{Matrix::from_rows({{1.50, 1.70, 1.90, 2.20}, {-3.70, -2.70, -2.00, -1.50}}),
                SpdMatrix(Matrix::from_rows({{1.70, 0.50}, {0.50, 1.30}})), SpdMatrix(psi)},
      1.0, 1.0});
  return m;
}

// Draws n units: label ~ Categorical(π), then X | label from the component
// (CMVN components also draw the good/bad flag). Labels are 1-based.
inline Dataset simulate(const MixtureModel& model, std::size_t n, SeededGenerator& rng) {
  model.check();
  Dataset data;
  data.r = model.rows();
  data.p = model.cols();
  data.samples.reserve(n);
  std::vector<int> labels(n);
  std::vector<bool> good(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::size_t g = 0;
    double cum = model.weights[0];
    while (g + 1 < model.g() && u >= cum) cum += model.weights[++g];
    labels[i] = static_cast<int>(g) + 1;
    if (model.kind == ModelKind::cmvn) {
      auto draw = sample_cmvn(model.components[g], rng);
      good[i] = draw.good;
      data.samples.push_back(std::move(draw.x));
    } else {
      data.samples.push_back(sample_mvn(model.components[g].base, rng));
    }
  }
  data.labels = std::move(labels);
  data.good_flags = std::move(good);
  return data;
}

inline Dataset simulate(const MixtureModel& model, std::size_t n, std::uint64_t seed) {
  SeededGenerator rng(seed);
  return simulate(model, n, rng);
}

// Adds c·𝟙 to unit `obs` (1-based). A nonzero shift marks the unit as not good.
inline void perturb(Dataset& data, std::size_t obs, double c) {
  if (obs < 1 || obs > data.n()) throw DomainError("perturb: observation index out of range");
  if (!std::isfinite(c)) throw DomainError("perturb: shift must be finite");
  for (double& v : data.samples[obs - 1].entries()) v += c;
  if (c != 0.0) {
    if (!data.good_flags) data.good_flags = std::vector<bool>(data.n(), true);
    (*data.good_flags)[obs - 1] = false;
  }
}

// Replaces round(frac·N) randomly chosen units by matrices of iid Uniform[lo, hi]
// entries and marks them not good. Returns the replaced 0-based indices, ascending.
inline std::vector<std::size_t> add_uniform_noise(Dataset& data, double frac, double lo, double hi,
                                                  SeededGenerator& rng) {
  if (!(frac >= 0.0 && frac <= 1.0)) throw DomainError("add_uniform_noise: frac must lie in [0, 1]");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw DomainError("add_uniform_noise: need lo < hi");
  const std::size_t n = data.n();
  const auto k = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t j = 0; j < k; ++j) {
    const auto pick = j + static_cast<std::size_t>(rng.below(n - j));
    std::swap(order[j], order[pick]);
  }
  std::vector<std::size_t> replaced(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(replaced.begin(), replaced.end());
  if (!data.good_flags) data.good_flags = std::vector<bool>(n, true);
  for (std::size_t i : replaced) {
    for (double& v : data.samples[i].entries()) v = rng.uniform(lo, hi);
    (*data.good_flags)[i] = false;
  }
  return replaced;
}

}  // namespace cmvn
