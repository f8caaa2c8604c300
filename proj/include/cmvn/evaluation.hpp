#pragma once

// Partition agreement (ARI, misclassification rate) and the per-cluster
// outlier report of a fitted CMVN mixture.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cmvn/ecm.hpp"
#include "cmvn/error.hpp"

namespace cmvn {

// Cluster labels of N units; the optional mask selects the units that are scored.
struct Partition {
  std::vector<int> labels;
  std::optional<std::vector<bool>> mask;
};

namespace detail {

// Labels of units scored by both partitions (the masks are combined).
inline std::pair<std::vector<int>, std::vector<int>> scored_pairs(const Partition& a, const Partition& b) {
  const std::size_t n = a.labels.size();
  if (b.labels.size() != n) throw LengthMismatch("partitions have different lengths");
  if ((a.mask && a.mask->size() != n) || (b.mask && b.mask->size() != n))
    throw LengthMismatch("mask length differs from partition length");
  std::pair<std::vector<int>, std::vector<int>> out;
  for (std::size_t i = 0; i < n; ++i) {
    if ((a.mask && !(*a.mask)[i]) || (b.mask && !(*b.mask)[i])) continue;
    out.first.push_back(a.labels[i]);
    out.second.push_back(b.labels[i]);
  }
  return out;
}

struct Contingency {
  std::vector<std::vector<std::int64_t>> table;  // [row label][col label]
  std::vector<std::int64_t> row_sums, col_sums;
  std::int64_t n = 0;
};

inline Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, std::size_t> ra, rb;
  for (int l : a) ra.emplace(l, 0);
  for (int l : b) rb.emplace(l, 0);
  std::size_t k = 0;
  for (auto& [l, idx] : ra) idx = k++;
  k = 0;
  for (auto& [l, idx] : rb) idx = k++;
  Contingency c;
  c.table.assign(ra.size(), std::vector<std::int64_t>(rb.size(), 0));
  c.row_sums.assign(ra.size(), 0);
  c.col_sums.assign(rb.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto u = ra[a[i]], v = rb[b[i]];
    ++c.table[u][v];
    ++c.row_sums[u];
    ++c.col_sums[v];
  }
  c.n = static_cast<std::int64_t>(a.size());
  return c;
}

inline std::int64_t choose2(std::int64_t m) { return m * (m - 1) / 2; }

}  // namespace detail

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

// Hubert–Arabie ARI in exact integer arithmetic, reduced to lowest terms.
// Returns 1 when both partitions are trivial in the same way (zero denominator).
inline Rational adjusted_rand_index_exact(const Partition& a, const Partition& b) {
  const auto [la, lb] = detail::scored_pairs(a, b);
  if (la.size() < 2) throw DomainError("adjusted_rand_index: need at least 2 scored observations");
  if (la.size() > 60000) throw DomainError("adjusted_rand_index_exact: too many observations for 64-bit arithmetic");
  const auto c = detail::contingency(la, lb);
  std::int64_t index = 0, sa = 0, sb = 0;
  for (const auto& row : c.table)
    for (auto nij : row) index += detail::choose2(nij);
  for (auto s : c.row_sums) sa += detail::choose2(s);
  for (auto s : c.col_sums) sb += detail::choose2(s);
  const std::int64_t total = detail::choose2(c.n);
  // ARI = (T·index − A·B) / (T(A+B)/2 − A·B), scaled by 2 to stay integral.
  const __int128 num = 2 * (static_cast<__int128>(total) * index - static_cast<__int128>(sa) * sb);
  const __int128 den = static_cast<__int128>(total) * (sa + sb) - 2 * static_cast<__int128>(sa) * sb;
  if (den == 0) return {1, 1};
  __int128 g = num < 0 ? -num : num;
  __int128 h = den < 0 ? -den : den;
  while (h != 0) {
    const __int128 t = g % h;
    g = h;
    h = t;
  }
  __int128 rn = num / g, rd = den / g;
  if (rd < 0) {
    rn = -rn;
    rd = -rd;
  }
  return {static_cast<std::int64_t>(rn), static_cast<std::int64_t>(rd)};
}

inline double adjusted_rand_index(const Partition& a, const Partition& b) {
  const auto [la, lb] = detail::scored_pairs(a, b);
  if (la.size() < 2) throw DomainError("adjusted_rand_index: need at least 2 scored observations");
  const auto c = detail::contingency(la, lb);
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& row : c.table)
    for (auto nij : row) index += static_cast<double>(detail::choose2(nij));
  for (auto s : c.row_sums) sa += static_cast<double>(detail::choose2(s));
  for (auto s : c.col_sums) sb += static_cast<double>(detail::choose2(s));
  const double total = static_cast<double>(detail::choose2(c.n));
  const double expected = sa * sb / total;
  const double denom = 0.5 * (sa + sb) - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

inline constexpr std::size_t kMaxPredictedClusters = 10;

// Fraction of scored units misclassified under the best one-to-one mapping of
// predicted labels onto true labels. Predicted clusters left unmatched count
// as errors. Solved exactly by dynamic programming over label subsets.
inline double misclassification_rate(const Partition& truth, const Partition& pred) {
  const auto [lt, lp] = detail::scored_pairs(truth, pred);
  if (lt.empty()) throw DomainError("misclassification_rate: no scored observations");
  const auto c = detail::contingency(lp, lt);  // rows: predicted, cols: true
  const std::size_t kp = c.row_sums.size(), kt = c.col_sums.size();
  if (kp > kMaxPredictedClusters)
    throw DomainError("misclassification_rate: more than " + std::to_string(kMaxPredictedClusters) +
                      " predicted clusters");
  // Walk the larger side, tracking which labels of the smaller side are taken.
  const bool pred_small = kp <= kt;
  const std::size_t small = pred_small ? kp : kt, large = pred_small ? kt : kp;
  if (small > 20) throw DomainError("misclassification_rate: too many clusters on both sides");
  const auto weight = [&](std::size_t l, std::size_t s) {
    return pred_small ? c.table[s][l] : c.table[l][s];
  };
  std::vector<std::int64_t> dp(std::size_t{1} << small, -1);
  dp[0] = 0;
  for (std::size_t l = 0; l < large; ++l) {
    auto next = dp;
    for (std::size_t mask = 0; mask < dp.size(); ++mask) {
      if (dp[mask] < 0) continue;
      for (std::size_t s = 0; s < small; ++s) {
        if (mask & (std::size_t{1} << s)) continue;
        const std::size_t m2 = mask | (std::size_t{1} << s);
        next[m2] = std::max(next[m2], dp[mask] + weight(l, s));
      }
    }
    dp = std::move(next);
  }
  const std::int64_t matched = *std::max_element(dp.begin(), dp.end());
  return 1.0 - static_cast<double>(matched) / static_cast<double>(c.n);
}

struct BadUnit {
  std::size_t unit = 0;  // 1-based
  std::optional<std::string> name;
  double v = 0.0;

  bool operator==(const BadUnit&) const = default;
};

struct ClusterReport {
  std::size_t cluster = 0;  // 1-based
  double weight = 0.0;
  double alpha = 0.0;
  double eta = 0.0;
  std::size_t size = 0;
  std::vector<BadUnit> bad;  // sorted by v ascending

  bool operator==(const ClusterReport&) const = default;
};

struct OutlierReport {
  std::vector<ClusterReport> clusters;

  std::size_t total_bad() const {
    std::size_t s = 0;
    for (const auto& c : clusters) s += c.bad.size();
    return s;
  }

  bool operator==(const OutlierReport&) const = default;
};

inline OutlierReport outlier_report(const FitResult& result,
                                    const std::optional<std::vector<std::string>>& names = std::nullopt) {
  if (result.model.kind != ModelKind::cmvn || !result.resp.has_v())
    throw KindMismatch("outlier_report: requires a CMVN fit");
  const std::size_t n = result.n();
  if (names && names->size() != n) throw LengthMismatch("outlier_report: names length differs from N");
  if (result.hard_labels.size() != n || result.bad_flags.size() != n)
    throw LengthMismatch("outlier_report: labels or bad flags do not cover every unit");
  OutlierReport report;
  for (std::size_t g = 0; g < result.model.g(); ++g) {
    ClusterReport c;
    c.cluster = g + 1;
    c.weight = result.model.weights[g];
    c.alpha = result.model.components[g].alpha;
    c.eta = result.model.components[g].eta;
    report.clusters.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(result.hard_labels[i] - 1);
    auto& c = report.clusters.at(g);
    ++c.size;
    if (!result.bad_flags[i]) continue;
    BadUnit b;
    b.unit = i + 1;
    if (names) b.name = (*names)[i];
    b.v = result.resp.v(i, g);
    c.bad.push_back(std::move(b));
  }
  for (auto& c : report.clusters)
    std::stable_sort(c.bad.begin(), c.bad.end(), [](const BadUnit& x, const BadUnit& y) { return x.v < y.v; });
  return report;
}

}  // namespace cmvn
