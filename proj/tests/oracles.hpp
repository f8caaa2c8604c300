#pragma once

// Reference implementations used only by the tests. They go through dense
// Eigen linear algebra or brute-force enumeration, never through the library's
// own factorizations, so agreement is meaningful.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "cmvn/cmvn.hpp"

namespace oracle {

inline Eigen::MatrixXd to_eigen(const cmvn::Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

// Column-stacking vec.
inline Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());  // Eigen is column-major
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

// log N_{rp}(vec X; vec M, Ψ⊗Σ) through a dense inverse and determinant.
inline double vec_mvn_log_density(const cmvn::Matrix& x, const cmvn::Matrix& m, const cmvn::Matrix& sigma,
                                  const cmvn::Matrix& psi, double eta = 1.0) {
  const Eigen::MatrixXd cov = kron(to_eigen(psi), eta * to_eigen(sigma));
  const Eigen::VectorXd d = vec(to_eigen(x) - to_eigen(m));
  const double k = static_cast<double>(d.size());
  const double quad = d.dot(cov.inverse() * d);
  return -0.5 * k * std::log(2.0 * M_PI) - 0.5 * std::log(cov.determinant()) - 0.5 * quad;
}

inline double trace_form(const cmvn::Matrix& x, const cmvn::Matrix& m, const cmvn::Matrix& sigma,
                         const cmvn::Matrix& psi) {
  const Eigen::MatrixXd d = to_eigen(x) - to_eigen(m);
  return (to_eigen(sigma).inverse() * d * to_eigen(psi).inverse() * d.transpose()).trace();
}

// Determinant by cofactor expansion.
inline double cofactor_det(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  double det = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::vector<double>> minor;
    for (std::size_t i = 1; i < n; ++i) {
      std::vector<double> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) row.push_back(a[i][k]);
      minor.push_back(row);
    }
    det += ((j % 2) ? -1.0 : 1.0) * a[0][j] * cofactor_det(minor);
  }
  return det;
}

// ---------------------------------------------------------------- metrics

struct PairCounts {
  std::int64_t same_same = 0, same_diff = 0, diff_same = 0, diff_diff = 0;
};

inline PairCounts count_pairs(const std::vector<int>& a, const std::vector<int>& b) {
  PairCounts c;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) ++c.same_same;
      else if (sa) ++c.same_diff;
      else if (sb) ++c.diff_same;
      else ++c.diff_diff;
    }
  return c;
}

// ARI in pair-count form as a reduced fraction: 2(ad − bc) / ((a+b)(b+d) + (a+c)(c+d)).
inline std::pair<std::int64_t, std::int64_t> ari_pairs(const std::vector<int>& x, const std::vector<int>& y) {
  const auto c = count_pairs(x, y);
  const std::int64_t a = c.same_same, b = c.same_diff, cc = c.diff_same, d = c.diff_diff;
  std::int64_t num = 2 * (a * d - b * cc);
  std::int64_t den = (a + b) * (b + d) + (a + cc) * (cc + d);
  if (den == 0) return {1, 1};
  const std::int64_t g = std::gcd(num, den);
  num /= g;
  den /= g;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  return {num, den};
}

// Minimum misclassification over every injective relabelling of the predicted clusters.
inline double mcr_bruteforce(const std::vector<int>& truth, const std::vector<int>& pred) {
  const std::set<int> ts(truth.begin(), truth.end()), ps(pred.begin(), pred.end());
  const std::vector<int> tl(ts.begin(), ts.end()), pl(ps.begin(), ps.end());
  // Each predicted label maps to a distinct true label or to nothing (target -1).
  std::vector<int> target(pl.size(), -1);
  std::vector<bool> used(tl.size(), false);
  std::size_t best = truth.size();
  const auto score = [&] {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const auto k = static_cast<std::size_t>(std::find(pl.begin(), pl.end(), pred[i]) - pl.begin());
      if (target[k] < 0 || tl[static_cast<std::size_t>(target[k])] != truth[i]) ++wrong;
    }
    return wrong;
  };
  const auto recurse = [&](auto&& self, std::size_t k) -> void {
    if (k == pl.size()) {
      best = std::min(best, score());
      return;
    }
    target[k] = -1;
    self(self, k + 1);
    for (std::size_t t = 0; t < tl.size(); ++t) {
      if (used[t]) continue;
      used[t] = true;
      target[k] = static_cast<int>(t);
      self(self, k + 1);
      used[t] = false;
    }
    target[k] = -1;
  };
  recurse(recurse, 0);
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------- 1-D maximization

template <class F>
double golden_max(F f, double lo, double hi, double tol = 1e-13) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace oracle
