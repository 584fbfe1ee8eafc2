// Slow, independent reference implementations used to check the library.
#ifndef LOCPRED_TESTS_ORACLES_HPP
#define LOCPRED_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// SVM dual by accelerated projected gradient.

// Projection onto {0 <= a_i <= C, sum y_i a_i = 0} by bisection on the
// multiplier of the equality constraint.
inline Eigen::VectorXd project(const Eigen::VectorXd& v, const std::vector<int>& y, double C) {
  auto at = [&](double nu) {
    Eigen::VectorXd a(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = std::clamp(v[i] - nu * y[i], 0.0, C);
    return a;
  };
  auto g = [&](double nu) {
    const Eigen::VectorXd a = at(nu);
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += y[i] * a[i];
    return s;
  };
  double lo = -1.0, hi = 1.0;
  while (g(lo) < 0.0) lo *= 2.0;
  while (g(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

inline double dual_value(const Eigen::MatrixXd& K, const std::vector<int>& y,
                         const Eigen::VectorXd& a) {
  double lin = 0.0, quad = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    lin += a[i];
    for (Eigen::Index j = 0; j < a.size(); ++j) quad += a[i] * a[j] * y[i] * y[j] * K(i, j);
  }
  return lin - 0.5 * quad;
}

struct QpSolution {
  Eigen::VectorXd alpha;
  double objective = 0.0;
  double bias = 0.0;
};

inline QpSolution solve_qp(const Eigen::MatrixXd& K, const std::vector<int>& y, double C,
                           int iterations = 20000) {
  const auto n = K.rows();
  Eigen::MatrixXd Q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) Q(i, j) = y[i] * y[j] * K(i, j);
  const double L = std::max(1e-12, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().maxCoeff());
  auto value = [&](const Eigen::VectorXd& v) { return v.sum() - 0.5 * v.dot(Q * v); };
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), prev = a, z = a;
  double t = 1.0, prev_value = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n) - Q * z;  // ascent direction
    a = project(z + grad / L, y, C);
    const double v = value(a);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Restart when momentum stops helping.
    if (v < prev_value) {
      z = a;
      t = 1.0;
    } else {
      z = a + ((t - 1.0) / t_next) * (a - prev);
      t = t_next;
    }
    if ((a - prev).lpNorm<Eigen::Infinity>() < 1e-14 && it > 100) break;
    prev = a;
    prev_value = v;
  }
  QpSolution s;
  s.alpha = a;
  s.objective = dual_value(K, y, a);
  // Bias from free vectors, else the middle of the feasible interval.
  const double eps = 1e-6 * std::max(1.0, C);
  double sum = 0.0, lo = -1e300, hi = 1e300;
  int free = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double f = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) f += a[j] * y[j] * K(j, i);
    const double b = y[i] - f;
    if (a[i] > eps && a[i] < C - eps) {
      sum += b;
      ++free;
    } else if ((a[i] <= eps) == (y[i] > 0)) {
      lo = std::max(lo, b);
    } else {
      hi = std::min(hi, b);
    }
  }
  s.bias = free ? sum / free : 0.5 * (lo + hi);
  return s;
}

// ---------------------------------------------------------------------------
// Multi-label metrics by direct pair counting.

// 1-based rank of label j: one plus the labels that outrank it (higher
// score, or equal score and lower index).
inline int rank_of(const std::vector<double>& s, std::size_t j) {
  int r = 1;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s[k] > s[j] || (s[k] == s[j] && k < j)) ++r;
  return r;
}

inline bool has(const std::vector<std::size_t>& set, std::size_t j) {
  return std::find(set.begin(), set.end(), j) != set.end();
}

inline double hamming(const std::vector<std::vector<std::size_t>>& pred,
                      const std::vector<std::vector<std::size_t>>& truth, std::size_t q) {
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    int diff = 0;
    for (std::size_t j = 0; j < q; ++j) diff += has(pred[i], j) != has(truth[i], j);
    total += static_cast<double>(diff) / q;
  }
  return total / truth.size();
}

inline double one_error(const std::vector<std::vector<double>>& s,
                        const std::vector<std::vector<std::size_t>>& truth) {
  double wrong = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s[i].size(); ++j)
      if (rank_of(s[i], j) == 1 && !has(truth[i], j)) wrong += 1.0;
  return wrong / s.size();
}

inline double coverage(const std::vector<std::vector<double>>& s,
                       const std::vector<std::vector<std::size_t>>& truth) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    int worst = 0;
    for (auto j : truth[i]) worst = std::max(worst, rank_of(s[i], j));
    total += worst - 1;
  }
  return total / s.size();
}

inline double ranking_loss(const std::vector<std::vector<double>>& s,
                           const std::vector<std::vector<std::size_t>>& truth) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    int pairs = 0, bad = 0;
    for (std::size_t a = 0; a < s[i].size(); ++a) {
      if (!has(truth[i], a)) continue;
      for (std::size_t b = 0; b < s[i].size(); ++b) {
        if (has(truth[i], b)) continue;
        ++pairs;
        if (rank_of(s[i], b) < rank_of(s[i], a)) ++bad;
      }
    }
    if (pairs) total += static_cast<double>(bad) / pairs;
  }
  return total / s.size();
}

inline double ranking_ap(const std::vector<std::vector<double>>& s,
                         const std::vector<std::vector<std::size_t>>& truth) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double acc = 0.0;
    for (auto a : truth[i]) {
      int above = 0;
      for (auto b : truth[i])
        if (rank_of(s[i], b) <= rank_of(s[i], a)) ++above;
      acc += static_cast<double>(above) / rank_of(s[i], a);
    }
    total += acc / truth[i].size();
  }
  return total / s.size();
}

// ---------------------------------------------------------------------------
// MRMD with plain loops.

struct Mrmd {
  std::vector<double> mr, md, combined;
  std::vector<std::size_t> order;
};

inline Mrmd mrmd(const Eigen::MatrixXd& x, const std::vector<int>& y, double wr, double wd,
                 const std::string& metric) {
  const int n = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
  Mrmd out;
  double ym = 0.0;
  for (int i = 0; i < n; ++i) ym += y[i];
  ym /= n;
  // Standardized columns (population variance; constant columns map to 0).
  std::vector<std::vector<double>> z(d, std::vector<double>(n));
  for (int c = 0; c < d; ++c) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += x(i, c);
    m /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
      sxy += (x(i, c) - m) * (y[i] - ym);
      sxx += (x(i, c) - m) * (x(i, c) - m);
      syy += (y[i] - ym) * (y[i] - ym);
    }
    out.mr.push_back(sxx > 0 && syy > 0 ? std::abs(sxy / std::sqrt(sxx * syy)) : 0.0);
    const double sd = std::sqrt(sxx / n);
    for (int i = 0; i < n; ++i) z[c][i] = (x(i, c) - m) / (sd > 0 ? sd : 1.0);
  }
  for (int a = 0; a < d; ++a) {
    double sum = 0.0;
    for (int b = 0; b < d; ++b) {
      if (a == b) continue;
      double dot = 0.0, na = 0.0, nb = 0.0, sq = 0.0;
      for (int i = 0; i < n; ++i) {
        dot += z[a][i] * z[b][i];
        na += z[a][i] * z[a][i];
        nb += z[b][i] * z[b][i];
        sq += (z[a][i] - z[b][i]) * (z[a][i] - z[b][i]);
      }
      if (metric == "euclidean") {
        sum += std::sqrt(sq);
      } else if (metric == "cosine") {
        sum += 1.0 - (na > 0 && nb > 0 ? dot / std::sqrt(na * nb) : 0.0);
      } else {
        const double den = na + nb - dot;
        sum += 1.0 - (den > 0 ? dot / den : 0.0);
      }
    }
    out.md.push_back(d > 1 ? sum / (d - 1) : 0.0);
  }
  auto scale = [](std::vector<double>& v) {
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    for (auto& e : v) e = hi > lo ? (e - lo) / (hi - lo) : 0.0;
  };
  scale(out.mr);
  scale(out.md);
  for (int c = 0; c < d; ++c) out.combined.push_back(wr * out.mr[c] + wd * out.md[c]);
  out.order.resize(d);
  std::iota(out.order.begin(), out.order.end(), 0);
  // Selection sort: repeatedly take the best remaining, lowest index on ties.
  for (int p = 0; p < d; ++p) {
    int best = p;
    for (int q = p + 1; q < d; ++q) {
      const auto cq = out.combined[out.order[q]], cb = out.combined[out.order[best]];
      if (cq > cb || (cq == cb && out.order[q] < out.order[best])) best = q;
    }
    std::swap(out.order[p], out.order[best]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared 5-mer identity by explicit substring counting.

inline double kmer_identity(const std::string& a, const std::string& b) {
  const std::size_t k = 5;
  if (a.size() < k || b.size() < k) return a == b ? 1.0 : 0.0;
  std::map<std::string, int> ca, cb;
  for (std::size_t i = 0; i + k <= a.size(); ++i) ++ca[a.substr(i, k)];
  for (std::size_t i = 0; i + k <= b.size(); ++i) ++cb[b.substr(i, k)];
  int shared = 0;
  for (const auto& [s, c] : ca) {
    auto it = cb.find(s);
    if (it != cb.end()) shared += std::min(c, it->second);
  }
  const auto denom = std::min(a.size(), b.size()) - k + 1;
  return static_cast<double>(shared) / static_cast<double>(denom);
}

}  // namespace oracle

#endif  // LOCPRED_TESTS_ORACLES_HPP
