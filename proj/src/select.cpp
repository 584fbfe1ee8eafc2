#include "locpred/select.hpp"

#include "locpred/parallel.hpp"
#include "locpred/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace locpred::select {

Distance parse_distance(std::string_view name) {
  if (name == "euclidean") return Distance::Euclidean;
  if (name == "cosine") return Distance::Cosine;
  if (name == "tanimoto") return Distance::Tanimoto;
  throw DomainError("unknown distance '" + std::string(name) + "'");
}

std::string distance_name(Distance d) {
  switch (d) {
    case Distance::Euclidean: return "euclidean";
    case Distance::Cosine: return "cosine";
    case Distance::Tanimoto: return "tanimoto";
  }
  return "euclidean";
}

namespace {

double distance_from_gram(double aa, double bb, double ab, Distance d) {
  switch (d) {
    case Distance::Euclidean:
      return std::sqrt(std::max(0.0, aa + bb - 2.0 * ab));
    case Distance::Cosine: {
      const double den = std::sqrt(aa * bb);
      return 1.0 - (den > 0.0 ? ab / den : 0.0);
    }
    case Distance::Tanimoto: {
      const double den = aa + bb - ab;
      return 1.0 - (den > 0.0 ? ab / den : 0.0);
    }
  }
  return 0.0;
}

void min_max(VectorXd& v) {
  if (v.size() == 0) return;
  const double lo = v.minCoeff(), hi = v.maxCoeff();
  if (!(hi > lo)) {
    v.setZero();
    return;
  }
  v = (v.array() - lo) / (hi - lo);
}

}  // namespace

double column_distance(const VectorXd& a, const VectorXd& b, Distance d) {
  if (a.size() != b.size()) throw DomainError("column_distance: length mismatch");
  if (d == Distance::Euclidean) return (a - b).norm();
  return distance_from_gram(a.squaredNorm(), b.squaredNorm(), a.dot(b), d);
}

FeatureRanking mrmd_rank(const MatrixXd& x, std::span<const int> y, double w_r,
                         double w_d, Distance distance) {
  if (x.rows() == 0) throw DomainError("mrmd_rank: no samples");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw DomainError("mrmd_rank: target length differs from sample count");
  if (x.cols() == 0) throw DomainError("mrmd_rank: no features");
  if (!(w_r > 0.0 && w_r <= 1.0) || !(w_d > 0.0 && w_d <= 1.0))
    throw DomainError("mrmd_rank: weights must lie in (0, 1]");

  const Eigen::Index d = x.cols();
  VectorXd target(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) target[i] = y[static_cast<std::size_t>(i)];

  FeatureRanking r;
  r.w_r = w_r;
  r.w_d = w_d;
  r.relevance.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) r.relevance[j] = std::abs(pearson(x.col(j), target));

  r.distance = VectorXd::Zero(d);
  if (d > 1) {
    const MatrixXd z = Standardizer<double>::fit(x).apply(x);
    const MatrixXd gram = z.transpose() * z;
    for (Eigen::Index a = 0; a < d; ++a) {
      double sum = 0.0;
      for (Eigen::Index b = 0; b < d; ++b) {
        if (a == b) continue;
        sum += distance_from_gram(gram(a, a), gram(b, b), gram(a, b), distance);
      }
      r.distance[a] = sum / static_cast<double>(d - 1);
    }
  }
  min_max(r.relevance);
  min_max(r.distance);
  r.combined = w_r * r.relevance + w_d * r.distance;

  r.order.resize(static_cast<std::size_t>(d));
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    return r.combined[static_cast<Eigen::Index>(a)] > r.combined[static_cast<Eigen::Index>(b)];
  });
  return r;
}

IndexList select_top_k(const FeatureRanking& ranking, std::size_t k) {
  if (k < 1 || k > ranking.order.size()) {
    throw DomainError("k = " + std::to_string(k) + " outside [1, " +
                      std::to_string(ranking.order.size()) + "]");
  }
  return IndexList(ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(k));
}

PooledData pooled_ranking_data(const std::vector<balance::BalancedBinaryDataset>& sets,
                               const MatrixXd& x) {
  PooledData p;
  IndexList rows;
  for (const auto& s : sets) {
    const auto samples = s.samples();
    const auto targets = s.targets();
    rows.insert(rows.end(), samples.begin(), samples.end());
    p.y.insert(p.y.end(), targets.begin(), targets.end());
  }
  for (auto i : rows)
    if (i >= static_cast<std::size_t>(x.rows())) throw DomainError("sample index out of range");
  p.x = take_rows(x, rows);
  return p;
}

std::vector<std::size_t> coarse_grid(std::size_t dimensions, std::size_t step) {
  if (step < 1) throw DomainError("coarse step must be at least 1");
  if (dimensions < 1) throw DomainError("search needs at least one dimension");
  std::vector<std::size_t> grid;
  for (std::size_t k = step; k < dimensions; k += step) grid.push_back(k);
  grid.push_back(dimensions);
  return grid;
}

namespace {

std::vector<TracePoint> evaluate_all(const Evaluator& evaluator,
                                     const std::vector<std::size_t>& ks, std::size_t workers) {
  std::vector<TracePoint> trace(ks.size());
  parallel_for(ks.size(), workers, [&](std::size_t i) {
    const std::size_t k = ks[i];
    double score;
    try {
      score = evaluator(k);
    } catch (const std::exception& e) {
      throw Error("evaluation at k = " + std::to_string(k) + " failed: " + e.what());
    }
    if (!std::isfinite(score))
      throw Error("evaluation at k = " + std::to_string(k) + " returned a non-finite score");
    trace[i] = {k, score};
  });
  return trace;
}

// Largest score, smallest k on ties.
TracePoint best_of(const std::vector<TracePoint>& a, const std::vector<TracePoint>& b) {
  TracePoint best{0, -std::numeric_limits<double>::infinity()};
  for (const auto* t : {&a, &b}) {
    for (const auto& p : *t) {
      if (p.score > best.score || (p.score == best.score && p.k < best.k)) best = p;
    }
  }
  return best;
}

}  // namespace

DimensionSearchResult two_layer_search(const Evaluator& evaluator,
                                       const SearchOptions& options) {
  const auto grid = coarse_grid(options.dimensions, options.coarse_step);
  DimensionSearchResult r;
  r.coarse_trace = evaluate_all(evaluator, grid, options.workers);
  const std::size_t k1 = best_of(r.coarse_trace, {}).k;

  const std::set<std::size_t> seen(grid.begin(), grid.end());
  const std::size_t reach = options.coarse_step - 1;
  const std::size_t lo = k1 > reach ? k1 - reach : 1;
  const std::size_t hi = std::min(options.dimensions, k1 + reach);
  std::vector<std::size_t> fine;
  for (std::size_t k = std::max<std::size_t>(lo, 1); k <= hi; ++k)
    if (!seen.count(k)) fine.push_back(k);
  r.fine_trace = evaluate_all(evaluator, fine, options.workers);

  const auto best = best_of(r.coarse_trace, r.fine_trace);
  r.best_k = best.k;
  r.best_score = best.score;
  return r;
}

std::string trace_csv(const DimensionSearchResult& result) {
  std::ostringstream out;
  out << "round,k,ap\n";
  for (const auto& p : result.coarse_trace) out << "1," << p.k << ',' << format_double(p.score) << '\n';
  for (const auto& p : result.fine_trace) out << "2," << p.k << ',' << format_double(p.score) << '\n';
  return out.str();
}

}  // namespace locpred::select
