#ifndef LOCPRED_SELECT_HPP
#define LOCPRED_SELECT_HPP

#include "locpred/balance.hpp"
#include "locpred/common.hpp"

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace locpred::select {

enum class Distance { Euclidean, Cosine, Tanimoto };

Distance parse_distance(std::string_view name);
std::string distance_name(Distance d);

struct FeatureRanking {
  VectorXd relevance;   // MR, min-max normalized
  VectorXd distance;    // MD, min-max normalized
  VectorXd combined;
  std::vector<std::size_t> order;
  double w_r = 1.0;
  double w_d = 1.0;

  std::size_t size() const { return order.size(); }
};

/// Distance between two columns under `d`. Cosine and Tanimoto treat a pair
/// with a zero denominator as similarity 0.
double column_distance(const VectorXd& a, const VectorXd& b, Distance d);

/// Max-relevance max-distance ranking. Relevance is |Pearson| between each
/// column and the +1/-1 target; distance is the mean distance of each
/// standardized column to every other one. Both are min-max scaled to
/// [0, 1] (all zero when constant) before w_r * MR + w_d * MD.
FeatureRanking mrmd_rank(const MatrixXd& x, std::span<const int> y, double w_r = 1.0,
                         double w_d = 1.0, Distance distance = Distance::Euclidean);

/// First k entries of the ranking order.
IndexList select_top_k(const FeatureRanking& ranking, std::size_t k);

/// Rows of every balanced set stacked label by label with +1 / -1 targets.
struct PooledData {
  MatrixXd x;
  std::vector<int> y;
};
PooledData pooled_ranking_data(const std::vector<balance::BalancedBinaryDataset>& sets,
                               const MatrixXd& x);

struct TracePoint {
  std::size_t k = 0;
  double score = 0.0;
  bool operator==(const TracePoint&) const = default;
};

struct DimensionSearchResult {
  std::size_t best_k = 0;
  double best_score = 0.0;
  std::vector<TracePoint> coarse_trace;
  std::vector<TracePoint> fine_trace;
};

struct SearchOptions {
  std::size_t dimensions = 350;
  std::size_t coarse_step = 10;
  std::size_t workers = 1;
};

using Evaluator = std::function<double(std::size_t k)>;

/// Multiples of the step below `dimensions`, plus `dimensions` itself.
std::vector<std::size_t> coarse_grid(std::size_t dimensions, std::size_t step);

/// Coarse pass over coarse_grid, then every unevaluated k within step - 1 of
/// the coarse argmax. The best k is the smallest one attaining the maximum
/// over both passes. Evaluations inside a pass run on `workers` threads.
DimensionSearchResult two_layer_search(const Evaluator& evaluator,
                                       const SearchOptions& options);

/// "round,k,ap" rows, coarse round first.
std::string trace_csv(const DimensionSearchResult& result);

}  // namespace locpred::select

#endif  // LOCPRED_SELECT_HPP
