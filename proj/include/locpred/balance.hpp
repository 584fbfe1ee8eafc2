#ifndef LOCPRED_BALANCE_HPP
#define LOCPRED_BALANCE_HPP

#include "locpred/dataset.hpp"
#include "locpred/svm.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace locpred::balance {

struct BalancedBinaryDataset {
  std::size_t label_index = 0;
  IndexList positives;  // ascending sample indices
  IndexList negatives;  // ascending sample indices
  double C = 0.0;
  double gamma = 0.0;
  /// "svm-boundary", "already-balanced" or "random-undersample".
  std::string method;

  std::size_t size() const { return positives.size() + negatives.size(); }
  /// Samples followed by +1 / -1 targets, positives first.
  IndexList samples() const;
  std::vector<int> targets() const;

  bool operator==(const BalancedBinaryDataset&) const = default;
};

struct BalanceOptions {
  svm::GridOptions grid;
};

/// Keeps every minority sample and the majority samples with the smallest
/// |f(x)| under an RBF SVM fitted (with grid-searched C and gamma) on the
/// full imbalanced problem. Ties in |f| go to the smaller sample index. When
/// the solver hits its iteration budget the majority side is instead
/// under-sampled uniformly at random from `seed`.
BalancedBinaryDataset boundary_balance(const data::BinaryDataset& binary,
                                       const MatrixXd& x,
                                       const BalanceOptions& options,
                                       std::uint64_t seed);

/// The m entries of `candidates` with the smallest |score|, ties by index;
/// returned in ascending index order. `scores` is aligned with `candidates`.
IndexList nearest_to_boundary(const IndexList& candidates, const VectorXd& scores,
                              std::size_t m);

/// boundary_balance per label, ordered by label index. Each label draws its
/// randomness from (seed, label index), so results do not depend on the
/// processing order.
std::vector<BalancedBinaryDataset> balance_all(
    const std::vector<data::BinaryDataset>& binaries, const MatrixXd& x,
    const BalanceOptions& options, std::uint64_t seed, std::size_t workers = 1);

nlohmann::json to_json(const std::vector<BalancedBinaryDataset>& sets);
std::vector<BalancedBinaryDataset> balanced_from_json(const nlohmann::json& j);

}  // namespace locpred::balance

#endif  // LOCPRED_BALANCE_HPP
