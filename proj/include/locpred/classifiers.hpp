#ifndef LOCPRED_CLASSIFIERS_HPP
#define LOCPRED_CLASSIFIERS_HPP

#include "locpred/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace locpred::classifiers {

enum class Kind {
  NaiveBayes,
  LogisticRegression,
  KNearestNeighbors,
  DecisionTree,
  RandomForest,
  AdaBoost,
  LinearSvm,
  RbfSvm,
  ExtraTrees,
  Bagging,
  GradientBoosting,
  SgdLinear,
};

std::string kind_name(Kind kind);
Kind parse_kind(std::string_view name);
/// The eight kinds every configuration may rely on.
std::vector<Kind> core_kinds();
/// All twelve kinds in declaration order.
std::vector<Kind> all_kinds();

/// Fills defaults into a parameter object and throws DomainError for
/// unknown keys or out-of-range values.
nlohmann::json validate_params(Kind kind, const nlohmann::json& params);

/// Small default grid per kind.
std::vector<nlohmann::json> default_grid(Kind kind);

/// A trained binary classifier over +1 / -1 targets.
class BinaryClassifier {
 public:
  virtual ~BinaryClassifier() = default;

  virtual Kind kind() const = 0;
  /// Real-valued confidence for the positive class.
  virtual double score(const VectorXd& x) const = 0;
  /// Scores at or below this value predict -1: 0.5 for probabilistic kinds,
  /// 0 for margin-based ones.
  virtual double threshold() const = 0;
  virtual Eigen::Index dimension() const = 0;
  /// Kind-specific payload; see classifier_from_json.
  virtual nlohmann::json payload() const = 0;

  VectorXd scores(const MatrixXd& x) const;
  int predict(const VectorXd& x) const { return score(x) > threshold() ? 1 : -1; }
  std::vector<int> predict_all(const MatrixXd& x) const;
};

/// Trains one classifier of `kind`. Deterministic for a fixed seed. Both
/// classes must be present.
std::unique_ptr<BinaryClassifier> train_base(Kind kind, const nlohmann::json& params,
                                             const MatrixXd& x, std::span<const int> y,
                                             std::uint64_t seed);

nlohmann::json to_json(const BinaryClassifier& model);
std::unique_ptr<BinaryClassifier> classifier_from_json(const nlohmann::json& j);

// Tree internals exposed for tests.

struct TreeParams {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;  // 0 = all
  bool random_thresholds = false;
};

/// Array-encoded binary tree. feature < 0 marks a leaf. Samples with
/// x[feature] <= threshold go left.
struct Tree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  int leaf_of(const VectorXd& x) const;
  double predict(const VectorXd& x) const { return value[static_cast<std::size_t>(leaf_of(x))]; }
  std::size_t depth() const;
  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);
};

/// Weighted least-squares regression tree on `target`; with 0/1 targets the
/// split criterion is proportional to Gini impurity and leaves hold the
/// weighted positive fraction. Ties between splits go to the lower feature
/// index, then the lower threshold.
Tree fit_tree(const MatrixXd& x, const VectorXd& target, const VectorXd& weights,
              const IndexList& rows, const TreeParams& params, std::uint64_t seed);

}  // namespace locpred::classifiers

#endif  // LOCPRED_CLASSIFIERS_HPP
