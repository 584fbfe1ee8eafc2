#ifndef LOCPRED_EVAL_HPP
#define LOCPRED_EVAL_HPP

#include "locpred/common.hpp"
#include "locpred/dataset.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace locpred::eval {

struct FoldPlan {
  std::vector<std::size_t> fold_of;  // per sample, in [0, folds)
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::vector<int> strata;

  /// Indices with fold_of == f (ascending).
  IndexList test_indices(std::size_t f) const;
  IndexList train_indices(std::size_t f) const;
  std::vector<std::size_t> fold_sizes() const;
};

/// Stratified shuffled k-fold assignment. Samples are shuffled within each
/// stratum and dealt round-robin with the dealing position carried across
/// strata, so fold sizes differ by at most one and each stratum is spread as
/// evenly as possible. An empty `strata` means a single stratum.
FoldPlan kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                     std::span<const int> strata = {});

/// Label ranking for one sample: label indices by descending score, ties by
/// ascending label index.
std::vector<std::size_t> rank_labels(std::span<const double> scores);

/// Label-ranking average precision, averaged over samples. `scores` is
/// samples x labels.
double ranking_ap(const MatrixXd& scores, const std::vector<data::LabelSet>& truth);

/// Arithmetic mean of per-label precisions.
double macro_ap(std::span<const double> per_label_precision);

struct MetricReport {
  std::vector<double> per_label_precision;
  std::vector<double> per_label_ppv;
  double macro_ap = 0.0;
  double ranking_ap = 0.0;
  double hamming_loss = 0.0;
  double one_error = 0.0;
  double coverage = 0.0;
  double ranking_loss = 0.0;
  double subset_accuracy = 0.0;
  std::size_t samples = 0;
};

double hamming_loss(const std::vector<data::LabelSet>& predictions,
                    const std::vector<data::LabelSet>& truth, std::size_t labels);
double one_error(const MatrixXd& scores, const std::vector<data::LabelSet>& truth);
double coverage(const MatrixXd& scores, const std::vector<data::LabelSet>& truth);
double ranking_loss(const MatrixXd& scores, const std::vector<data::LabelSet>& truth);
double subset_accuracy(const std::vector<data::LabelSet>& predictions,
                       const std::vector<data::LabelSet>& truth);

/// Every multi-label metric for aligned predictions, scores and truth.
/// per_label_precision / macro_ap are left for the caller to fill.
MetricReport multilabel_metrics(const std::vector<data::LabelSet>& predictions,
                                const MatrixXd& scores,
                                const std::vector<data::LabelSet>& truth);

nlohmann::json to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);

/// Binary classification counts for precision bookkeeping.
struct BinaryCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy() const;
  /// Positive predictive value; 0 when nothing was predicted positive.
  double ppv() const;
};

BinaryCounts count_binary(std::span<const int> predicted, std::span<const int> truth);

}  // namespace locpred::eval

#endif  // LOCPRED_EVAL_HPP
