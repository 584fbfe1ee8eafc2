#include "locpred/eval.hpp"

#include "locpred/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace locpred::eval {

IndexList FoldPlan::test_indices(std::size_t f) const {
  IndexList out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == f) out.push_back(i);
  return out;
}

IndexList FoldPlan::train_indices(std::size_t f) const {
  IndexList out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != f) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(folds, 0);
  for (auto f : fold_of) ++sizes[f];
  return sizes;
}

FoldPlan kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                     std::span<const int> strata) {
  if (k == 0) throw DomainError("fold count must be positive");
  if (k > n) {
    throw DomainError("cannot split " + std::to_string(n) + " samples into " +
                      std::to_string(k) + " folds");
  }
  if (!strata.empty() && strata.size() != n)
    throw DomainError("strata length differs from sample count");

  std::map<int, IndexList> groups;
  for (std::size_t i = 0; i < n; ++i) groups[strata.empty() ? 0 : strata[i]].push_back(i);

  FoldPlan plan;
  plan.folds = k;
  plan.seed = seed;
  plan.strata.assign(strata.begin(), strata.end());
  plan.fold_of.assign(n, 0);
  // Fold order is itself shuffled so that the folds receiving the extra
  // samples vary with the seed.
  Rng rng(seed);
  std::vector<std::size_t> fold_order(k);
  std::iota(fold_order.begin(), fold_order.end(), 0);
  rng.shuffle(fold_order);
  std::size_t deal = 0;
  for (auto& [stratum, members] : groups) {
    rng.shuffle(members);
    for (auto i : members) plan.fold_of[i] = fold_order[deal++ % k];
  }
  return plan;
}

std::vector<std::size_t> rank_labels(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

namespace {

// rank_of[label] = 1-based rank of that label for sample i.
std::vector<std::size_t> ranks_for(const MatrixXd& scores, Eigen::Index i) {
  std::vector<double> row(static_cast<std::size_t>(scores.cols()));
  for (Eigen::Index j = 0; j < scores.cols(); ++j) row[j] = scores(i, j);
  auto order = rank_labels(row);
  std::vector<std::size_t> rank_of(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank_of[order[r]] = r + 1;
  return rank_of;
}

void check_aligned(const MatrixXd& scores, const std::vector<data::LabelSet>& truth) {
  if (static_cast<std::size_t>(scores.rows()) != truth.size())
    throw DomainError("score matrix and truth differ in sample count");
  if (truth.empty()) throw DomainError("metrics need at least one sample");
  for (const auto& t : truth) {
    if (t.empty()) throw DomainError("empty truth label set");
    for (auto j : t)
      if (j >= static_cast<std::size_t>(scores.cols()))
        throw DomainError("label index out of vocabulary");
  }
}

bool contains(const data::LabelSet& s, std::size_t j) {
  return std::find(s.begin(), s.end(), j) != s.end();
}

}  // namespace

double ranking_ap(const MatrixXd& scores, const std::vector<data::LabelSet>& truth) {
  check_aligned(scores, truth);
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const auto rank_of = ranks_for(scores, i);
    const auto& t = truth[static_cast<std::size_t>(i)];
    double sample = 0.0;
    for (auto xi : t) {
      std::size_t at_or_above = 0;
      for (auto other : t)
        if (rank_of[other] <= rank_of[xi]) ++at_or_above;
      sample += static_cast<double>(at_or_above) / static_cast<double>(rank_of[xi]);
    }
    total += sample / static_cast<double>(t.size());
  }
  return total / static_cast<double>(scores.rows());
}

double macro_ap(std::span<const double> per_label_precision) {
  if (per_label_precision.empty()) throw DomainError("macro AP of an empty list");
  double sum = 0.0;
  for (double p : per_label_precision) sum += p;
  return sum / static_cast<double>(per_label_precision.size());
}

double hamming_loss(const std::vector<data::LabelSet>& predictions,
                    const std::vector<data::LabelSet>& truth, std::size_t labels) {
  if (predictions.size() != truth.size())
    throw DomainError("predictions and truth differ in length");
  if (truth.empty() || labels == 0) throw DomainError("hamming loss needs samples and labels");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    std::vector<bool> p(labels, false), t(labels, false);
    for (auto j : predictions[i]) {
      if (j >= labels) throw DomainError("label index out of vocabulary");
      p[j] = true;
    }
    for (auto j : truth[i]) {
      if (j >= labels) throw DomainError("label index out of vocabulary");
      t[j] = true;
    }
    std::size_t diff = 0;
    for (std::size_t j = 0; j < labels; ++j) diff += p[j] != t[j];
    total += static_cast<double>(diff) / static_cast<double>(labels);
  }
  return total / static_cast<double>(truth.size());
}

double one_error(const MatrixXd& scores, const std::vector<data::LabelSet>& truth) {
  check_aligned(scores, truth);
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const auto rank_of = ranks_for(scores, i);
    const auto top = static_cast<std::size_t>(
        std::find(rank_of.begin(), rank_of.end(), 1) - rank_of.begin());
    if (!contains(truth[static_cast<std::size_t>(i)], top)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(scores.rows());
}

double coverage(const MatrixXd& scores, const std::vector<data::LabelSet>& truth) {
  check_aligned(scores, truth);
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const auto rank_of = ranks_for(scores, i);
    std::size_t worst = 0;
    for (auto j : truth[static_cast<std::size_t>(i)]) worst = std::max(worst, rank_of[j]);
    total += static_cast<double>(worst - 1);
  }
  return total / static_cast<double>(scores.rows());
}

double ranking_loss(const MatrixXd& scores, const std::vector<data::LabelSet>& truth) {
  check_aligned(scores, truth);
  const auto labels = static_cast<std::size_t>(scores.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const auto rank_of = ranks_for(scores, i);
    const auto& t = truth[static_cast<std::size_t>(i)];
    std::size_t pairs = 0, wrong = 0;
    for (auto a : t) {
      for (std::size_t b = 0; b < labels; ++b) {
        if (contains(t, b)) continue;
        ++pairs;
        if (rank_of[b] < rank_of[a]) ++wrong;
      }
    }
    if (pairs > 0) total += static_cast<double>(wrong) / static_cast<double>(pairs);
  }
  return total / static_cast<double>(scores.rows());
}

double subset_accuracy(const std::vector<data::LabelSet>& predictions,
                       const std::vector<data::LabelSet>& truth) {
  if (predictions.size() != truth.size() || truth.empty())
    throw DomainError("subset accuracy needs aligned, non-empty inputs");
  std::size_t exact = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto p = predictions[i];
    auto t = truth[i];
    std::sort(p.begin(), p.end());
    std::sort(t.begin(), t.end());
    exact += p == t;
  }
  return static_cast<double>(exact) / static_cast<double>(truth.size());
}

MetricReport multilabel_metrics(const std::vector<data::LabelSet>& predictions,
                                const MatrixXd& scores,
                                const std::vector<data::LabelSet>& truth) {
  check_aligned(scores, truth);
  MetricReport r;
  const auto labels = static_cast<std::size_t>(scores.cols());
  r.samples = truth.size();
  r.hamming_loss = hamming_loss(predictions, truth, labels);
  r.one_error = one_error(scores, truth);
  r.coverage = coverage(scores, truth);
  r.ranking_loss = ranking_loss(scores, truth);
  r.ranking_ap = ranking_ap(scores, truth);
  r.subset_accuracy = subset_accuracy(predictions, truth);
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"per_label_precision", r.per_label_precision},
          {"per_label_ppv", r.per_label_ppv},
          {"macro_ap", r.macro_ap},
          {"ranking_ap", r.ranking_ap},
          {"hamming_loss", r.hamming_loss},
          {"one_error", r.one_error},
          {"coverage", r.coverage},
          {"ranking_loss", r.ranking_loss},
          {"subset_accuracy", r.subset_accuracy},
          {"samples", r.samples}};
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport r;
  j.at("per_label_precision").get_to(r.per_label_precision);
  j.at("per_label_ppv").get_to(r.per_label_ppv);
  j.at("macro_ap").get_to(r.macro_ap);
  j.at("ranking_ap").get_to(r.ranking_ap);
  j.at("hamming_loss").get_to(r.hamming_loss);
  j.at("one_error").get_to(r.one_error);
  j.at("coverage").get_to(r.coverage);
  j.at("ranking_loss").get_to(r.ranking_loss);
  j.at("subset_accuracy").get_to(r.subset_accuracy);
  j.at("samples").get_to(r.samples);
  return r;
}

double BinaryCounts::accuracy() const {
  const std::size_t n = tp + tn + fp + fn;
  return n ? static_cast<double>(tp + tn) / static_cast<double>(n) : 0.0;
}

double BinaryCounts::ppv() const {
  return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
}

BinaryCounts count_binary(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw DomainError("prediction and truth lengths differ");
  BinaryCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] > 0, t = truth[i] > 0;
    if (p && t) ++c.tp;
    else if (!p && !t) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

}  // namespace locpred::eval
