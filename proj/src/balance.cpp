#include "locpred/balance.hpp"

#include "locpred/parallel.hpp"
#include "locpred/rng.hpp"
#include "locpred/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace locpred::balance {

IndexList BalancedBinaryDataset::samples() const {
  IndexList out = positives;
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

std::vector<int> BalancedBinaryDataset::targets() const {
  std::vector<int> out(positives.size(), 1);
  out.insert(out.end(), negatives.size(), -1);
  return out;
}

IndexList nearest_to_boundary(const IndexList& candidates, const VectorXd& scores,
                              std::size_t m) {
  if (static_cast<Eigen::Index>(candidates.size()) != scores.size())
    throw DomainError("candidate and score counts differ");
  if (m > candidates.size()) throw DomainError("cannot select more samples than exist");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  auto closer = [&](std::size_t a, std::size_t b) {
    const double fa = std::abs(scores[static_cast<Eigen::Index>(a)]);
    const double fb = std::abs(scores[static_cast<Eigen::Index>(b)]);
    if (fa != fb) return fa < fb;
    return candidates[a] < candidates[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m),
                    order.end(), closer);
  IndexList out;
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) out.push_back(candidates[order[k]]);
  std::sort(out.begin(), out.end());
  return out;
}

BalancedBinaryDataset boundary_balance(const data::BinaryDataset& binary,
                                       const MatrixXd& x,
                                       const BalanceOptions& options,
                                       std::uint64_t seed) {
  BalancedBinaryDataset out;
  out.label_index = binary.label_index;
  IndexList pos = binary.positives, neg = binary.negatives;
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  if (pos.empty() || neg.empty())
    throw DomainError("label " + std::to_string(binary.label_index + 1) +
                      " has an empty class; nothing to balance");
  for (auto i : pos)
    if (i >= static_cast<std::size_t>(x.rows())) throw DomainError("sample index out of range");
  for (auto i : neg)
    if (i >= static_cast<std::size_t>(x.rows())) throw DomainError("sample index out of range");

  if (pos.size() == neg.size()) {
    out.positives = std::move(pos);
    out.negatives = std::move(neg);
    out.method = "already-balanced";
    return out;
  }

  // "Majority" always denotes the larger side.
  const bool positives_minor = pos.size() < neg.size();
  const IndexList& minority = positives_minor ? pos : neg;
  const IndexList& majority = positives_minor ? neg : pos;

  IndexList all = pos;
  all.insert(all.end(), neg.begin(), neg.end());
  std::vector<int> y(pos.size(), 1);
  y.insert(y.end(), neg.size(), -1);
  const MatrixXd xs = take_rows(x, all);

  svm::GridOptions grid = options.grid;
  grid.folds = std::min(grid.folds, all.size());
  const auto best = svm::grid_cv_svm(xs, y, grid, derive_seed(seed, "grid"));
  out.C = best.C;
  out.gamma = best.gamma;

  svm::TrainOptions train;
  train.C = best.C;
  train.kernel = svm::KernelSpec::rbf(best.gamma);
  train.tol = grid.tol;
  train.max_iterations = grid.max_iterations;
  const auto model = svm::train_svm(xs, y, train);

  IndexList selected;
  if (model.converged) {
    const VectorXd f = model.decision_values(take_rows(x, majority));
    selected = nearest_to_boundary(majority, f, minority.size());
    out.method = "svm-boundary";
  } else {
    Rng rng(derive_seed(seed, "fallback"));
    IndexList pool = majority;
    rng.shuffle(pool);
    selected.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(minority.size()));
    std::sort(selected.begin(), selected.end());
    out.method = "random-undersample";
  }
  out.positives = positives_minor ? pos : selected;
  out.negatives = positives_minor ? selected : neg;
  return out;
}

std::vector<BalancedBinaryDataset> balance_all(
    const std::vector<data::BinaryDataset>& binaries, const MatrixXd& x,
    const BalanceOptions& options, std::uint64_t seed, std::size_t workers) {
  std::vector<BalancedBinaryDataset> out(binaries.size());
  parallel_for(binaries.size(), workers, [&](std::size_t k) {
    const auto& b = binaries[k];
    try {
      out[k] = boundary_balance(b, x, options, derive_seed(seed, b.label_index));
    } catch (const Error& e) {
      throw Error("balancing label " + std::to_string(b.label_index + 1) + " failed: " +
                  e.what());
    }
  });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.label_index < b.label_index;
  });
  return out;
}

nlohmann::json to_json(const std::vector<BalancedBinaryDataset>& sets) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : sets) {
    arr.push_back({{"label_index", s.label_index},
                   {"positives", s.positives},
                   {"negatives", s.negatives},
                   {"C", s.C},
                   {"gamma", s.gamma},
                   {"method", s.method}});
  }
  return {{"format_version", 1}, {"labels", arr}};
}

std::vector<BalancedBinaryDataset> balanced_from_json(const nlohmann::json& j) {
  std::vector<BalancedBinaryDataset> out;
  for (const auto& e : j.at("labels")) {
    BalancedBinaryDataset s;
    e.at("label_index").get_to(s.label_index);
    e.at("positives").get_to(s.positives);
    e.at("negatives").get_to(s.negatives);
    e.at("C").get_to(s.C);
    e.at("gamma").get_to(s.gamma);
    e.at("method").get_to(s.method);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace locpred::balance
