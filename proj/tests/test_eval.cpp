#include "locpred/eval.hpp"
#include "locpred/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <set>

using namespace locpred;
using namespace locpred::eval;

TEST_SUITE("eval") {

TEST_CASE("kfold partitions and balances") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto n = 5 + rng.index(60);
    const auto k = 2 + rng.index(std::min<std::size_t>(n - 1, 9));
    std::vector<int> strata(n);
    for (auto& s : strata) s = static_cast<int>(rng.index(3));
    const auto plan = kfold_split(n, k, rng.next(), strata);
    std::set<std::size_t> seen;
    for (std::size_t f = 0; f < k; ++f) {
      const auto test = plan.test_indices(f);
      const auto train = plan.train_indices(f);
      CHECK(test.size() + train.size() == n);
      for (auto i : test) CHECK(seen.insert(i).second);
      CHECK(std::is_sorted(test.begin(), test.end()));
    }
    CHECK(seen.size() == n);
    const auto sizes = plan.fold_sizes();
    CHECK(*std::max_element(sizes.begin(), sizes.end()) -
              *std::min_element(sizes.begin(), sizes.end()) <= 1);
    // Each stratum is spread within one sample per fold.
    for (int s = 0; s < 3; ++s) {
      std::vector<std::size_t> per(k);
      for (std::size_t i = 0; i < n; ++i)
        if (strata[i] == s) ++per[plan.fold_of[i]];
      CHECK(*std::max_element(per.begin(), per.end()) -
                *std::min_element(per.begin(), per.end()) <= 1);
    }
  }
  CHECK(kfold_split(20, 4, 9).fold_of == kfold_split(20, 4, 9).fold_of);
  CHECK(kfold_split(20, 4, 9).fold_of != kfold_split(20, 4, 10).fold_of);
  CHECK_THROWS_AS(kfold_split(3, 4, 1), DomainError);
  CHECK_THROWS_AS(kfold_split(3, 0, 1), DomainError);
}

TEST_CASE("label ranking ties go to the lower index") {
  const std::vector<double> s{0.2, 0.9, 0.2, 0.5};
  CHECK(rank_labels(s) == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("macro AP is the arithmetic mean") {
  const std::vector<double> v{0.5, 1.0, 0.0, 0.7};
  CHECK(macro_ap(v) == doctest::Approx(0.55));
  CHECK_THROWS(macro_ap(std::vector<double>{}));
}

TEST_CASE("metrics agree with pair counting") {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto q = 2 + rng.index(6);
    const auto n = 1 + rng.index(10);
    MatrixXd s(n, q);
    std::vector<std::vector<double>> rows(n);
    std::vector<data::LabelSet> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < q; ++j) {
        s(i, j) = static_cast<double>(rng.index(3));
        rows[i].push_back(s(i, j));
        if (rng.uniform() < 0.4) truth[i].push_back(j);
        if (rng.uniform() < 0.4) pred[i].push_back(j);
      }
      if (truth[i].empty()) truth[i].push_back(rng.index(q));
    }
    CHECK(hamming_loss(pred, truth, q) == doctest::Approx(oracle::hamming(pred, truth, q)));
    CHECK(one_error(s, truth) == doctest::Approx(oracle::one_error(rows, truth)));
    CHECK(coverage(s, truth) == doctest::Approx(oracle::coverage(rows, truth)));
    CHECK(ranking_loss(s, truth) == doctest::Approx(oracle::ranking_loss(rows, truth)));
    CHECK(ranking_ap(s, truth) == doctest::Approx(oracle::ranking_ap(rows, truth)));
    double exact = 0.0;
    for (std::size_t i = 0; i < n; ++i) exact += pred[i] == truth[i];
    CHECK(subset_accuracy(pred, truth) == doctest::Approx(exact / n));
  }
}

TEST_CASE("perfect and worst rankings") {
  MatrixXd s(2, 3);
  s << 0.9, 0.1, 0.8,
       0.0, 0.7, 0.2;
  const std::vector<data::LabelSet> truth{{0, 2}, {1}};
  CHECK(ranking_ap(s, truth) == 1.0);
  CHECK(one_error(s, truth) == 0.0);
  CHECK(ranking_loss(s, truth) == 0.0);
  CHECK(coverage(s, truth) == doctest::Approx(0.5));
  const MatrixXd worst = -s;
  CHECK(one_error(worst, truth) == 1.0);
  CHECK(ranking_loss(worst, truth) == 1.0);
}

TEST_CASE("report JSON round trip") {
  MetricReport r;
  r.per_label_precision = {0.8, 0.9};
  r.per_label_ppv = {0.7, 1.0};
  r.macro_ap = 0.85;
  r.ranking_ap = 0.1 + 0.2;
  r.subset_accuracy = 0.75;
  r.samples = 4;
  const auto back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.per_label_precision == r.per_label_precision);
  CHECK(back.ranking_ap == r.ranking_ap);
  CHECK(back.samples == 4);
}

TEST_CASE("binary counts") {
  const std::vector<int> pred{1, 1, -1, -1, 1};
  const std::vector<int> truth{1, -1, -1, 1, 1};
  const auto c = count_binary(pred, truth);
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
  CHECK(c.tn == 1);
  CHECK(c.fn == 1);
  CHECK(c.accuracy() == doctest::Approx(0.6));
  CHECK(c.ppv() == doctest::Approx(2.0 / 3));
  CHECK(count_binary(std::vector<int>{-1}, std::vector<int>{1}).ppv() == 0.0);
}

}  // TEST_SUITE
