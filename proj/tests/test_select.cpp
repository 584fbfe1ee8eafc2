#include "locpred/rng.hpp"
#include "locpred/select.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <atomic>

using namespace locpred;
using namespace locpred::select;

TEST_SUITE("select") {

TEST_CASE("distance names") {
  CHECK(parse_distance("cosine") == Distance::Cosine);
  CHECK(distance_name(Distance::Tanimoto) == "tanimoto");
  CHECK_THROWS(parse_distance("manhattan"));
}

TEST_CASE("column distances") {
  VectorXd a(3), b(3), z = VectorXd::Zero(3);
  a << 1, 0, 1;
  b << 1, 1, 0;
  CHECK(column_distance(a, b, Distance::Euclidean) == doctest::Approx(std::sqrt(2.0)));
  CHECK(column_distance(a, b, Distance::Cosine) == doctest::Approx(0.5));
  CHECK(column_distance(a, b, Distance::Tanimoto) == doctest::Approx(1.0 - 1.0 / 3.0));
  CHECK(column_distance(z, z, Distance::Cosine) == 1.0);
  CHECK(column_distance(z, z, Distance::Tanimoto) == 1.0);
}

TEST_CASE("MRMD matches the naive oracle") {
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    MatrixXd x(25, 12);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    if (t % 3 == 0) x.col(5).setZero();
    std::vector<int> y(25);
    for (auto& v : y) v = rng.uniform() < 0.5 ? 1 : -1;
    const auto metric = static_cast<Distance>(t % 3);
    const auto got = mrmd_rank(x, y, 0.7, 0.3, metric);
    const auto ref = oracle::mrmd(x, y, 0.7, 0.3, distance_name(metric));
    CHECK(got.order == ref.order);
    for (int c = 0; c < 12; ++c) {
      CHECK(got.relevance[c] == doctest::Approx(ref.mr[c]));
      CHECK(got.distance[c] == doctest::Approx(ref.md[c]));
    }
  }
}

TEST_CASE("MRMD scores lie in range and ties go to the lower index") {
  MatrixXd x(6, 3);
  x.col(0) << 1, 2, 3, 4, 5, 6;
  x.col(1) = x.col(0);
  x.col(2) << 1, 1, 1, 1, 1, 1;
  const std::vector<int> y{-1, -1, -1, 1, 1, 1};
  const auto r = mrmd_rank(x, y);
  CHECK(r.order == std::vector<std::size_t>{0, 1, 2});
  CHECK(r.relevance.minCoeff() >= 0.0);
  CHECK(r.relevance.maxCoeff() <= 1.0);
  CHECK_THROWS_AS(mrmd_rank(x, y, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(mrmd_rank(x, std::vector<int>{1, -1}), DomainError);
}

TEST_CASE("top-k is a prefix of the ranking") {
  Rng rng(3);
  MatrixXd x(20, 10);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  std::vector<int> y(20);
  for (std::size_t i = 0; i < 20; ++i) y[i] = i < 10 ? 1 : -1;
  const auto r = mrmd_rank(x, y);
  for (std::size_t k = 1; k <= 10; ++k) {
    const auto top = select_top_k(r, k);
    CHECK(top == IndexList(r.order.begin(), r.order.begin() + static_cast<long>(k)));
  }
  CHECK_THROWS(select_top_k(r, 11));
  CHECK_THROWS(select_top_k(r, 0));
}

TEST_CASE("coarse grid") {
  CHECK(coarse_grid(35, 10) == std::vector<std::size_t>{10, 20, 30, 35});
  CHECK(coarse_grid(30, 10) == std::vector<std::size_t>{10, 20, 30});
  CHECK(coarse_grid(5, 10) == std::vector<std::size_t>{5});
}

TEST_CASE("two-layer search refines around the coarse winner") {
  std::atomic<int> calls{0};
  const Evaluator f = [&](std::size_t k) {
    ++calls;
    return -std::abs(static_cast<double>(k) - 47.0);
  };
  SearchOptions opts;
  opts.dimensions = 100;
  opts.coarse_step = 10;
  const auto r = two_layer_search(f, opts);
  CHECK(r.best_k == 47);
  CHECK(r.best_score == 0.0);
  CHECK(r.coarse_trace.size() == 10);
  // Window [41, 59] minus the coarse point 50.
  CHECK(r.fine_trace.size() == 18);
  CHECK(calls == 28);
  const auto csv = trace_csv(r);
  CHECK(csv.rfind("round,k,ap\n1,10,", 0) == 0);
  CHECK(csv.find("\n2,41,") != std::string::npos);
}

TEST_CASE("two-layer search ties go to the smallest k") {
  const Evaluator flat = [](std::size_t) { return 0.5; };
  SearchOptions opts;
  opts.dimensions = 60;
  opts.coarse_step = 10;
  const auto r = two_layer_search(flat, opts);
  CHECK(r.best_k == 1);
}

TEST_CASE("evaluator failures name k") {
  const Evaluator bad = [](std::size_t k) -> double {
    if (k == 30) throw std::runtime_error("boom");
    return 0.0;
  };
  SearchOptions opts;
  opts.dimensions = 40;
  try {
    two_layer_search(bad, opts);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("k = 30") != std::string::npos);
  }
}

TEST_CASE("pooled data stacks the balanced sets") {
  MatrixXd x(4, 2);
  x << 0, 0, 1, 1, 2, 2, 3, 3;
  balance::BalancedBinaryDataset a, b;
  a.positives = {1};
  a.negatives = {3};
  b.label_index = 1;
  b.positives = {0};
  b.negatives = {2};
  const auto p = pooled_ranking_data({a, b}, x);
  CHECK(p.y == std::vector<int>{1, -1, 1, -1});
  CHECK(p.x.col(0) == (VectorXd(4) << 1, 3, 0, 2).finished());
}

}  // TEST_SUITE
