#include "locpred/rng.hpp"
#include "locpred/svm.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace locpred;
using namespace locpred::svm;

namespace {

struct Problem {
  MatrixXd x;
  std::vector<int> y;
};

Problem blobs(Rng& rng, std::size_t n, std::size_t d, double shift) {
  Problem p{MatrixXd(n, d), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    p.y[i] = i % 2 ? 1 : -1;
    for (std::size_t c = 0; c < d; ++c) p.x(i, c) = rng.normal() + shift * p.y[i];
  }
  return p;
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("kernel values") {
  VectorXd a(2), b(2);
  a << 1, 2;
  b << 0, 4;
  CHECK(kernel_eval(a, b, KernelSpec::linear()) == 8.0);
  CHECK(kernel_eval(a, b, KernelSpec::rbf(0.5)) == doctest::Approx(std::exp(-2.5)));
  MatrixXd m(2, 2);
  m.row(0) = a.transpose();
  m.row(1) = b.transpose();
  const auto k = kernel_matrix(m, m, KernelSpec::rbf(0.5));
  CHECK(k(0, 1) == doctest::Approx(std::exp(-2.5)));
  CHECK(k(1, 1) == 1.0);
  CHECK_THROWS_AS(KernelSpec::rbf(0.0).validate(), DomainError);
}

TEST_CASE("dual solution matches the QP oracle") {
  Rng rng(21);
  for (int t = 0; t < 40; ++t) {
    const auto n = 3 + rng.index(6);
    MatrixXd x(n, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = i == 0 ? 1 : (i == 1 ? -1 : (rng.uniform() < 0.5 ? 1 : -1));
    const double C = t % 2 ? 0.5 : 5.0;
    const MatrixXd k = kernel_matrix(x, x, KernelSpec::rbf(0.7));
    SolverOptions opts;
    opts.tol = 1e-6;
    const auto s = solve_dual(k, y, C, opts);
    CHECK(s.converged);
    const auto ref = oracle::solve_qp(k, y, C);
    CHECK(s.objective == doctest::Approx(ref.objective).epsilon(1e-6));
    CHECK(dual_objective(k, y, s.alpha) == doctest::Approx(oracle::dual_value(k, y, s.alpha)));
    // Feasibility.
    double balance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(s.alpha[i] >= 0.0);
      CHECK(s.alpha[i] <= C);
      balance += y[i] * s.alpha[i];
    }
    CHECK(std::abs(balance) < 1e-9);
  }
}

TEST_CASE("iteration budget is reported") {
  Rng rng(4);
  auto p = blobs(rng, 40, 2, 0.1);
  const MatrixXd k = kernel_matrix(p.x, p.x, KernelSpec::rbf(1.0));
  SolverOptions opts;
  opts.tol = 1e-9;
  opts.max_iterations = 2;
  const auto s = solve_dual(k, p.y, 100.0, opts);
  CHECK_FALSE(s.converged);
  CHECK(s.iterations == 2);
}

TEST_CASE("training separates blobs") {
  Rng rng(8);
  const auto train = blobs(rng, 60, 3, 2.0);
  const auto test = blobs(rng, 60, 3, 2.0);
  TrainOptions opts;
  opts.C = 1.0;
  opts.kernel = KernelSpec::rbf(0.3);
  const auto model = train_svm(train.x, train.y, opts);
  int correct = 0;
  for (Eigen::Index i = 0; i < test.x.rows(); ++i)
    correct += model.predict(test.x.row(i).transpose()) == test.y[static_cast<std::size_t>(i)];
  CHECK(correct >= 55);
  const VectorXd f = model.decision_values(test.x);
  CHECK(f[3] == doctest::Approx(model.decision_value(test.x.row(3).transpose())));
}

TEST_CASE("training preconditions") {
  MatrixXd x = MatrixXd::Random(4, 2);
  std::vector<int> one{1, 1, 1, 1};
  CHECK_THROWS_AS(train_svm(x, one, {}), DomainError);
  std::vector<int> ok{1, -1, 1, -1};
  TrainOptions bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(train_svm(x, ok, bad), DomainError);
  std::vector<int> weird{1, 0, 1, -1};
  CHECK_THROWS_AS(train_svm(x, weird, {}), DomainError);
}

TEST_CASE("model JSON round trip is exact") {
  Rng rng(12);
  const auto p = blobs(rng, 30, 2, 1.0);
  const auto model = train_svm(p.x, p.y, {});
  const auto back = svm_from_json(nlohmann::json::parse(to_json(model).dump()));
  CHECK(back.decision_values(p.x) == model.decision_values(p.x));
  CHECK(back.kernel == model.kernel);
  CHECK(back.C == model.C);
}

TEST_CASE("grid search is deterministic and picks a grid point") {
  Rng rng(30);
  const auto p = blobs(rng, 50, 2, 1.5);
  GridOptions opts;
  opts.C_grid = {0.1, 1.0};
  opts.gamma_grid = {0.0, 2.0};
  opts.folds = 4;
  const auto a = grid_cv_svm(p.x, p.y, opts, 77);
  opts.workers = 3;
  const auto b = grid_cv_svm(p.x, p.y, opts, 77);
  CHECK(a.C == b.C);
  CHECK(a.gamma == b.gamma);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.table.size() == 4);
  double best = 0.0;
  for (const auto& g : a.table) best = std::max(best, g.accuracy);
  CHECK(a.accuracy == best);
  // Non-positive gamma resolves to 1 / dimension.
  bool resolved = false;
  for (const auto& g : a.table) resolved = resolved || g.gamma == 0.5;
  CHECK(resolved);
  CHECK(a.accuracy > 0.8);
}

}  // TEST_SUITE
