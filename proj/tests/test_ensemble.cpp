#include "locpred/ensemble.hpp"
#include "locpred/rng.hpp"

#include <doctest.h>

using namespace locpred;
using namespace locpred::ensemble;

namespace {

struct Problem {
  MatrixXd x;
  balance::BalancedBinaryDataset set;
};

// 40 samples; label 0 separates on column 0, label 1 on column 1.
std::vector<Problem> two_labels() {
  Rng rng(4);
  MatrixXd x(40, 3);
  std::vector<Problem> out(2);
  for (int i = 0; i < 40; ++i) {
    const bool a = i % 2 == 0, b = i % 4 < 2;
    x(i, 0) = rng.normal() + (a ? 2.0 : -2.0);
    x(i, 1) = rng.normal() + (b ? 2.0 : -2.0);
    x(i, 2) = rng.normal();
    (a ? out[0].set.positives : out[0].set.negatives).push_back(static_cast<std::size_t>(i));
    (b ? out[1].set.positives : out[1].set.negatives).push_back(static_cast<std::size_t>(i));
  }
  out[1].set.label_index = 1;
  for (auto& p : out) p.x = x;
  return out;
}

std::vector<ClassifierSpec> specs(std::initializer_list<Kind> kinds) {
  std::vector<ClassifierSpec> s;
  for (auto k : kinds) s.push_back(make_spec(k, {nlohmann::json::object()}));
  return s;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("spec parsing") {
  const auto s = specs_from_json(nlohmann::json::parse(
      R"([{"kind": "k-nearest-neighbors", "grid": [{"k": 1}, {"k": 3}]}, {"kind": "naive-bayes"}])"));
  REQUIRE(s.size() == 2);
  CHECK(s[0].grid.size() == 2);
  CHECK(s[0].grid[1].at("k") == 3);
  CHECK(s[1].grid == classifiers::default_grid(Kind::NaiveBayes));
  CHECK(specs_from_json(to_json(s)).size() == 2);
  CHECK_THROWS_AS(specs_from_json(nlohmann::json::parse(R"([{"grid": []}])")), ConfigError);
  CHECK_THROWS(make_spec(Kind::NaiveBayes, {}));
  CHECK(default_specs(classifiers::core_kinds()).size() == 8);
}

TEST_CASE("a single candidate is the champion") {
  const auto p = two_labels();
  const auto r = grid_search_label(p[0].set, p[0].x, specs({Kind::LinearSvm}), 5, 1);
  CHECK(r.champion.kind == Kind::LinearSvm);
  REQUIRE(r.table.size() == 1);
  CHECK(r.table[0].fold_precision.size() == 5);
  CHECK(r.champion.cv_precision == r.table[0].precision);
  CHECK(r.champion.cv_precision > 0.9);
}

TEST_CASE("appending candidates never lowers the champion") {
  const auto p = two_labels();
  const auto small = grid_search_label(p[1].set, p[1].x, specs({Kind::NaiveBayes}), 4, 2);
  const auto large = grid_search_label(
      p[1].set, p[1].x, specs({Kind::NaiveBayes, Kind::KNearestNeighbors, Kind::DecisionTree}), 4, 2);
  CHECK(large.champion.cv_precision >= small.champion.cv_precision);
  CHECK(large.table[0].fold_precision == small.table[0].fold_precision);
  // The champion is the first maximum in table order.
  double best = -1.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < large.table.size(); ++i)
    if (large.table[i].precision > best) best = large.table[i].precision, at = i;
  CHECK(large.champion.kind == large.table[at].kind);
}

TEST_CASE("worker count does not change the search") {
  const auto p = two_labels();
  const auto s = specs({Kind::NaiveBayes, Kind::KNearestNeighbors, Kind::RandomForest});
  const auto a = grid_search_label(p[0].set, p[0].x, s, 5, 3, 1);
  const auto b = grid_search_label(p[0].set, p[0].x, s, 5, 3, 4);
  REQUIRE(a.table.size() == b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i)
    CHECK(a.table[i].fold_precision == b.table[i].fold_precision);
}

TEST_CASE("decide_labels falls back to the argmax") {
  const std::vector<double> none{-0.3, -0.1, -0.1};
  CHECK(decide_labels(none, 0.0) == data::LabelSet{1});
  const std::vector<double> some{0.2, -0.1, 0.4};
  CHECK(decide_labels(some, 0.0) == data::LabelSet{0, 2});
  CHECK(decide_labels(some, 0.3) == data::LabelSet{2});
}

TEST_CASE("trained ensemble predicts and reports") {
  const auto p = two_labels();
  const std::vector<balance::BalancedBinaryDataset> sets{p[0].set, p[1].set};
  const auto s = specs({Kind::NaiveBayes, Kind::LinearSvm});
  const auto t = train_ensemble(sets, p[0].x, s, 5, 8);
  REQUIRE(t.champions.size() == 2);
  CHECK(t.table.size() == 4);

  EnsembleModel m;
  m.schema_id = "test";
  m.input_dimension = 4;
  m.feature_indices = {0, 1, 2};  // the fourth input column is ignored
  m.vocabulary = data::LabelVocabulary({"Nucleus", "Cytoplasm"});
  m.champions = t.champions;
  m.validate();
  CHECK(m.macro_ap() == doctest::Approx((t.champions[0].cv_precision + t.champions[1].cv_precision) / 2));

  MatrixXd full(40, 4);
  full.leftCols(3) = p[0].x;
  full.col(3).setConstant(99.0);
  const auto centred = m.score_matrix(full);
  int exact = 0;
  for (Eigen::Index i = 0; i < 40; ++i) {
    const auto& ch = t.champions[0];
    CHECK(centred(i, 0) == doctest::Approx(ch.model->score(p[0].x.row(i).transpose()) -
                                           ch.model->threshold()));
    data::LabelSet truth;
    if (i % 2 == 0) truth.push_back(0);
    if (i % 4 < 2) truth.push_back(1);
    if (truth.empty()) continue;
    exact += m.predict(full.row(i).transpose()).labels == truth;
  }
  CHECK(exact >= 25);

  const auto csv = candidate_table_csv(t.table, &m.vocabulary);
  CHECK(csv.rfind("label,kind,params,fold_precisions,precision,ppv,status\nNucleus,naive-bayes,", 0) == 0);

  const auto back = champion_from_json(nlohmann::json::parse(champion_to_json(t.champions[1]).dump()));
  CHECK(back.kind == t.champions[1].kind);
  CHECK(back.cv_precision == t.champions[1].cv_precision);
  CHECK(back.model->scores(p[0].x) == t.champions[1].model->scores(p[0].x));

  m.feature_indices = {0, 1, 7};
  CHECK_THROWS_AS(m.validate(), DomainError);
}

}  // TEST_SUITE
