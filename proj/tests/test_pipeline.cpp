#include "locpred/bundle.hpp"
#include "locpred/pipeline.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <map>

using namespace locpred;
namespace fs = std::filesystem;

namespace {

bool same_files(const fs::path& a, const fs::path& b) {
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++count;
    if (fixtures::slurp(e.path()) != fixtures::slurp(b / e.path().filename())) return false;
  }
  return count > 0;
}

std::string error_of(const nlohmann::json& j, const fs::path& dir) {
  try {
    pipeline::parse_config(j, dir.string());
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config validation") {
  const auto dir = fixtures::scratch("config");
  auto j = fixtures::tiny_config(dir);
  const auto c = pipeline::parse_config(j, dir.string());
  CHECK(c.seed == 3);
  CHECK(c.top_n == 3);
  CHECK(c.folds == 3);
  CHECK(c.specs.size() == 2);
  CHECK(fs::path(c.data.fasta).is_absolute());

  auto missing_seed = j;
  missing_seed.erase("seed");
  CHECK(error_of(missing_seed, dir).find("seed") != std::string::npos);
  auto negative = j;
  negative["seed"] = -4;
  CHECK(!error_of(negative, dir).empty());
  auto typo = j;
  typo["ensemble"]["fold"] = 3;
  CHECK(error_of(typo, dir).find("\"fold\"") != std::string::npos);
  auto absent = j;
  absent["data"]["fasta"] = "nope.fasta";
  CHECK(error_of(absent, dir).find("nope.fasta") != std::string::npos);
  auto bad_kind = j;
  bad_kind["ensemble"]["classifiers"] = nlohmann::json::array({{{"kind", "perceptron"}}});
  CHECK(!error_of(bad_kind, dir).empty());
  auto bad_fraction = j;
  bad_fraction["holdout_fraction"] = 1.0;
  CHECK(!error_of(bad_fraction, dir).empty());

  fixtures::spit(dir / "config.json", j.dump());
  CHECK(pipeline::load_config((dir / "config.json").string(), 99).seed == 99);
  CHECK_THROWS_AS(pipeline::load_config((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("holdout split by label set") {
  std::vector<data::LabelSet> ls;
  for (int i = 0; i < 30; ++i) ls.push_back({0});
  for (int i = 0; i < 11; ++i) ls.push_back({0, 1});
  for (int i = 0; i < 3; ++i) ls.push_back({1});
  const auto h = pipeline::holdout_split(ls, 0.2, 5);
  std::map<data::LabelSet, std::size_t> held;
  for (std::size_t i = 0; i < ls.size(); ++i) held[ls[i]] += h[i];
  CHECK(held[data::LabelSet{0}] == 6);
  CHECK(held[data::LabelSet{0, 1}] == 2);
  CHECK(held[data::LabelSet{1}] == 1);
  CHECK(pipeline::holdout_split(ls, 0.2, 5) == h);
  CHECK(pipeline::holdout_split(ls, 0.2, 6) != h);
  const auto none = pipeline::holdout_split(ls, 0.0, 5);
  CHECK(std::count(none.begin(), none.end(), true) == 0);
}

TEST_CASE("full run writes every artifact") {
  const auto& out = fixtures::tiny_run();
  for (const char* f : {"raw.fasta", "raw.tsv", "dataset.json", "dataset.fasta", "features.csv",
                        "features.csv.schema.json", "balance.json", "ranking.json", "search.json",
                        "search_trace.csv", "candidates.csv", "report.json", "model/manifest.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  CHECK_FALSE(fs::exists(out.string() + ".tmp"));
  const auto report = nlohmann::json::parse(fixtures::slurp(out / "report.json"));
  CHECK(report.at("evaluated_on") == "holdout");
  CHECK(report.at("per_label_precision").size() == 3);
  const auto search = nlohmann::json::parse(fixtures::slurp(out / "search.json"));
  CHECK(fixtures::tiny_bundle().model.feature_indices.size() == search.at("best_k"));
}

TEST_CASE("stages run one at a time reproduce the full run") {
  const auto dir = fixtures::scratch("stages");
  const auto config = pipeline::parse_config(fixtures::tiny_config(dir), dir.string());
  const auto work = dir / "work";
  fs::create_directories(work);
  for (const auto& name : pipeline::stage_names()) pipeline::run_stage(name, config, work.string());
  const auto& full = fixtures::tiny_run();
  CHECK(same_files(full / "model", work / "model"));
  CHECK(same_files(full, work));
}

TEST_CASE("stage failures are named and leave no staging directory") {
  const auto dir = fixtures::scratch("failing");
  auto j = fixtures::tiny_config(dir);
  j["top_n"] = 50;  // more labels than the fixture holds
  const auto config = pipeline::parse_config(j, dir.string());
  try {
    pipeline::run_pipeline(config, (dir / "out").string());
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("extract") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir / "out.tmp"));
  CHECK_FALSE(fs::exists(dir / "out"));
  // A later stage cannot run before its inputs exist.
  const auto fresh = dir / "fresh";
  fs::create_directories(fresh);
  CHECK_THROWS_AS(pipeline::run_stage("train", config, fresh.string()), Error);
  CHECK_THROWS_AS(pipeline::run_stage("polish", config, fresh.string()), ConfigError);
  // An unrelated directory is never replaced.
  fs::create_directories(dir / "precious");
  fixtures::spit(dir / "precious" / "keep.txt", "x");
  CHECK_THROWS_AS(pipeline::run_pipeline(pipeline::parse_config(fixtures::tiny_config(dir), dir.string()),
                                         (dir / "precious").string()),
                  ConfigError);
  CHECK(fs::exists(dir / "precious" / "keep.txt"));
}

TEST_CASE("bundle integrity") {
  const auto dir = fixtures::scratch("bundle");
  const auto copy = dir / "model";
  fs::copy(fixtures::tiny_run() / "model", copy);
  const auto b = bundle::load_bundle(copy.string());
  CHECK(b.model.champions.size() == 3);
  CHECK(b.model.schema_id == b.schema.schema_id());
  CHECK(b.summary.contains("macro_ap"));

  // Writing a loaded bundle reproduces the same bytes.
  const auto rewritten = dir / "rewritten";
  bundle::write_bundle(rewritten.string(), b);
  CHECK(same_files(copy, rewritten));

  auto text = fixtures::slurp(copy / "champion-02.json");
  text.insert(text.size() - 2, " ");
  fixtures::spit(copy / "champion-02.json", text);
  CHECK_THROWS_AS(bundle::load_bundle(copy.string()), ParseError);

  auto manifest = nlohmann::json::parse(fixtures::slurp(rewritten / "manifest.json"));
  manifest["format_version"] = 99;
  fixtures::spit(rewritten / "manifest.json", manifest.dump());
  CHECK_THROWS_AS(bundle::load_bundle(rewritten.string()), ParseError);
  CHECK_THROWS_AS(bundle::load_bundle((dir / "absent").string()), Error);
  CHECK(bundle::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("record predictions") {
  const auto& b = fixtures::tiny_bundle();
  const auto records = data::read_fasta_file((fixtures::tiny_run() / "dataset.fasta").string());
  std::vector<data::SequenceRecord> some(records.begin(), records.begin() + 3);
  some.push_back({"tiny", "MKV", {}});
  const auto preds = bundle::predict_records(b, some);
  REQUIRE(preds.size() == 4);
  for (int i = 0; i < 3; ++i) {
    CHECK(preds[i].error.empty());
    CHECK_FALSE(preds[i].labels.empty());
    CHECK(preds[i].scores.size() == 3);
  }
  CHECK_FALSE(preds[3].error.empty());
  const auto j = bundle::to_json(preds);
  CHECK(j[3].contains("error"));
  CHECK_FALSE(j[3].contains("labels"));
}

TEST_CASE("shipped configurations") {
  const fs::path root = LOCPRED_SOURCE_DIR;
  const auto full = pipeline::load_config((root / "config" / "uniprot-human.json").string());
  CHECK(full.top_n == 10);
  CHECK(full.specs.size() == 8);
  CHECK(full.data.allow_network);

  // The remaining four kinds run through the whole pipeline.
  const auto extended = pipeline::load_config((root / "config" / "extended-classifiers.json").string());
  const auto dir = fixtures::scratch("extended");
  const auto report = pipeline::run_pipeline(extended, (dir / "out").string());
  CHECK(report.per_label_precision.size() == 2);
  const auto b = bundle::load_bundle((dir / "out" / "model").string());
  for (const auto& ch : b.model.champions)
    CHECK((ch.kind == classifiers::Kind::ExtraTrees || ch.kind == classifiers::Kind::Bagging ||
           ch.kind == classifiers::Kind::GradientBoosting || ch.kind == classifiers::Kind::SgdLinear));
  const auto j = nlohmann::json::parse(fixtures::slurp(dir / "out" / "report.json"));
  CHECK(j.at("evaluated_on") == "training");
}

}  // TEST_SUITE
