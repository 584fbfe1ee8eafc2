// Shared scratch directories and a small trained bundle.
#ifndef LOCPRED_TESTS_FIXTURES_HPP
#define LOCPRED_TESTS_FIXTURES_HPP

#include "locpred/bundle.hpp"
#include "locpred/pipeline.hpp"
#include "locpred/rng.hpp"
#include "locpred/synthetic.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fixtures {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir.
inline fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("locpred-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string random_sequence(locpred::Rng& rng, std::size_t length) {
  std::string s(length, 'A');
  for (auto& c : s) c = locpred::data::kAminoAcids[rng.index(20)];
  return s;
}

/// A quick configuration over a synthetic fixture written into `dir`.
inline nlohmann::json tiny_config(const fs::path& dir, std::uint64_t seed = 3) {
  locpred::synthetic::SyntheticOptions gen;
  gen.samples = 120;
  gen.labels = 3;
  gen.seed = seed;
  locpred::synthetic::write_fixture(dir.string(), "tiny", locpred::synthetic::generate(gen));
  auto j = locpred::synthetic::pipeline_config("tiny", gen.labels, seed);
  j["balance"]["folds"] = 3;
  j["select"]["coarse_step"] = 50;
  j["select"]["folds"] = 3;
  j["ensemble"]["folds"] = 3;
  j["ensemble"]["classifiers"] = nlohmann::json::array(
      {{{"kind", "naive-bayes"}},
       {{"kind", "k-nearest-neighbors"}, {"grid", nlohmann::json::array({{{"k", 3}}})}}});
  return j;
}

/// Output directory of one tiny pipeline run, trained once per process.
inline const fs::path& tiny_run() {
  static const fs::path out = [] {
    const auto dir = scratch("tiny-run");
    const auto config = locpred::pipeline::parse_config(tiny_config(dir), dir.string());
    locpred::pipeline::run_pipeline(config, (dir / "out").string());
    return dir / "out";
  }();
  return out;
}

inline const locpred::bundle::ModelBundle& tiny_bundle() {
  static const auto b = locpred::bundle::load_bundle((tiny_run() / "model").string());
  return b;
}

}  // namespace fixtures

#endif  // LOCPRED_TESTS_FIXTURES_HPP
