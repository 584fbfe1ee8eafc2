#include "locpred/synthetic.hpp"

#include "locpred/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace locpred::synthetic {

std::vector<std::string> location_names(std::size_t labels) {
  static const char* const kNames[] = {"cytoplasm", "nucleus", "cell membrane", "secreted",
                                       "mitochondrion", "endoplasmic reticulum"};
  std::vector<std::string> out;
  for (std::size_t j = 0; j < labels; ++j)
    out.push_back(j < std::size(kNames) ? kNames[j] : "location " + std::to_string(j + 1));
  return out;
}

std::vector<data::SequenceRecord> generate(const SyntheticOptions& o) {
  if (o.labels < 1 || o.labels > data::kAminoAcids.size())
    throw DomainError("synthetic label count must lie in [1, 20]");
  if (o.min_length < 1 || o.max_length < o.min_length)
    throw DomainError("synthetic length range is empty");
  if (!(o.signal >= 0.0 && o.signal <= 1.0) ||
      !(o.multi_label_fraction >= 0.0 && o.multi_label_fraction <= 1.0))
    throw DomainError("synthetic fractions must lie in [0, 1]");

  const auto names = location_names(o.labels);
  const std::size_t block = data::kAminoAcids.size() / o.labels;
  Rng rng(derive_seed(o.seed, "synthetic"));
  std::vector<data::SequenceRecord> out;
  out.reserve(o.samples);
  for (std::size_t i = 0; i < o.samples; ++i) {
    std::vector<std::size_t> labels{rng.index(o.labels)};
    if (o.labels > 1 && rng.uniform() < o.multi_label_fraction) {
      std::size_t other = rng.index(o.labels - 1);
      if (other >= labels[0]) ++other;
      labels.push_back(other);
      std::sort(labels.begin(), labels.end());
    }
    const std::size_t length = o.min_length + rng.index(o.max_length - o.min_length + 1);
    data::SequenceRecord r;
    char id[16];
    std::snprintf(id, sizeof id, "SYN%05zu", i + 1);
    r.accession = id;
    r.residues.reserve(length);
    for (std::size_t p = 0; p < length; ++p) {
      std::size_t a;
      if (rng.uniform() < o.signal) {
        const std::size_t l = labels[rng.index(labels.size())];
        a = l * block + rng.index(block);
      } else {
        a = rng.index(data::kAminoAcids.size());
      }
      r.residues.push_back(data::kAminoAcids[a]);
    }
    for (auto l : labels) r.locations.push_back(names[l]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_fixture(const std::string& dir, const std::string& stem,
                   const std::vector<data::SequenceRecord>& records) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir) / stem;
  data::write_fasta_file(base.string() + ".fasta", records);
  std::ofstream tsv(base.string() + ".tsv", std::ios::binary);
  if (!tsv) throw Error("cannot write " + base.string() + ".tsv");
  tsv << data::serialize_label_tsv(records);
  if (!tsv) throw Error("cannot write " + base.string() + ".tsv");
}

nlohmann::json pipeline_config(const std::string& stem, std::size_t labels, std::uint64_t seed) {
  using nlohmann::json;
  return {
      {"seed", seed},
      {"data", {{"fasta", stem + ".fasta"}, {"labels", stem + ".tsv"}}},
      {"top_n", labels},
      {"redundancy_threshold", 0.7},
      {"holdout_fraction", 0.2},
      {"balance", {{"C_grid", {1.0, 10.0}}, {"gamma_grid", {0.0, 0.01}}, {"folds", 5}}},
      {"select",
       {{"w_r", 1.0},
        {"w_d", 1.0},
        {"distance", "euclidean"},
        {"coarse_step", 10},
        {"folds", 5},
        {"classifiers", json::array({{{"kind", "naive-bayes"}}})}}},
      {"ensemble",
       {{"folds", 10},
        {"threshold", 0.0},
        {"classifiers",
         json::array({
             {{"kind", "naive-bayes"}},
             {{"kind", "logistic-regression"}, {"grid", json::array({{{"C", 1.0}}})}},
             {{"kind", "k-nearest-neighbors"}, {"grid", json::array({{{"k", 5}}, {{"k", 9}}})}},
             {{"kind", "decision-tree"}, {"grid", json::array({{{"max_depth", 5}}})}},
             {{"kind", "random-forest"}, {"grid", json::array({{{"n_trees", 50}}})}},
             {{"kind", "adaptive-boosting"}, {"grid", json::array({{{"n_estimators", 50}}})}},
             {{"kind", "linear-svm"}, {"grid", json::array({{{"C", 1.0}}})}},
             {{"kind", "rbf-svm"}, {"grid", json::array({{{"C", 1.0}}, {{"C", 10.0}}})}},
         })}}},
      {"workers", 1}};
}

}  // namespace locpred::synthetic
