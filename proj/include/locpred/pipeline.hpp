#ifndef LOCPRED_PIPELINE_HPP
#define LOCPRED_PIPELINE_HPP

#include "locpred/balance.hpp"
#include "locpred/ensemble.hpp"
#include "locpred/eval.hpp"
#include "locpred/features.hpp"
#include "locpred/select.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace locpred::pipeline {

struct DataSource {
  // Either a FASTA file with a label TSV ...
  std::string fasta;
  std::string labels;
  // ... or a UniProt query served from the cache.
  std::string uniprot_query;
  std::size_t page_limit = 1;
  std::string cache_dir;
  bool allow_network = false;
};

/// Every knob of a run. Paths are resolved against the config file's
/// directory. The seed is mandatory.
struct PipelineConfig {
  nlohmann::json raw;
  std::uint64_t seed = 0;
  DataSource data;
  std::size_t top_n = 10;
  double redundancy_threshold = 0.7;
  double holdout_fraction = 0.2;
  features::FeatureSchema schema;
  balance::BalanceOptions balance;
  double w_r = 1.0;
  double w_d = 1.0;
  select::Distance distance = select::Distance::Euclidean;
  std::size_t coarse_step = 10;
  std::vector<ensemble::ClassifierSpec> search_specs;
  std::size_t search_folds = 5;
  std::vector<ensemble::ClassifierSpec> specs;
  std::size_t folds = 10;
  double threshold = 0.0;
  std::size_t workers = 1;
};

/// Throws ConfigError for a missing seed, unknown keys, illegal values or
/// input files that do not exist.
PipelineConfig parse_config(const nlohmann::json& j, const std::string& base_dir);
PipelineConfig load_config(const std::string& path,
                           std::optional<std::uint64_t> seed_override = std::nullopt);

// Stages communicate through files in a work directory:
//   fetch    -> raw.fasta, raw.tsv
//   extract  -> dataset.json, dataset.fasta, features.csv (+ .schema.json)
//   balance  -> balance.json
//   select   -> ranking.json
//   search   -> search.json, search_trace.csv
//   train    -> model/ (bundle), candidates.csv
//   evaluate -> report.json
// Sample indices in balance.json refer to the training rows of dataset.json
// in order.
void stage_fetch(const PipelineConfig& config, const std::string& work);
void stage_extract(const PipelineConfig& config, const std::string& work);
void stage_balance(const PipelineConfig& config, const std::string& work);
void stage_select(const PipelineConfig& config, const std::string& work);
void stage_search(const PipelineConfig& config, const std::string& work);
void stage_train(const PipelineConfig& config, const std::string& work);
void stage_evaluate(const PipelineConfig& config, const std::string& work);

/// Stage names in execution order.
const std::vector<std::string>& stage_names();
/// Runs one stage by name. Failures are rethrown naming the stage; ConfigError
/// keeps its type so the CLI still exits with 2.
void run_stage(const std::string& name, const PipelineConfig& config, const std::string& work);

/// Runs every stage in `<out>.tmp` and renames it to `out` on success. On
/// failure the staging directory is removed. An existing `out` is replaced
/// only when it holds a previous run.
eval::MetricReport run_pipeline(const PipelineConfig& config, const std::string& out);

/// Holdout assignment: samples are grouped by label set, each group is
/// shuffled and round(fraction * size) of it is held out.
std::vector<bool> holdout_split(const std::vector<data::LabelSet>& labelsets, double fraction,
                                std::uint64_t seed);

}  // namespace locpred::pipeline

#endif  // LOCPRED_PIPELINE_HPP
