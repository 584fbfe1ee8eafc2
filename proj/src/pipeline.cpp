#include "locpred/pipeline.hpp"

#include "locpred/bundle.hpp"
#include "locpred/dataset.hpp"
#include "locpred/parallel.hpp"
#include "locpred/rng.hpp"
#include "locpred/stats.hpp"
#include "locpred/uniprot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace locpred::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

namespace {

// Reads one JSON object while tracking which keys were consumed, so that
// misspelled keys are reported instead of silently ignored.
class Section {
 public:
  Section(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const nlohmann::json& at(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + ": missing \"" + key + "\"");
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where_ + ": \"" + key + "\" has the wrong type");
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key \"" + key + "\"");
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? p.string() : (fs::path(base) / p).lexically_normal().string();
}

std::vector<ensemble::ClassifierSpec> specs_or(const nlohmann::json* j,
                                               std::vector<ensemble::ClassifierSpec> fallback,
                                               const std::string& where) {
  if (!j) return fallback;
  try {
    return ensemble::specs_from_json(*j);
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

PipelineConfig parse_config(const nlohmann::json& j, const std::string& base_dir) {
  PipelineConfig c;
  c.raw = j;
  Section root(j, "config");
  if (!root.has("seed")) throw ConfigError("config: \"seed\" is mandatory");
  if (!root.at("seed").is_number_unsigned())
    throw ConfigError("config: \"seed\" must be a non-negative integer");
  c.seed = root.at("seed").get<std::uint64_t>();

  {
    Section data(root.at("data"), "data");
    if (data.has("uniprot")) {
      Section u(data.at("uniprot"), "data.uniprot");
      c.data.uniprot_query = u.get<std::string>("query", "");
      c.data.page_limit = u.get<std::size_t>("pages", 1);
      c.data.cache_dir = resolve(base_dir, u.get<std::string>("cache", ""));
      c.data.allow_network = u.get<bool>("allow_network", false);
      u.finish();
      if (c.data.uniprot_query.empty()) throw ConfigError("data.uniprot: empty query");
      if (c.data.page_limit == 0) throw ConfigError("data.uniprot: pages must be positive");
    } else {
      c.data.fasta = resolve(base_dir, data.get<std::string>("fasta", ""));
      c.data.labels = resolve(base_dir, data.get<std::string>("labels", ""));
      if (c.data.fasta.empty() || c.data.labels.empty())
        throw ConfigError("data: need \"fasta\" and \"labels\", or \"uniprot\"");
      for (const auto* p : {&c.data.fasta, &c.data.labels})
        if (!fs::is_regular_file(*p)) throw ConfigError("data: file not found: " + *p);
    }
    data.get<std::string>("snapshot_date", "");
    data.finish();
  }

  c.top_n = root.get<std::size_t>("top_n", c.top_n);
  if (c.top_n == 0) throw ConfigError("top_n must be at least 1");
  c.redundancy_threshold = root.get<double>("redundancy_threshold", c.redundancy_threshold);
  if (!(c.redundancy_threshold > 0.0 && c.redundancy_threshold <= 1.0))
    throw ConfigError("redundancy_threshold must lie in (0, 1]");
  c.holdout_fraction = root.get<double>("holdout_fraction", c.holdout_fraction);
  if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction <= 0.9))
    throw ConfigError("holdout_fraction must lie in [0, 0.9]");
  c.workers = root.get<std::size_t>("workers", c.workers);
  if (c.workers == 0) c.workers = default_workers();

  if (root.has("features")) {
    try {
      c.schema = features::schema_from_json(root.at("features"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("features: " + std::string(e.what()));
    } catch (const DomainError& e) {
      throw ConfigError("features: " + std::string(e.what()));
    }
  }

  if (root.has("balance")) {
    Section b(root.at("balance"), "balance");
    auto& g = c.balance.grid;
    g.C_grid = b.get<std::vector<double>>("C_grid", g.C_grid);
    g.gamma_grid = b.get<std::vector<double>>("gamma_grid", g.gamma_grid);
    g.folds = b.get<std::size_t>("folds", g.folds);
    g.tol = b.get<double>("tol", g.tol);
    b.finish();
    if (g.C_grid.empty() || g.gamma_grid.empty()) throw ConfigError("balance: empty grid");
    for (double v : g.C_grid)
      if (!(v > 0.0)) throw ConfigError("balance: C values must be positive");
    if (g.folds < 2) throw ConfigError("balance: folds must be at least 2");
    if (!(g.tol > 0.0)) throw ConfigError("balance: tol must be positive");
  }
  c.balance.grid.workers = 1;

  c.search_specs = ensemble::default_specs({classifiers::Kind::NaiveBayes});
  if (root.has("select")) {
    Section s(root.at("select"), "select");
    c.w_r = s.get<double>("w_r", c.w_r);
    c.w_d = s.get<double>("w_d", c.w_d);
    try {
      c.distance = select::parse_distance(s.get<std::string>("distance", "euclidean"));
    } catch (const DomainError& e) {
      throw ConfigError(std::string("select: ") + e.what());
    }
    c.coarse_step = s.get<std::size_t>("coarse_step", c.coarse_step);
    c.search_folds = s.get<std::size_t>("folds", c.search_folds);
    c.search_specs = specs_or(s.has("classifiers") ? &s.at("classifiers") : nullptr,
                              c.search_specs, "select.classifiers");
    s.finish();
    if (!(c.w_r > 0.0 && c.w_r <= 1.0) || !(c.w_d > 0.0 && c.w_d <= 1.0))
      throw ConfigError("select: weights must lie in (0, 1]");
    if (c.coarse_step == 0) throw ConfigError("select: coarse_step must be at least 1");
    if (c.search_folds < 2) throw ConfigError("select: folds must be at least 2");
  }

  c.specs = ensemble::default_specs(classifiers::core_kinds());
  if (root.has("ensemble")) {
    Section e(root.at("ensemble"), "ensemble");
    c.specs = specs_or(e.has("classifiers") ? &e.at("classifiers") : nullptr, c.specs,
                       "ensemble.classifiers");
    c.folds = e.get<std::size_t>("folds", c.folds);
    c.threshold = e.get<double>("threshold", c.threshold);
    e.finish();
    if (c.folds < 2) throw ConfigError("ensemble: folds must be at least 2");
    if (!std::isfinite(c.threshold)) throw ConfigError("ensemble: threshold must be finite");
  }
  root.finish();
  return c;
}

PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  if (seed_override && j.is_object()) j["seed"] = *seed_override;
  const auto base = fs::absolute(path).parent_path().string();
  return parse_config(j, base);
}

// ---------------------------------------------------------------------------
// Shared file helpers

namespace {

fs::path at(const std::string& work, const char* name) { return fs::path(work) / name; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("missing stage input " + p.string() + "; run the earlier stages first");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + p.string());
}

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_text(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed " + p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  write_text(p, bundle::canonical_dump(j));
}

struct StoredData {
  data::MultiLabelDataset dataset;  // records carry accessions only
  std::vector<bool> holdout;
  features::FeatureMatrix features;

  IndexList rows(bool held_out) const {
    IndexList out;
    for (std::size_t i = 0; i < holdout.size(); ++i)
      if (holdout[i] == held_out) out.push_back(i);
    return out;
  }
  MatrixXd train_matrix() const { return take_rows(features.rows, rows(false)); }
  data::MultiLabelDataset train_dataset() const { return dataset.subset(rows(false)); }
};

StoredData load_data(const PipelineConfig& config, const std::string& work) {
  StoredData s;
  const auto j = read_json(at(work, "dataset.json"));
  const auto manifest = data::manifest_from_json(j.at("manifest"));
  s.dataset.vocabulary = manifest.vocabulary;
  for (const auto& e : j.at("samples")) {
    data::SequenceRecord r;
    r.accession = e.at("accession").get<std::string>();
    s.dataset.records.push_back(std::move(r));
    s.dataset.labelsets.push_back(e.at("labels").get<data::LabelSet>());
    s.holdout.push_back(e.at("holdout").get<bool>());
  }
  s.dataset.validate();
  s.features = features::read_matrix_csv(at(work, "features.csv").string());
  if (static_cast<std::size_t>(s.features.rows.rows()) != s.dataset.size())
    throw Error("features.csv and dataset.json disagree on the sample count");
  if (s.features.schema_id != config.schema.schema_id())
    throw Error("features.csv was extracted with schema " + s.features.schema_id +
                ", the config asks for " + config.schema.schema_id());
  return s;
}

std::vector<balance::BalancedBinaryDataset> load_balanced(const std::string& work) {
  return balance::balanced_from_json(read_json(at(work, "balance.json")));
}

select::FeatureRanking load_ranking(const std::string& work) {
  const auto j = read_json(at(work, "ranking.json"));
  select::FeatureRanking r;
  r.order = j.at("order").get<std::vector<std::size_t>>();
  r.w_r = j.at("w_r").get<double>();
  r.w_d = j.at("w_d").get<double>();
  auto vec = [&](const char* key) {
    const auto v = j.at(key).get<std::vector<double>>();
    return VectorXd(Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  r.relevance = vec("relevance");
  r.distance = vec("distance_scores");
  r.combined = vec("combined");
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages

std::vector<bool> holdout_split(const std::vector<data::LabelSet>& labelsets, double fraction,
                                std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw DomainError("holdout fraction must lie in [0, 1)");
  std::map<data::LabelSet, IndexList> groups;
  for (std::size_t i = 0; i < labelsets.size(); ++i) groups[labelsets[i]].push_back(i);
  std::vector<bool> held(labelsets.size(), false);
  Rng rng(seed);
  for (auto& [key, members] : groups) {
    rng.shuffle(members);
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < take && k < members.size(); ++k) held[members[k]] = true;
  }
  return held;
}

void stage_fetch(const PipelineConfig& c, const std::string& work) {
  fs::create_directories(work);
  if (!c.data.uniprot_query.empty()) {
    data::FetchOptions opts;
    opts.cache_dir = c.data.cache_dir;
    opts.allow_network = c.data.allow_network;
    Diagnostics diag;
    const auto records = data::fetch_uniprot(c.data.uniprot_query, c.data.page_limit, opts, &diag);
    data::write_fasta_file(at(work, "raw.fasta").string(), records);
    write_text(at(work, "raw.tsv"), data::serialize_label_tsv(records));
    return;
  }
  write_text(at(work, "raw.fasta"), read_text(c.data.fasta));
  write_text(at(work, "raw.tsv"), read_text(c.data.labels));
}

void stage_extract(const PipelineConfig& c, const std::string& work) {
  Diagnostics diag;
  auto records = data::read_fasta_file(at(work, "raw.fasta").string(), &diag);
  data::attach_locations(records, data::parse_label_tsv(read_text(at(work, "raw.tsv"))));
  auto ds = data::derive_labels(records, c.top_n);
  ds = data::redundancy_filter(ds, c.redundancy_threshold);

  std::vector<features::ExtractionFailure> failures;
  IndexList kept;
  auto matrix = features::extract_matrix(ds.records, c.schema, c.workers, &failures, &kept);
  for (const auto& f : failures)
    diag.warn("dropping " + f.accession + ": " + f.reason);
  ds = ds.subset(kept);
  ds.validate();
  if (ds.size() == 0) throw Error("no samples survive ingestion");

  const auto held = holdout_split(ds.labelsets, c.holdout_fraction, derive_seed(c.seed, "holdout"));
  const auto snapshot = c.raw.at("data").value("snapshot_date", std::string());
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    samples.push_back({{"accession", ds.records[i].accession},
                       {"labels", ds.labelsets[i]},
                       {"holdout", static_cast<bool>(held[i])}});
  }
  nlohmann::json dropped = nlohmann::json::array();
  for (const auto& f : failures) dropped.push_back({{"accession", f.accession}, {"reason", f.reason}});
  write_json(at(work, "dataset.json"),
             {{"manifest", data::to_json(data::make_manifest(ds, c.redundancy_threshold, snapshot))},
              {"samples", samples},
              {"dropped", dropped}});
  data::write_fasta_file(at(work, "dataset.fasta").string(), ds.records);
  features::write_matrix_csv(at(work, "features.csv").string(), matrix, &c.schema);
}

void stage_balance(const PipelineConfig& c, const std::string& work) {
  const auto stored = load_data(c, work);
  const auto binaries = data::binary_relevance(stored.train_dataset());
  const auto sets = balance::balance_all(binaries, stored.train_matrix(), c.balance,
                                         derive_seed(c.seed, "balance"), c.workers);
  write_json(at(work, "balance.json"), balance::to_json(sets));
}

void stage_select(const PipelineConfig& c, const std::string& work) {
  const auto stored = load_data(c, work);
  const auto sets = load_balanced(work);
  const auto pooled = select::pooled_ranking_data(sets, stored.train_matrix());
  const auto r = select::mrmd_rank(pooled.x, pooled.y, c.w_r, c.w_d, c.distance);
  auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  write_json(at(work, "ranking.json"), {{"w_r", r.w_r},
                                         {"w_d", r.w_d},
                                         {"distance", select::distance_name(c.distance)},
                                         {"order", r.order},
                                         {"relevance", vec(r.relevance)},
                                         {"distance_scores", vec(r.distance)},
                                         {"combined", vec(r.combined)}});
}

void stage_search(const PipelineConfig& c, const std::string& work) {
  const auto stored = load_data(c, work);
  const auto sets = load_balanced(work);
  const auto ranking = load_ranking(work);
  const MatrixXd x = stored.train_matrix();
  const std::uint64_t seed = derive_seed(c.seed, "search");

  auto evaluator = [&](std::size_t k) {
    const MatrixXd xk = take_cols(x, select::select_top_k(ranking, k));
    std::vector<double> precision;
    for (const auto& s : sets) {
      const auto search = ensemble::grid_search_label(s, xk, c.search_specs, c.search_folds,
                                                      derive_seed(seed, s.label_index), 1);
      precision.push_back(search.champion.cv_precision);
    }
    return eval::macro_ap(precision);
  };
  select::SearchOptions opts;
  opts.dimensions = ranking.size();
  opts.coarse_step = c.coarse_step;
  opts.workers = c.workers;
  const auto result = select::two_layer_search(evaluator, opts);

  auto trace = [](const std::vector<select::TracePoint>& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : t) arr.push_back({{"k", p.k}, {"ap", p.score}});
    return arr;
  };
  write_json(at(work, "search.json"), {{"best_k", result.best_k},
                                        {"best_score", result.best_score},
                                        {"coarse_step", c.coarse_step},
                                        {"coarse", trace(result.coarse_trace)},
                                        {"fine", trace(result.fine_trace)}});
  write_text(at(work, "search_trace.csv"), select::trace_csv(result));
}

void stage_train(const PipelineConfig& c, const std::string& work) {
  const auto stored = load_data(c, work);
  const auto sets = load_balanced(work);
  const auto ranking = load_ranking(work);
  const auto search = read_json(at(work, "search.json"));
  const auto best_k = search.at("best_k").get<std::size_t>();
  const IndexList cols = select::select_top_k(ranking, best_k);
  const MatrixXd xk = take_cols(stored.train_matrix(), cols);

  auto trained = ensemble::train_ensemble(sets, xk, c.specs, c.folds,
                                          derive_seed(c.seed, "train"), c.workers);
  bundle::ModelBundle b;
  b.config = c.raw;
  b.schema = c.schema;
  auto& m = b.model;
  m.schema_id = stored.features.schema_id;
  m.input_dimension = static_cast<std::size_t>(stored.features.rows.cols());
  m.feature_indices = cols;
  m.vocabulary = stored.dataset.vocabulary;
  m.threshold = c.threshold;
  m.champions = std::move(trained.champions);
  std::vector<double> precision, ppv;
  for (const auto& ch : m.champions) {
    precision.push_back(ch.cv_precision);
    ppv.push_back(ch.cv_ppv);
  }
  b.summary = {{"per_label_precision", precision},
               {"per_label_ppv", ppv},
               {"macro_ap", m.macro_ap()},
               {"best_k", best_k},
               {"search_score", search.at("best_score")},
               {"folds", c.folds}};

  const auto dir = at(work, "model");
  if (fs::exists(dir)) fs::remove_all(dir);
  bundle::write_bundle(dir.string(), b);
  write_text(at(work, "candidates.csv"),
             ensemble::candidate_table_csv(trained.table, &m.vocabulary));
}

void stage_evaluate(const PipelineConfig& c, const std::string& work) {
  const auto stored = load_data(c, work);
  const auto b = bundle::load_bundle(at(work, "model").string());
  IndexList rows = stored.rows(true);
  std::string evaluated_on = "holdout";
  if (rows.empty()) {
    log_warning("no held-out samples; reporting metrics on the training samples");
    rows = stored.rows(false);
    evaluated_on = "training";
  }
  const MatrixXd x = take_rows(stored.features.rows, rows);
  std::vector<data::LabelSet> truth;
  for (auto i : rows) truth.push_back(stored.dataset.labelsets[i]);
  const MatrixXd scores = b.model.score_matrix(x);
  std::vector<data::LabelSet> predicted;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const VectorXd row = scores.row(i).transpose();
    predicted.push_back(ensemble::decide_labels({row.data(), static_cast<std::size_t>(row.size())},
                                                b.model.threshold));
  }
  auto report = eval::multilabel_metrics(predicted, scores, truth);
  for (const auto& ch : b.model.champions) {
    report.per_label_precision.push_back(ch.cv_precision);
    report.per_label_ppv.push_back(ch.cv_ppv);
  }
  report.macro_ap = eval::macro_ap(report.per_label_precision);
  auto j = eval::to_json(report);
  j["evaluated_on"] = evaluated_on;
  write_json(at(work, "report.json"), j);
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"fetch",  "extract", "balance", "select",
                                              "search", "train",   "evaluate"};
  return names;
}

void run_stage(const std::string& name, const PipelineConfig& config, const std::string& work) {
  using Fn = void (*)(const PipelineConfig&, const std::string&);
  static const std::map<std::string, Fn> table{
      {"fetch", stage_fetch},   {"extract", stage_extract}, {"balance", stage_balance},
      {"select", stage_select}, {"search", stage_search},   {"train", stage_train},
      {"evaluate", stage_evaluate}};
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown stage '" + name + "'");
  log_info("stage " + name);
  try {
    it->second(config, work);
  } catch (const ConfigError& e) {
    throw ConfigError("stage '" + name + "': " + e.what());
  } catch (const std::exception& e) {
    throw Error("stage '" + name + "' failed: " + e.what());
  }
}

eval::MetricReport run_pipeline(const PipelineConfig& config, const std::string& out) {
  const fs::path target = fs::absolute(out).lexically_normal();
  if (target.filename().empty()) throw ConfigError("output directory needs a name");
  if (fs::exists(target) && !fs::is_empty(target) && !fs::exists(target / "dataset.json"))
    throw ConfigError("refusing to replace " + target.string() +
                      ": it exists and does not hold a previous run");
  const fs::path staging = target.string() + ".tmp";
  if (fs::exists(staging)) fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    for (const auto& name : stage_names()) run_stage(name, config, staging.string());
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  if (fs::exists(target)) fs::remove_all(target);
  fs::rename(staging, target);
  return eval::report_from_json(read_json(target / "report.json"));
}

}  // namespace locpred::pipeline
