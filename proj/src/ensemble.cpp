#include "locpred/ensemble.hpp"

#include "locpred/eval.hpp"
#include "locpred/parallel.hpp"
#include "locpred/rng.hpp"
#include "locpred/stats.hpp"

#include <algorithm>
#include <sstream>

namespace locpred::ensemble {

ClassifierSpec make_spec(Kind kind, const std::vector<nlohmann::json>& grid) {
  if (grid.empty())
    throw DomainError(classifiers::kind_name(kind) + ": empty parameter grid");
  ClassifierSpec spec;
  spec.kind = kind;
  for (const auto& p : grid) spec.grid.push_back(classifiers::validate_params(kind, p));
  return spec;
}

std::vector<ClassifierSpec> default_specs(const std::vector<Kind>& kinds) {
  std::vector<ClassifierSpec> out;
  for (auto k : kinds) out.push_back(make_spec(k, classifiers::default_grid(k)));
  return out;
}

std::vector<ClassifierSpec> specs_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("classifier list must be a non-empty array");
  std::vector<ClassifierSpec> out;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("kind"))
      throw ConfigError("each classifier entry needs a \"kind\"");
    const Kind kind = classifiers::parse_kind(e.at("kind").get<std::string>());
    std::vector<nlohmann::json> grid;
    if (e.contains("grid")) {
      if (!e.at("grid").is_array()) throw ConfigError("classifier grid must be an array");
      for (const auto& p : e.at("grid")) grid.push_back(p);
    } else {
      grid = classifiers::default_grid(kind);
    }
    out.push_back(make_spec(kind, grid));
  }
  return out;
}

nlohmann::json to_json(const std::vector<ClassifierSpec>& specs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : specs)
    arr.push_back({{"kind", classifiers::kind_name(s.kind)}, {"grid", s.grid}});
  return arr;
}

LabelSearch grid_search_label(const balance::BalancedBinaryDataset& balanced,
                              const MatrixXd& x, const std::vector<ClassifierSpec>& specs,
                              std::size_t folds, std::uint64_t seed, std::size_t workers) {
  const std::string label = "label " + std::to_string(balanced.label_index + 1);
  if (folds < 2) throw DomainError("grid search needs at least 2 folds");
  if (specs.empty()) throw DomainError("no classifier candidates for " + label);
  const IndexList samples = balanced.samples();
  const std::vector<int> y = balanced.targets();
  if (samples.empty()) throw DomainError(label + " has an empty balanced set");
  for (auto i : samples)
    if (i >= static_cast<std::size_t>(x.rows())) throw DomainError("sample index out of range");
  const MatrixXd xs = take_rows(x, samples);

  const auto plan = eval::kfold_split(samples.size(), std::min(folds, samples.size()),
                                      derive_seed(seed, "folds"), y);
  struct Split {
    IndexList train, test;
  };
  std::vector<Split> splits;
  for (std::size_t f = 0; f < plan.folds; ++f) {
    Split s{plan.train_indices(f), plan.test_indices(f)};
    bool pos = false, neg = false;
    for (auto i : s.train) (y[i] > 0 ? pos : neg) = true;
    if (s.test.empty() || !pos || !neg) {
      log_warning(label + ": fold " + std::to_string(f + 1) +
                  " skipped, its training split lacks a class");
      continue;
    }
    splits.push_back(std::move(s));
  }
  if (splits.empty()) throw DomainError(label + ": every fold is degenerate");

  LabelSearch out;
  std::vector<std::pair<std::size_t, std::size_t>> candidates;  // (spec, grid point)
  for (std::size_t s = 0; s < specs.size(); ++s) {
    for (std::size_t g = 0; g < specs[s].grid.size(); ++g) {
      candidates.emplace_back(s, g);
      CandidateScore c;
      c.label_index = balanced.label_index;
      c.kind = specs[s].kind;
      c.params = specs[s].grid[g];
      c.fold_precision.assign(splits.size(), 0.0);
      c.fold_ppv.assign(splits.size(), 0.0);
      out.table.push_back(std::move(c));
    }
  }

  std::vector<std::string> errors(candidates.size() * splits.size());
  parallel_for(errors.size(), workers, [&](std::size_t task) {
    const std::size_t c = task / splits.size(), f = task % splits.size();
    const auto& [s, g] = candidates[c];
    const auto& split = splits[f];
    std::vector<int> ytr, yte;
    for (auto i : split.train) ytr.push_back(y[i]);
    for (auto i : split.test) yte.push_back(y[i]);
    try {
      const auto model =
          classifiers::train_base(specs[s].kind, specs[s].grid[g], take_rows(xs, split.train),
                                  ytr, derive_seed(derive_seed(seed, c), f));
      const auto counts = eval::count_binary(model->predict_all(take_rows(xs, split.test)), yte);
      out.table[c].fold_precision[f] = counts.accuracy();
      out.table[c].fold_ppv[f] = counts.ppv();
    } catch (const Error& e) {
      errors[task] = e.what();
    }
  });

  double best = -1.0;
  std::size_t best_index = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    auto& row = out.table[c];
    for (std::size_t f = 0; f < splits.size(); ++f) {
      if (!errors[c * splits.size() + f].empty()) {
        row.failed = true;
        row.error = errors[c * splits.size() + f];
        break;
      }
    }
    if (row.failed) {
      log_warning(label + ": candidate " + classifiers::kind_name(row.kind) + " " +
                  row.params.dump() + " failed: " + row.error);
      continue;
    }
    for (std::size_t f = 0; f < splits.size(); ++f) {
      row.precision += row.fold_precision[f];
      row.ppv += row.fold_ppv[f];
    }
    row.precision /= static_cast<double>(splits.size());
    row.ppv /= static_cast<double>(splits.size());
    if (row.precision > best) {
      best = row.precision;
      best_index = c;
    }
  }
  if (best < 0.0) throw Error("every classifier candidate failed for " + label);
  const auto& win = out.table[best_index];
  out.champion.label_index = balanced.label_index;
  out.champion.kind = win.kind;
  out.champion.params = win.params;
  out.champion.cv_precision = win.precision;
  out.champion.cv_ppv = win.ppv;
  return out;
}

data::LabelSet decide_labels(std::span<const double> centred, double threshold) {
  if (centred.empty()) throw DomainError("no label scores");
  data::LabelSet out;
  for (std::size_t j = 0; j < centred.size(); ++j)
    if (centred[j] > threshold) out.push_back(j);
  if (out.empty()) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < centred.size(); ++j)
      if (centred[j] > centred[best]) best = j;
    out.push_back(best);
  }
  return out;
}

double EnsembleModel::macro_ap() const {
  std::vector<double> p;
  for (const auto& c : champions) p.push_back(c.cv_precision);
  return eval::macro_ap(p);
}

void EnsembleModel::validate() const {
  if (champions.size() != vocabulary.size() || champions.empty())
    throw DomainError("ensemble needs exactly one champion per label");
  for (std::size_t j = 0; j < champions.size(); ++j) {
    if (champions[j].label_index != j) throw DomainError("champions are not in label order");
    if (!champions[j].model) throw DomainError("champion without a trained model");
    if (champions[j].model->dimension() != static_cast<Eigen::Index>(feature_indices.size()))
      throw DomainError("champion dimension differs from the selected feature count");
  }
  if (feature_indices.empty()) throw DomainError("no selected features");
  for (auto i : feature_indices)
    if (i >= input_dimension) throw DomainError("selected feature index outside the schema");
}

Prediction EnsembleModel::predict(const VectorXd& x) const {
  if (x.size() != static_cast<Eigen::Index>(input_dimension))
    throw DomainError("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                      std::to_string(input_dimension));
  VectorXd selected(static_cast<Eigen::Index>(feature_indices.size()));
  for (std::size_t k = 0; k < feature_indices.size(); ++k)
    selected[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(feature_indices[k])];
  Prediction p;
  for (const auto& c : champions)
    p.scores.push_back(c.model->score(selected) - c.model->threshold());
  p.labels = decide_labels(p.scores, threshold);
  return p;
}

MatrixXd EnsembleModel::score_matrix(const MatrixXd& x) const {
  MatrixXd out(x.rows(), static_cast<Eigen::Index>(champions.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto p = predict(x.row(i).transpose());
    for (std::size_t j = 0; j < p.scores.size(); ++j) out(i, static_cast<Eigen::Index>(j)) = p.scores[j];
  }
  return out;
}

std::vector<data::LabelSet> EnsembleModel::predict_all(const MatrixXd& x) const {
  std::vector<data::LabelSet> out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(predict(x.row(i).transpose()).labels);
  return out;
}

EnsembleTraining train_ensemble(const std::vector<balance::BalancedBinaryDataset>& sets,
                                const MatrixXd& x, const std::vector<ClassifierSpec>& specs,
                                std::size_t folds, std::uint64_t seed, std::size_t workers) {
  EnsembleTraining out;
  for (const auto& set : sets) {
    const std::uint64_t label_seed = derive_seed(seed, set.label_index);
    auto search = grid_search_label(set, x, specs, folds, label_seed, workers);
    auto champion = search.champion;
    const auto samples = set.samples();
    const auto targets = set.targets();
    champion.model = classifiers::train_base(champion.kind, champion.params,
                                             take_rows(x, samples), targets,
                                             derive_seed(label_seed, "refit"));
    out.champions.push_back(std::move(champion));
    out.table.insert(out.table.end(), search.table.begin(), search.table.end());
  }
  return out;
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string candidate_table_csv(const std::vector<CandidateScore>& table,
                                const data::LabelVocabulary* vocabulary) {
  std::ostringstream out;
  out << "label,kind,params,fold_precisions,precision,ppv,status\n";
  for (const auto& row : table) {
    std::string label = std::to_string(row.label_index + 1);
    if (vocabulary && row.label_index < vocabulary->size())
      label = vocabulary->name(row.label_index);
    std::string folds;
    for (std::size_t f = 0; f < row.fold_precision.size(); ++f) {
      if (f) folds += ';';
      folds += format_double(row.fold_precision[f]);
    }
    out << csv_quote(label) << ',' << classifiers::kind_name(row.kind) << ','
        << csv_quote(row.params.dump()) << ',' << folds << ','
        << (row.failed ? "" : format_double(row.precision)) << ','
        << (row.failed ? "" : format_double(row.ppv)) << ','
        << (row.failed ? csv_quote("failed: " + row.error) : "ok") << '\n';
  }
  return out.str();
}

nlohmann::json champion_to_json(const LabelChampion& c) {
  if (!c.model) throw DomainError("champion without a trained model");
  return {{"label_index", c.label_index},
          {"kind", classifiers::kind_name(c.kind)},
          {"params", c.params},
          {"cv_precision", c.cv_precision},
          {"cv_ppv", c.cv_ppv},
          {"model", classifiers::to_json(*c.model)}};
}

LabelChampion champion_from_json(const nlohmann::json& j) {
  LabelChampion c;
  j.at("label_index").get_to(c.label_index);
  c.kind = classifiers::parse_kind(j.at("kind").get<std::string>());
  c.params = j.at("params");
  j.at("cv_precision").get_to(c.cv_precision);
  j.at("cv_ppv").get_to(c.cv_ppv);
  c.model = classifiers::classifier_from_json(j.at("model"));
  if (c.model->kind() != c.kind) throw ParseError("champion kind differs from its model");
  return c;
}

}  // namespace locpred::ensemble
