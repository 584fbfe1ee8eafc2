#ifndef LOCPRED_ENSEMBLE_HPP
#define LOCPRED_ENSEMBLE_HPP

#include "locpred/balance.hpp"
#include "locpred/classifiers.hpp"
#include "locpred/dataset.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace locpred::ensemble {

using classifiers::Kind;

struct ClassifierSpec {
  Kind kind = Kind::NaiveBayes;
  /// Parameter objects, each already validated and filled with defaults.
  std::vector<nlohmann::json> grid;
};

/// Validates every grid point; an empty grid is an error.
ClassifierSpec make_spec(Kind kind, const std::vector<nlohmann::json>& grid);
/// Each kind with its default grid.
std::vector<ClassifierSpec> default_specs(const std::vector<Kind>& kinds);

/// Reads [{"kind": "...", "grid": [{...}, ...]}, ...]; a missing grid means
/// the default one.
std::vector<ClassifierSpec> specs_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<ClassifierSpec>& specs);

/// One row of the candidate table: a (kind, grid point) evaluated on one
/// label. Precision is per-fold accuracy on the balanced set; PPV is reported
/// alongside.
struct CandidateScore {
  std::size_t label_index = 0;
  Kind kind = Kind::NaiveBayes;
  nlohmann::json params;
  std::vector<double> fold_precision;
  std::vector<double> fold_ppv;
  double precision = 0.0;
  double ppv = 0.0;
  bool failed = false;
  std::string error;
};

struct LabelChampion {
  std::size_t label_index = 0;
  Kind kind = Kind::NaiveBayes;
  nlohmann::json params;
  double cv_precision = 0.0;
  double cv_ppv = 0.0;
  std::shared_ptr<const classifiers::BinaryClassifier> model;
};

struct LabelSearch {
  LabelChampion champion;  // model left empty
  std::vector<CandidateScore> table;
};

/// Stratified k-fold evaluation of every (kind, grid point) on one balanced
/// set. The champion has the highest mean precision; ties go to the earlier
/// kind, then the earlier grid point. Folds whose training split lacks a
/// class are skipped. Failing candidates stay in the table marked failed.
LabelSearch grid_search_label(const balance::BalancedBinaryDataset& balanced,
                              const MatrixXd& x, const std::vector<ClassifierSpec>& specs,
                              std::size_t folds, std::uint64_t seed, std::size_t workers = 1);

/// Per-label prediction with label scores centred on each champion's own
/// threshold, so a positive score means the champion votes for the label.
struct Prediction {
  data::LabelSet labels;
  std::vector<double> scores;
};

struct EnsembleModel {
  std::string schema_id;
  std::size_t input_dimension = 0;
  IndexList feature_indices;
  data::LabelVocabulary vocabulary;
  /// Applied to the centred scores.
  double threshold = 0.0;
  std::vector<LabelChampion> champions;

  /// Mean of the champions' cross-validated precisions.
  double macro_ap() const;
  /// Throws DomainError when champions, vocabulary or indices disagree.
  void validate() const;

  /// `x` is a full-schema feature vector; the selected columns are taken
  /// here. Labels whose centred score exceeds the threshold are emitted; an
  /// empty result falls back to the single best label.
  Prediction predict(const VectorXd& x) const;
  /// Centred scores, samples x labels, for full-schema rows.
  MatrixXd score_matrix(const MatrixXd& x) const;
  std::vector<data::LabelSet> predict_all(const MatrixXd& x) const;
};

/// Labels from centred scores: those above the threshold, else the argmax
/// (lowest index on ties).
data::LabelSet decide_labels(std::span<const double> centred, double threshold);

struct EnsembleTraining {
  std::vector<LabelChampion> champions;
  std::vector<CandidateScore> table;
};

/// grid_search_label for every balanced set, then each champion is refitted
/// on its whole balanced set. `x` already holds only the selected columns.
EnsembleTraining train_ensemble(const std::vector<balance::BalancedBinaryDataset>& sets,
                                const MatrixXd& x, const std::vector<ClassifierSpec>& specs,
                                std::size_t folds, std::uint64_t seed,
                                std::size_t workers = 1);

/// label,kind,params,fold_precisions,precision,ppv,status
std::string candidate_table_csv(const std::vector<CandidateScore>& table,
                                const data::LabelVocabulary* vocabulary = nullptr);

nlohmann::json champion_to_json(const LabelChampion& champion);
LabelChampion champion_from_json(const nlohmann::json& j);

}  // namespace locpred::ensemble

#endif  // LOCPRED_ENSEMBLE_HPP
