#ifndef LOCPRED_BUNDLE_HPP
#define LOCPRED_BUNDLE_HPP

#include "locpred/dataset.hpp"
#include "locpred/ensemble.hpp"
#include "locpred/features.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace locpred::bundle {

inline constexpr int kFormatVersion = 1;

/// Deployable model: a directory holding manifest.json plus one
/// champion-NN.json payload per label. The manifest carries a SHA-256 over
/// the payload files, verified on load.
struct ModelBundle {
  nlohmann::json config;
  features::FeatureSchema schema;
  ensemble::EnsembleModel model;
  /// Training-time summary: per-label CV precision and PPV, macro AP.
  nlohmann::json summary;
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Canonical JSON text used for every bundle file.
std::string canonical_dump(const nlohmann::json& j);

void write_bundle(const std::string& dir, const ModelBundle& bundle);
/// Throws ParseError on a malformed manifest or a hash mismatch.
ModelBundle load_bundle(const std::string& dir);

struct RecordPrediction {
  std::string id;
  std::vector<std::string> labels;           // display names
  std::map<std::string, double> scores;      // display name -> centred score
  std::string error;                          // set when the record was rejected
};

/// Extracts features and predicts every record; records that cannot be
/// encoded get an error entry instead of labels.
std::vector<RecordPrediction> predict_records(const ModelBundle& bundle,
                                              const std::vector<data::SequenceRecord>& records);

nlohmann::json to_json(const std::vector<RecordPrediction>& predictions);

}  // namespace locpred::bundle

#endif  // LOCPRED_BUNDLE_HPP
