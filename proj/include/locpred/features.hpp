#ifndef LOCPRED_FEATURES_HPP
#define LOCPRED_FEATURES_HPP

#include "locpred/common.hpp"
#include "locpred/dataset.hpp"
#include "locpred/properties.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace locpred::features {

// Low-level extractors. Each returns a dense vector of the documented length
// and throws DomainError on sequences that are too short.

/// Residue frequencies in kAminoAcids order (20).
VectorXd extract_aac(std::string_view seq);

/// Composition (3), transition (3: groups 1-2, 1-3, 2-3) and distribution
/// (5 per group: first, 25%, 50%, 75% and last occurrence) for one
/// partition (21). Distribution positions are 1-based and divided by the
/// sequence length; the q-quantile is the ceil(q * n_g)-th occurrence.
VectorXd extract_ctd(std::string_view seq, const PropertyTable& property);

/// AAC followed by CTD over the eight partitions (188).
VectorXd extract_188(std::string_view seq);

/// Parallel-correlation pseudo amino acid composition (20 + lambda).
/// Correlation between residues a and b is the mean over channels of
/// (s(a) - s(b))^2.
VectorXd extract_pc_pseaac(std::string_view seq, std::size_t lambda,
                           double weight,
                           std::span<const PropertyTable> channels);

/// Series-correlation pseudo amino acid composition (20 + lambda * channels).
/// Tail entries are ordered lag-major; each is the mean squared difference of
/// one channel at that lag.
VectorXd extract_sc_pseaac(std::string_view seq, std::size_t lambda,
                           double weight,
                           std::span<const PropertyTable> channels);

enum class AutocorrMode { AC, CC, ACC };

/// Covariance descriptors over standardized scales at lags 1..max_lag.
///   AC : every property, lag-major within property (|P| * max_lag)
///   CC : every ordered pair of distinct properties (|P|(|P|-1) * max_lag)
///   ACC: AC of properties[0] then CC of (properties[0], properties[1])
///        (2 * max_lag)
VectorXd extract_autocorr(std::string_view seq, AutocorrMode mode,
                          std::span<const PropertyTable> properties,
                          std::size_t max_lag);

double autocovariance(std::string_view seq, const PropertyTable& a,
                      const PropertyTable& b, std::size_t lag);

// Schema ----------------------------------------------------------------------

/// Parameters of the hybrid descriptor. The defaults reproduce the 350-wide
/// layout: 188 + AC 22 + CC 22 + ACC 22 + PC 22 + PC-general 22 + SC 26 +
/// SC-general 26.
struct FeatureSchema {
  double weight = 0.05;
  std::size_t pc_lambda = 2;
  std::size_t pc_general_lambda = 2;
  std::size_t sc_lambda = 3;
  std::size_t sc_general_lambda = 3;
  std::size_t max_lag = 11;
  std::vector<std::string> pc_channels{"hydrophobicity", "hydrophilicity"};
  std::vector<std::string> pc_general_channels{"hydrophobicity", "hydrophilicity",
                                               "side-chain mass"};
  std::vector<std::string> sc_channels{"hydrophobicity", "hydrophilicity"};
  std::vector<std::string> sc_general_channels{"hydrophilicity", "side-chain mass"};
  std::vector<std::string> ac_properties{"hydrophobicity", "hydrophilicity"};
  std::vector<std::string> cc_properties{"hydrophobicity", "hydrophilicity"};
  std::vector<std::string> acc_properties{"side-chain mass", "hydrophobicity"};

  std::size_t dimension() const;
  /// Shortest sequence every block can encode.
  std::size_t min_length() const;
  std::string schema_id() const;
  std::vector<std::string> column_names() const;

  bool operator==(const FeatureSchema&) const = default;
};

nlohmann::json to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

struct FeatureVector {
  VectorXd values;
  std::string schema_id;
};

/// Hybrid descriptor for one sequence. Sequences shorter than
/// schema.min_length() raise ExtractionError; no padding is applied.
FeatureVector extract_hybrid(std::string_view seq, const FeatureSchema& schema = {});

struct FeatureMatrix {
  MatrixXd rows;
  std::string schema_id;
  std::vector<std::string> column_names;

  Eigen::Index samples() const { return rows.rows(); }
  Eigen::Index dimension() const { return rows.cols(); }
};

struct ExtractionFailure {
  std::size_t index;
  std::string accession;
  std::string reason;
};

/// Extracts one row per record. With a failure sink, failed records are
/// reported there and omitted from the matrix (`kept` lists the surviving
/// record indices); without one, the first failure is thrown.
FeatureMatrix extract_matrix(const std::vector<data::SequenceRecord>& records,
                             const FeatureSchema& schema, std::size_t workers = 1,
                             std::vector<ExtractionFailure>* failures = nullptr,
                             IndexList* kept = nullptr);

// Serialization: CSV with a header of column names (shortest round-trip
// decimal form) plus a JSON sidecar `<path>.schema.json` carrying schema_id,
// parameters and format version.
void write_matrix_csv(const std::string& path, const FeatureMatrix& matrix,
                      const FeatureSchema* schema = nullptr);
FeatureMatrix read_matrix_csv(const std::string& path);
std::string matrix_to_csv(const FeatureMatrix& matrix);
FeatureMatrix matrix_from_csv(std::string_view text);

}  // namespace locpred::features

#endif  // LOCPRED_FEATURES_HPP
