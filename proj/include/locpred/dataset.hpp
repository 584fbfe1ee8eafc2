#ifndef LOCPRED_DATASET_HPP
#define LOCPRED_DATASET_HPP

#include "locpred/common.hpp"

#include <json.hpp>

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace locpred::data {

/// The 20 canonical amino acids in the fixed alphabetical order used by every
/// feature block.
inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";

/// Index of a canonical residue in kAminoAcids, or -1.
int residue_index(char residue);

struct SequenceRecord {
  std::string accession;
  std::string residues;
  std::vector<std::string> locations;

  bool operator==(const SequenceRecord&) const = default;
};

/// Uppercases, deletes non-canonical residues (one warning per record) and
/// rejects empty results. Returns false when the record must be dropped.
bool normalize_record(SequenceRecord& record, Diagnostics* diag = nullptr);

/// Ordered location names; position i is class id i + 1.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  explicit LabelVocabulary(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::string& name(std::size_t index) const { return labels_.at(index); }
  /// Index of a normalized location name, or -1.
  int find(std::string_view normalized) const;

  bool operator==(const LabelVocabulary&) const = default;

 private:
  std::vector<std::string> labels_;
};

/// Sorted, non-empty set of label indices.
using LabelSet = std::vector<std::size_t>;

struct MultiLabelDataset {
  std::vector<SequenceRecord> records;
  std::vector<LabelSet> labelsets;
  LabelVocabulary vocabulary;

  std::size_t size() const { return records.size(); }
  /// Throws DomainError when an invariant does not hold.
  void validate() const;
  /// Positives per label.
  std::vector<std::size_t> label_counts() const;
  /// Entry i is the number of samples carrying exactly i + 1 labels.
  std::vector<std::size_t> cardinality_histogram() const;
  /// Restriction to the given sample indices, in the given order.
  MultiLabelDataset subset(const IndexList& indices) const;
};

struct BinaryDataset {
  std::size_t label_index = 0;
  IndexList positives;
  IndexList negatives;

  std::size_t size() const { return positives.size() + negatives.size(); }
};

// FASTA ---------------------------------------------------------------------

/// One record per header line; sequence lines are concatenated and
/// normalized. Records that are empty after normalization are dropped with a
/// warning. Sequence data before the first header is a FormatError.
std::vector<SequenceRecord> parse_fasta(std::string_view text,
                                        Diagnostics* diag = nullptr);
std::string serialize_fasta(const std::vector<SequenceRecord>& records,
                            std::size_t line_width = 60);

std::vector<SequenceRecord> read_fasta_file(const std::string& path,
                                            Diagnostics* diag = nullptr);
void write_fasta_file(const std::string& path,
                      const std::vector<SequenceRecord>& records);

// Label TSV: accession<TAB>comma-separated location names ----------------

std::map<std::string, std::vector<std::string>> parse_label_tsv(
    std::string_view text);
std::string serialize_label_tsv(const std::vector<SequenceRecord>& records);

/// Attaches locations from a label table to FASTA records. Records without
/// an entry keep an empty location list (and are later dropped by
/// derive_labels).
void attach_locations(
    std::vector<SequenceRecord>& records,
    const std::map<std::string, std::vector<std::string>>& table);

// Label derivation ------------------------------------------------------------

/// Trim, case-fold and strip any qualifier after ';'.
std::string normalize_location(std::string_view raw);
/// Display form of a normalized location: first letter uppercased.
std::string display_location(std::string_view normalized);

/// Builds the top_n vocabulary (by frequency, ties by name) and keeps records
/// whose locations intersect it.
MultiLabelDataset derive_labels(const std::vector<SequenceRecord>& records,
                                std::size_t top_n);

/// Location frequencies over the records, most frequent first.
std::vector<std::pair<std::string, std::size_t>> location_frequencies(
    const std::vector<SequenceRecord>& records);

// Redundancy ------------------------------------------------------------------

inline constexpr std::size_t kIdentityKmer = 5;

/// Shared 5-mer count (multiset intersection) divided by the smaller 5-mer
/// count. Sequences too short to hold a 5-mer score 1 when equal and 0
/// otherwise.
double kmer_identity(std::string_view a, std::string_view b);

/// Greedy clustering in descending length order: a sequence is dropped when
/// its identity to any already retained sequence reaches the threshold.
/// Retained samples keep their original relative order.
MultiLabelDataset redundancy_filter(const MultiLabelDataset& dataset,
                                    double identity_threshold);

// Binary relevance ----------------------------------------------------------

std::vector<BinaryDataset> binary_relevance(const MultiLabelDataset& dataset);

// Manifest ------------------------------------------------------------------

struct DatasetManifest {
  LabelVocabulary vocabulary;
  std::vector<std::size_t> label_counts;
  std::vector<std::size_t> cardinality;
  double threshold = 1.0;
  std::string snapshot_date;
  std::size_t samples = 0;
};

DatasetManifest make_manifest(const MultiLabelDataset& dataset,
                              double threshold, std::string snapshot_date);
nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);

}  // namespace locpred::data

#endif  // LOCPRED_DATASET_HPP
