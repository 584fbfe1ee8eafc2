#ifndef LOCPRED_SYNTHETIC_HPP
#define LOCPRED_SYNTHETIC_HPP

#include "locpred/dataset.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace locpred::synthetic {

/// Seeded planted-label protein generator. Every label owns a disjoint
/// block of residues; a sequence draws each residue from the background
/// with probability 1 - signal and otherwise from the blocks of its labels.
struct SyntheticOptions {
  std::size_t samples = 600;
  std::size_t labels = 4;
  std::size_t min_length = 60;
  std::size_t max_length = 160;
  /// Share of samples carrying two labels instead of one.
  double multi_label_fraction = 0.2;
  double signal = 0.35;
  std::uint64_t seed = 1;
};

std::vector<std::string> location_names(std::size_t labels);

/// Records with accession SYN00001.. and location names from location_names.
std::vector<data::SequenceRecord> generate(const SyntheticOptions& options);

/// Writes `<stem>.fasta` and `<stem>.tsv` into `dir`.
void write_fixture(const std::string& dir, const std::string& stem,
                   const std::vector<data::SequenceRecord>& records);

/// Pipeline config for a fixture written by write_fixture: sized to finish
/// within a few minutes on one core.
nlohmann::json pipeline_config(const std::string& stem, std::size_t labels, std::uint64_t seed);

}  // namespace locpred::synthetic

#endif  // LOCPRED_SYNTHETIC_HPP
