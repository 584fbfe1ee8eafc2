#ifndef LOCPRED_UNIPROT_HPP
#define LOCPRED_UNIPROT_HPP

#include "locpred/dataset.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace locpred::data {

struct FetchOptions {
  /// Cache / fixture root. Defaults to $LOCPRED_CACHE when empty.
  std::string cache_dir;
  std::string host = "https://rest.uniprot.org";
  std::string search_path = "/uniprotkb/search";
  std::size_t page_size = 500;
  std::size_t max_retries = 3;
  /// When false, a cache miss is an error instead of a network request.
  bool allow_network = true;
};

/// Directory name under the cache root holding the pages of one query.
std::string cache_key(std::string_view query);

/// Parses one cached page: newline-delimited JSON objects with fields
/// accession, sequence and locations. A malformed line raises ParseError
/// naming the offending record.
std::vector<SequenceRecord> parse_cached_page(std::string_view text,
                                              std::string_view source);

/// Converts a UniProt TSV search response (Entry, Sequence, Subcellular
/// location [CC]) into records.
std::vector<SequenceRecord> parse_uniprot_tsv(std::string_view text);

/// Extracts location names from a "SUBCELLULAR LOCATION:" comment block.
std::vector<std::string> parse_subcellular_comment(std::string_view text);

/// Reads up to page_limit pages for `query`, from the cache when present and
/// from the REST endpoint otherwise (each fetched page is cached). Records are
/// deduplicated by accession, first occurrence wins; records with empty
/// sequences are rejected with a warning.
std::vector<SequenceRecord> fetch_uniprot(std::string_view query,
                                          std::size_t page_limit,
                                          const FetchOptions& options = {},
                                          Diagnostics* diag = nullptr);

}  // namespace locpred::data

#endif  // LOCPRED_UNIPROT_HPP
