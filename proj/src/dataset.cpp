#include "locpred/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace locpred::data {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

}  // namespace

int residue_index(char residue) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (std::size_t i = 0; i < kAminoAcids.size(); ++i)
      t[static_cast<unsigned char>(kAminoAcids[i])] = static_cast<int>(i);
    return t;
  }();
  return table[static_cast<unsigned char>(residue)];
}

bool normalize_record(SequenceRecord& record, Diagnostics* diag) {
  std::string cleaned;
  cleaned.reserve(record.residues.size());
  std::size_t removed = 0;
  for (char c : record.residues) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (residue_index(up) >= 0) {
      cleaned.push_back(up);
    } else {
      ++removed;
    }
  }
  if (removed > 0 && diag) {
    diag->warn(record.accession + ": removed " + std::to_string(removed) +
               " non-canonical residue(s)");
  }
  record.residues = std::move(cleaned);
  if (record.residues.empty()) {
    if (diag) diag->warn(record.accession + ": empty sequence rejected");
    return false;
  }
  return true;
}

// LabelVocabulary -------------------------------------------------------------

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size())
    throw DomainError("label vocabulary contains duplicates");
}

int LabelVocabulary::find(std::string_view normalized) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (normalize_location(labels_[i]) == normalized) return static_cast<int>(i);
  }
  return -1;
}

// MultiLabelDataset -------------------------------------------------------------

void MultiLabelDataset::validate() const {
  if (records.size() != labelsets.size())
    throw DomainError("records and labelsets differ in length");
  for (std::size_t i = 0; i < labelsets.size(); ++i) {
    const auto& ls = labelsets[i];
    if (ls.empty())
      throw DomainError("sample " + records[i].accession + " has no labels");
    for (std::size_t k = 0; k < ls.size(); ++k) {
      if (ls[k] >= vocabulary.size())
        throw DomainError("label index out of vocabulary");
      if (k > 0 && ls[k] <= ls[k - 1])
        throw DomainError("labelset is not sorted and unique");
    }
  }
}

std::vector<std::size_t> MultiLabelDataset::label_counts() const {
  std::vector<std::size_t> counts(vocabulary.size(), 0);
  for (const auto& ls : labelsets)
    for (auto j : ls) ++counts.at(j);
  return counts;
}

std::vector<std::size_t> MultiLabelDataset::cardinality_histogram() const {
  std::vector<std::size_t> hist(vocabulary.size(), 0);
  for (const auto& ls : labelsets)
    if (!ls.empty()) ++hist.at(ls.size() - 1);
  return hist;
}

MultiLabelDataset MultiLabelDataset::subset(const IndexList& indices) const {
  MultiLabelDataset out;
  out.vocabulary = vocabulary;
  out.records.reserve(indices.size());
  out.labelsets.reserve(indices.size());
  for (auto i : indices) {
    out.records.push_back(records.at(i));
    out.labelsets.push_back(labelsets.at(i));
  }
  return out;
}

// FASTA -----------------------------------------------------------------------

std::vector<SequenceRecord> parse_fasta(std::string_view text,
                                        Diagnostics* diag) {
  std::vector<SequenceRecord> raw;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::string_view body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '>') {
      std::string_view header = trim(body.substr(1));
      std::size_t ws = header.find_first_of(" \t");
      SequenceRecord rec;
      rec.accession = std::string(header.substr(0, ws));
      if (rec.accession.empty())
        throw FormatError("FASTA header without identifier", line_no);
      raw.push_back(std::move(rec));
    } else if (body.front() == ';') {
      continue;  // legacy comment line
    } else {
      if (raw.empty())
        throw FormatError("sequence data before first FASTA header", line_no);
      raw.back().residues.append(body);
    }
  }
  std::vector<SequenceRecord> out;
  out.reserve(raw.size());
  for (auto& rec : raw) {
    if (normalize_record(rec, diag)) out.push_back(std::move(rec));
  }
  return out;
}

std::string serialize_fasta(const std::vector<SequenceRecord>& records,
                            std::size_t line_width) {
  std::string out;
  for (const auto& rec : records) {
    out += '>';
    out += rec.accession;
    out += '\n';
    for (std::size_t i = 0; i < rec.residues.size(); i += line_width) {
      out.append(rec.residues, i, line_width);
      out += '\n';
    }
  }
  return out;
}

std::vector<SequenceRecord> read_fasta_file(const std::string& path,
                                            Diagnostics* diag) {
  return parse_fasta(read_file(path), diag);
}

void write_fasta_file(const std::string& path,
                      const std::vector<SequenceRecord>& records) {
  write_file(path, serialize_fasta(records));
}

// Label TSV -------------------------------------------------------------------

std::map<std::string, std::vector<std::string>> parse_label_tsv(
    std::string_view text) {
  std::map<std::string, std::vector<std::string>> table;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 2)
      throw FormatError("label TSV rows need exactly two columns", line_no);
    std::string accession(trim(cols[0]));
    if (accession.empty()) throw FormatError("empty accession", line_no);
    auto& locs = table[accession];
    for (auto loc : split(cols[1], ',')) {
      loc = trim(loc);
      if (!loc.empty()) locs.emplace_back(loc);
    }
  }
  return table;
}

std::string serialize_label_tsv(const std::vector<SequenceRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += rec.accession;
    out += '\t';
    for (std::size_t i = 0; i < rec.locations.size(); ++i) {
      if (i) out += ',';
      out += rec.locations[i];
    }
    out += '\n';
  }
  return out;
}

void attach_locations(
    std::vector<SequenceRecord>& records,
    const std::map<std::string, std::vector<std::string>>& table) {
  for (auto& rec : records) {
    auto it = table.find(rec.accession);
    if (it != table.end()) rec.locations = it->second;
  }
}

// Label derivation --------------------------------------------------------------

std::string normalize_location(std::string_view raw) {
  std::size_t semi = raw.find(';');
  if (semi != std::string_view::npos) raw = raw.substr(0, semi);
  raw = trim(raw);
  std::string out(raw);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string display_location(std::string_view normalized) {
  std::string out(normalized);
  if (!out.empty())
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

namespace {

std::set<std::string> record_locations(const SequenceRecord& rec) {
  std::set<std::string> locs;
  for (const auto& raw : rec.locations) {
    auto norm = normalize_location(raw);
    if (!norm.empty()) locs.insert(std::move(norm));
  }
  return locs;
}

}  // namespace

std::vector<std::pair<std::string, std::size_t>> location_frequencies(
    const std::vector<SequenceRecord>& records) {
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : records)
    for (const auto& loc : record_locations(rec)) ++counts[loc];
  std::vector<std::pair<std::string, std::size_t>> freq(counts.begin(),
                                                        counts.end());
  // std::map already orders names, so a stable sort keeps ties lexicographic.
  std::stable_sort(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  return freq;
}

MultiLabelDataset derive_labels(const std::vector<SequenceRecord>& records,
                                std::size_t top_n) {
  if (top_n == 0) throw ConfigError("top_n must be at least 1");
  auto freq = location_frequencies(records);
  if (freq.size() < top_n) {
    throw ConfigError("requested " + std::to_string(top_n) +
                      " labels but only " + std::to_string(freq.size()) +
                      " distinct locations exist");
  }
  std::vector<std::string> names;
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < top_n; ++i) {
    index_of[freq[i].first] = i;
    names.push_back(display_location(freq[i].first));
  }
  MultiLabelDataset out;
  out.vocabulary = LabelVocabulary(std::move(names));
  for (const auto& rec : records) {
    LabelSet ls;
    for (const auto& loc : record_locations(rec)) {
      auto it = index_of.find(loc);
      if (it != index_of.end()) ls.push_back(it->second);
    }
    if (ls.empty()) continue;
    std::sort(ls.begin(), ls.end());
    out.records.push_back(rec);
    out.labelsets.push_back(std::move(ls));
  }
  return out;
}

// Redundancy --------------------------------------------------------------------

namespace {

// Sorted 5-mer codes (base-20 packing fits in 32 bits).
std::vector<std::uint32_t> kmer_codes(std::string_view s) {
  std::vector<std::uint32_t> codes;
  if (s.size() < kIdentityKmer) return codes;
  codes.reserve(s.size() - kIdentityKmer + 1);
  for (std::size_t i = 0; i + kIdentityKmer <= s.size(); ++i) {
    std::uint32_t code = 0;
    for (std::size_t k = 0; k < kIdentityKmer; ++k) {
      int r = residue_index(s[i + k]);
      code = code * 20 + static_cast<std::uint32_t>(r < 0 ? 0 : r);
    }
    codes.push_back(code);
  }
  std::sort(codes.begin(), codes.end());
  return codes;
}

double identity_from_codes(const std::vector<std::uint32_t>& a,
                           const std::vector<std::uint32_t>& b,
                           std::string_view sa, std::string_view sb) {
  if (a.empty() || b.empty()) return sa == sb ? 1.0 : 0.0;
  std::size_t shared = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++shared;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(shared) /
         static_cast<double>(std::min(a.size(), b.size()));
}

}  // namespace

double kmer_identity(std::string_view a, std::string_view b) {
  return identity_from_codes(kmer_codes(a), kmer_codes(b), a, b);
}

MultiLabelDataset redundancy_filter(const MultiLabelDataset& dataset,
                                    double identity_threshold) {
  if (!(identity_threshold > 0.0 && identity_threshold <= 1.0))
    throw DomainError("identity threshold must lie in (0, 1]");
  const std::size_t n = dataset.size();
  IndexList order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return dataset.records[a].residues.size() > dataset.records[b].residues.size();
  });
  std::vector<std::vector<std::uint32_t>> codes(n);
  for (std::size_t i = 0; i < n; ++i) codes[i] = kmer_codes(dataset.records[i].residues);

  IndexList retained;
  for (auto i : order) {
    bool redundant = false;
    for (auto r : retained) {
      if (identity_from_codes(codes[i], codes[r], dataset.records[i].residues,
                              dataset.records[r].residues) >= identity_threshold) {
        redundant = true;
        break;
      }
    }
    if (!redundant) retained.push_back(i);
  }
  std::sort(retained.begin(), retained.end());
  return dataset.subset(retained);
}

// Binary relevance --------------------------------------------------------------

std::vector<BinaryDataset> binary_relevance(const MultiLabelDataset& dataset) {
  if (dataset.vocabulary.empty()) throw DomainError("empty label vocabulary");
  const std::size_t l = dataset.vocabulary.size();
  std::vector<BinaryDataset> out(l);
  for (std::size_t j = 0; j < l; ++j) out[j].label_index = j;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& ls = dataset.labelsets[i];
    for (std::size_t j = 0; j < l; ++j) {
      if (std::binary_search(ls.begin(), ls.end(), j)) {
        out[j].positives.push_back(i);
      } else {
        out[j].negatives.push_back(i);
      }
    }
  }
  for (const auto& b : out) {
    if (b.positives.empty()) {
      throw DomainError("label '" + dataset.vocabulary.name(b.label_index) +
                        "' has no positive samples");
    }
  }
  return out;
}

// Manifest --------------------------------------------------------------------

DatasetManifest make_manifest(const MultiLabelDataset& dataset,
                              double threshold, std::string snapshot_date) {
  DatasetManifest m;
  m.vocabulary = dataset.vocabulary;
  m.label_counts = dataset.label_counts();
  m.cardinality = dataset.cardinality_histogram();
  m.threshold = threshold;
  m.snapshot_date = std::move(snapshot_date);
  m.samples = dataset.size();
  return m;
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json labels = nlohmann::json::array();
  for (std::size_t i = 0; i < m.vocabulary.size(); ++i) {
    labels.push_back({{"class_id", i + 1},
                      {"name", m.vocabulary.name(i)},
                      {"count", m.label_counts.at(i)}});
  }
  return {{"vocabulary", labels},
          {"cardinality", m.cardinality},
          {"threshold", m.threshold},
          {"snapshot_date", m.snapshot_date},
          {"samples", m.samples}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  std::vector<std::string> names;
  for (const auto& entry : j.at("vocabulary")) {
    names.push_back(entry.at("name").get<std::string>());
    m.label_counts.push_back(entry.at("count").get<std::size_t>());
  }
  m.vocabulary = LabelVocabulary(std::move(names));
  m.cardinality = j.at("cardinality").get<std::vector<std::size_t>>();
  m.threshold = j.at("threshold").get<double>();
  m.snapshot_date = j.at("snapshot_date").get<std::string>();
  m.samples = j.at("samples").get<std::size_t>();
  return m;
}

}  // namespace locpred::data
