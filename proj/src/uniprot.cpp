#include "locpred/uniprot.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

namespace locpred::data {

namespace fs = std::filesystem;

namespace {

std::string trim_copy(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string page_name(std::size_t page) {
  std::ostringstream ss;
  ss << "page-" << std::setw(4) << std::setfill('0') << page << ".jsonl";
  return ss.str();
}

std::string url_encode(std::string_view s) {
  std::ostringstream out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out << c;
    } else {
      out << '%' << std::uppercase << std::hex << std::setw(2)
          << std::setfill('0') << static_cast<int>(c) << std::dec;
    }
  }
  return out.str();
}

// Extracts the path+query of the rel="next" target from a Link header.
std::string next_link(const std::string& header, const std::string& host) {
  std::size_t rel = header.find("rel=\"next\"");
  if (rel == std::string::npos) return {};
  std::size_t open = header.rfind('<', rel);
  std::size_t close = header.find('>', open);
  if (open == std::string::npos || close == std::string::npos) return {};
  std::string url = header.substr(open + 1, close - open - 1);
  if (url.rfind(host, 0) == 0) url = url.substr(host.size());
  return url;
}

std::string serialize_page(const std::vector<SequenceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j = {{"accession", r.accession},
                        {"sequence", r.residues},
                        {"locations", r.locations}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string http_get_with_retries(const FetchOptions& options,
                                  const std::string& path,
                                  std::string* link_header) {
  httplib::Client client(options.host);
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= options.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(500 << attempt));
    auto res = client.Get(path);
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      if (link_header) *link_header = res->get_header_value("Link");
      return res->body;
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status >= 400 && res->status < 500 && res->status != 429) break;
  }
  throw TransportError("UniProt request failed after retries: " + last_error);
}

}  // namespace

std::string cache_key(std::string_view query) {
  std::string key;
  for (char c : query) {
    key += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : query) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << key.substr(0, 48) << '-' << std::hex << std::setw(16)
     << std::setfill('0') << h;
  return ss.str();
}

std::vector<SequenceRecord> parse_cached_page(std::string_view text,
                                              std::string_view source) {
  std::vector<SequenceRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line = trim_copy(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where =
        std::string(source) + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed record at " + where + ": " + e.what());
    }
    std::string name = j.is_object() && j.contains("accession") &&
                               j["accession"].is_string()
                           ? j["accession"].get<std::string>()
                           : "<unknown>";
    try {
      SequenceRecord rec;
      rec.accession = j.at("accession").get<std::string>();
      rec.residues = j.at("sequence").get<std::string>();
      if (j.contains("locations"))
        rec.locations = j.at("locations").get<std::vector<std::string>>();
      if (rec.accession.empty()) throw ParseError("empty accession");
      out.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw ParseError("malformed record '" + name + "' at " + where + ": " +
                       e.what());
    }
  }
  return out;
}

std::vector<std::string> parse_subcellular_comment(std::string_view text) {
  // Drop evidence blocks {ECO:...}.
  std::string cleaned;
  int depth = 0;
  for (char c : text) {
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (depth > 0) --depth;
    } else if (depth == 0) {
      cleaned += c;
    }
  }
  static constexpr std::string_view kTag = "SUBCELLULAR LOCATION:";
  std::vector<std::string> chunks;
  std::size_t pos = cleaned.find(kTag);
  if (pos == std::string::npos) {
    chunks.push_back(cleaned);
  } else {
    while (pos != std::string::npos) {
      std::size_t start = pos + kTag.size();
      std::size_t next = cleaned.find(kTag, start);
      chunks.push_back(cleaned.substr(start, next == std::string::npos
                                                 ? std::string::npos
                                                 : next - start));
      pos = next;
    }
  }
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto chunk : chunks) {
    chunk = trim_copy(chunk);
    if (!chunk.empty() && chunk.front() == '[') {
      std::size_t close = chunk.find("]:");
      if (close != std::string::npos) chunk = chunk.substr(close + 2);
    }
    std::size_t note = chunk.find("Note=");
    if (note != std::string::npos) chunk = chunk.substr(0, note);
    std::stringstream ss(chunk);
    std::string piece;
    while (std::getline(ss, piece, '.')) {
      std::string head = piece.substr(0, piece.find(';'));
      std::stringstream parts(head);
      std::string part;
      while (std::getline(parts, part, ',')) {
        part = trim_copy(part);
        if (!part.empty() && seen.insert(part).second) out.push_back(part);
      }
    }
  }
  return out;
}

std::vector<SequenceRecord> parse_uniprot_tsv(std::string_view text) {
  std::vector<SequenceRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  int col_acc = -1, col_seq = -1, col_loc = -1;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (line.back() == '\t') cols.emplace_back();
    if (line_no == 1) {
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == "Entry") col_acc = static_cast<int>(i);
        if (cols[i] == "Sequence") col_seq = static_cast<int>(i);
        if (cols[i].rfind("Subcellular location", 0) == 0)
          col_loc = static_cast<int>(i);
      }
      if (col_acc < 0 || col_seq < 0)
        throw ParseError("UniProt TSV header lacks Entry/Sequence columns");
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max({col_acc, col_seq, col_loc}));
    if (cols.size() <= need) {
      throw ParseError("malformed UniProt TSV row '" +
                       (cols.empty() ? std::string() : cols[0]) + "' (line " +
                       std::to_string(line_no) + ")");
    }
    SequenceRecord rec;
    rec.accession = cols[col_acc];
    rec.residues = cols[col_seq];
    if (col_loc >= 0) rec.locations = parse_subcellular_comment(cols[col_loc]);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SequenceRecord> fetch_uniprot(std::string_view query,
                                          std::size_t page_limit,
                                          const FetchOptions& options,
                                          Diagnostics* diag) {
  std::string root = options.cache_dir;
  if (root.empty()) {
    if (const char* env = std::getenv("LOCPRED_CACHE")) root = env;
  }
  if (root.empty())
    throw ConfigError("no cache directory (set LOCPRED_CACHE or cache_dir)");
  const fs::path dir = fs::path(root) / cache_key(query);

  std::vector<SequenceRecord> pages_records;
  auto append = [&](std::vector<SequenceRecord> recs) {
    pages_records.insert(pages_records.end(),
                         std::make_move_iterator(recs.begin()),
                         std::make_move_iterator(recs.end()));
  };

  if (fs::exists(dir / page_name(1))) {
    // Cached query: consecutive pages, stopping at the first gap.
    for (std::size_t page = 1; page <= page_limit; ++page) {
      const fs::path file = dir / page_name(page);
      if (!fs::exists(file)) break;
      std::ifstream in(file, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      append(parse_cached_page(ss.str(), file.filename().string()));
    }
  } else {
    if (!options.allow_network)
      throw TransportError("no cached pages for query '" + std::string(query) +
                           "' and network access disabled");
    // Pages land in a staging directory so an interrupted download never
    // looks like a complete cache entry.
    const fs::path staging = dir.string() + ".partial";
    fs::remove_all(staging);
    fs::create_directories(staging);
    std::string next_path =
        options.search_path + "?query=" + url_encode(query) +
        "&format=tsv&fields=accession,sequence,cc_subcellular_location&size=" +
        std::to_string(options.page_size);
    for (std::size_t page = 1; page <= page_limit && !next_path.empty(); ++page) {
      std::string link;
      auto recs = parse_uniprot_tsv(http_get_with_retries(options, next_path, &link));
      std::ofstream(staging / page_name(page), std::ios::binary) << serialize_page(recs);
      append(std::move(recs));
      next_path = next_link(link, options.host);
    }
    fs::remove_all(dir);
    fs::rename(staging, dir);
  }

  std::vector<SequenceRecord> out;
  std::set<std::string> seen;
  for (auto& rec : pages_records) {
    if (!seen.insert(rec.accession).second) continue;
    if (normalize_record(rec, diag)) out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace locpred::data
