#include "locpred/bundle.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace locpred::bundle {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr))
    throw Error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string canonical_dump(const nlohmann::json& j) { return j.dump(1) + "\n"; }

namespace {

std::string champion_file(std::size_t label_index) {
  char name[32];
  std::snprintf(name, sizeof name, "champion-%02zu.json", label_index + 1);
  return name;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + p.string());
}

// Hash input: for every payload in label order, its file name, a newline,
// its byte length, a newline and its bytes.
std::string payload_digest(const std::vector<std::pair<std::string, std::string>>& files) {
  std::string all;
  for (const auto& [name, text] : files) {
    all += name;
    all += '\n';
    all += std::to_string(text.size());
    all += '\n';
    all += text;
  }
  return sha256_hex(all);
}

}  // namespace

void write_bundle(const std::string& dir, const ModelBundle& b) {
  b.model.validate();
  fs::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files;
  nlohmann::json champions = nlohmann::json::array();
  for (const auto& c : b.model.champions) {
    const std::string name = champion_file(c.label_index);
    files.emplace_back(name, canonical_dump(ensemble::champion_to_json(c)));
    champions.push_back({{"label_index", c.label_index},
                         {"label", b.model.vocabulary.name(c.label_index)},
                         {"kind", classifiers::kind_name(c.kind)},
                         {"params", c.params},
                         {"cv_precision", c.cv_precision},
                         {"cv_ppv", c.cv_ppv},
                         {"file", name}});
  }
  nlohmann::json manifest = {
      {"format_version", kFormatVersion},
      {"number_format", "shortest round-trip decimal (IEEE-754 binary64)"},
      {"config", b.config},
      {"schema_id", b.model.schema_id},
      {"schema", features::to_json(b.schema)},
      {"input_dimension", b.model.input_dimension},
      {"feature_indices", b.model.feature_indices},
      {"vocabulary", b.model.vocabulary.labels()},
      {"threshold", b.model.threshold},
      {"champions", champions},
      {"summary", b.summary},
      {"payload_sha256", payload_digest(files)}};
  for (const auto& [name, text] : files) write_file(fs::path(dir) / name, text);
  write_file(fs::path(dir) / "manifest.json", canonical_dump(manifest));
}

ModelBundle load_bundle(const std::string& dir) {
  const fs::path root(dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(root / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bundle manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion)
      throw ParseError("unsupported bundle format version");
    ModelBundle b;
    b.config = manifest.at("config");
    b.summary = manifest.at("summary");
    b.schema = features::schema_from_json(manifest.at("schema"));
    auto& m = b.model;
    m.schema_id = manifest.at("schema_id").get<std::string>();
    if (m.schema_id != b.schema.schema_id())
      throw ParseError("bundle schema_id does not match its schema parameters");
    m.input_dimension = manifest.at("input_dimension").get<std::size_t>();
    if (m.input_dimension != b.schema.dimension())
      throw ParseError("bundle input dimension does not match its schema");
    m.feature_indices = manifest.at("feature_indices").get<IndexList>();
    m.vocabulary = data::LabelVocabulary(manifest.at("vocabulary").get<std::vector<std::string>>());
    m.threshold = manifest.at("threshold").get<double>();

    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& c : manifest.at("champions")) {
      const auto name = c.at("file").get<std::string>();
      if (name.find('/') != std::string::npos || name.find("..") != std::string::npos)
        throw ParseError("bundle payload name escapes the bundle directory");
      files.emplace_back(name, read_file(root / name));
    }
    if (payload_digest(files) != manifest.at("payload_sha256").get<std::string>())
      throw ParseError("bundle payload hash mismatch; the bundle is corrupt or was modified");
    for (const auto& [name, text] : files)
      m.champions.push_back(ensemble::champion_from_json(nlohmann::json::parse(text)));
    m.validate();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed bundle: " + std::string(e.what()));
  } catch (const DomainError& e) {
    throw ParseError("inconsistent bundle: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw ParseError("bundle schema rejected: " + std::string(e.what()));
  }
}

std::vector<RecordPrediction> predict_records(const ModelBundle& b,
                                              const std::vector<data::SequenceRecord>& records) {
  std::vector<RecordPrediction> out;
  for (const auto& r : records) {
    RecordPrediction p;
    p.id = r.accession;
    try {
      const auto fv = features::extract_hybrid(r.residues, b.schema);
      const auto pred = b.model.predict(fv.values);
      for (auto j : pred.labels) p.labels.push_back(b.model.vocabulary.name(j));
      for (std::size_t j = 0; j < pred.scores.size(); ++j)
        p.scores[b.model.vocabulary.name(j)] = pred.scores[j];
    } catch (const ExtractionError& e) {
      p.error = e.what();
    }
    out.push_back(std::move(p));
  }
  return out;
}

nlohmann::json to_json(const std::vector<RecordPrediction>& predictions) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : predictions) {
    if (!p.error.empty()) {
      arr.push_back({{"id", p.id}, {"error", p.error}});
      continue;
    }
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& [name, s] : p.scores) scores[name] = s;
    arr.push_back({{"id", p.id}, {"labels", p.labels}, {"scores", scores}});
  }
  return arr;
}

}  // namespace locpred::bundle
