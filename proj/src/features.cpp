#include "locpred/features.hpp"

#include "locpred/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace locpred::features {

namespace {

// Residue indices of a canonical sequence.
std::vector<int> encode(std::string_view seq) {
  std::vector<int> out;
  out.reserve(seq.size());
  for (char c : seq) {
    int r = data::residue_index(c);
    if (r < 0)
      throw DomainError(std::string("non-canonical residue '") + c + "'");
    out.push_back(r);
  }
  return out;
}

void require_length(std::string_view seq, std::size_t min_len, const char* what) {
  if (seq.size() < min_len) {
    throw DomainError(std::string(what) + " needs a sequence of length >= " +
                      std::to_string(min_len) + ", got " +
                      std::to_string(seq.size()));
  }
}

std::vector<PropertyTable> resolve(const std::vector<std::string>& names) {
  std::vector<PropertyTable> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(scale_property(n));
  return out;
}

VectorXd aac_from_codes(const std::vector<int>& codes) {
  VectorXd v = VectorXd::Zero(20);
  for (int r : codes) v[r] += 1.0;
  return v / static_cast<double>(codes.size());
}

// Pseudo amino acid assembly: frequencies then weighted correlation factors,
// jointly normalized.
VectorXd assemble_pseaac(const VectorXd& freq, const VectorXd& theta,
                         double weight) {
  const double denom = freq.sum() + weight * theta.sum();
  VectorXd out(freq.size() + theta.size());
  out.head(freq.size()) = freq / denom;
  out.tail(theta.size()) = weight * theta / denom;
  return out;
}

void check_weight(double weight) {
  if (!(weight > 0.0 && weight <= 1.0))
    throw DomainError("pseudo amino acid weight must lie in (0, 1]");
}

}  // namespace

VectorXd extract_aac(std::string_view seq) {
  if (seq.empty()) throw DomainError("AAC of an empty sequence");
  return aac_from_codes(encode(seq));
}

VectorXd extract_ctd(std::string_view seq, const PropertyTable& property) {
  require_length(seq, 2, "CTD");
  if (!property.has_groups)
    throw DomainError("property '" + property.name + "' has no partition");
  const auto codes = encode(seq);
  const std::size_t n = codes.size();

  std::vector<int> group(n);
  std::array<std::vector<std::size_t>, 3> positions;
  for (std::size_t i = 0; i < n; ++i) {
    group[i] = property.group_of(codes[i]);
    positions[group[i]].push_back(i + 1);
  }

  VectorXd out = VectorXd::Zero(21);
  for (int g = 0; g < 3; ++g)
    out[g] = static_cast<double>(positions[g].size()) / static_cast<double>(n);

  // Transitions between unordered group pairs (1,2), (1,3), (2,3).
  std::array<double, 3> trans{};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    int a = group[i], b = group[i + 1];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    trans[a == 0 ? (b == 1 ? 0 : 1) : 2] += 1.0;
  }
  for (int t = 0; t < 3; ++t) out[3 + t] = trans[t] / static_cast<double>(n - 1);

  static constexpr std::array<double, 5> kQuantiles = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int g = 0; g < 3; ++g) {
    const auto& pos = positions[g];
    if (pos.empty()) continue;
    const double ng = static_cast<double>(pos.size());
    for (std::size_t q = 0; q < kQuantiles.size(); ++q) {
      auto rank = static_cast<std::size_t>(std::ceil(kQuantiles[q] * ng));
      rank = std::clamp<std::size_t>(rank, 1, pos.size());
      out[6 + 5 * g + q] = static_cast<double>(pos[rank - 1]) / static_cast<double>(n);
    }
  }
  return out;
}

VectorXd extract_188(std::string_view seq) {
  require_length(seq, 2, "188D descriptor");
  VectorXd out(188);
  out.head(20) = extract_aac(seq);
  const auto& tables = ctd_properties();
  for (std::size_t p = 0; p < tables.size(); ++p)
    out.segment(20 + 21 * static_cast<Eigen::Index>(p), 21) = extract_ctd(seq, tables[p]);
  return out;
}

VectorXd extract_pc_pseaac(std::string_view seq, std::size_t lambda,
                           double weight,
                           std::span<const PropertyTable> channels) {
  check_weight(weight);
  if (seq.size() <= lambda || seq.empty())
    throw DomainError("PC-PseAAC needs a sequence longer than lambda");
  if (lambda > 0 && channels.empty())
    throw DomainError("PC-PseAAC needs at least one property channel");
  const auto codes = encode(seq);
  const std::size_t n = codes.size();
  VectorXd theta = VectorXd::Zero(static_cast<Eigen::Index>(lambda));
  for (std::size_t k = 1; k <= lambda; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) {
      double corr = 0.0;
      for (const auto& ch : channels) {
        const double d = ch.values[codes[i]] - ch.values[codes[i + k]];
        corr += d * d;
      }
      sum += corr / static_cast<double>(channels.size());
    }
    theta[static_cast<Eigen::Index>(k - 1)] = sum / static_cast<double>(n - k);
  }
  return assemble_pseaac(aac_from_codes(codes), theta, weight);
}

VectorXd extract_sc_pseaac(std::string_view seq, std::size_t lambda,
                           double weight,
                           std::span<const PropertyTable> channels) {
  check_weight(weight);
  if (seq.size() <= lambda || seq.empty())
    throw DomainError("SC-PseAAC needs a sequence longer than lambda");
  if (lambda > 0 && channels.empty())
    throw DomainError("SC-PseAAC needs at least one property channel");
  const auto codes = encode(seq);
  const std::size_t n = codes.size();
  const std::size_t m = channels.size();
  VectorXd theta = VectorXd::Zero(static_cast<Eigen::Index>(lambda * m));
  for (std::size_t k = 1; k <= lambda; ++k) {
    for (std::size_t c = 0; c < m; ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i + k < n; ++i) {
        const double d = channels[c].values[codes[i]] - channels[c].values[codes[i + k]];
        sum += d * d;
      }
      theta[static_cast<Eigen::Index>((k - 1) * m + c)] = sum / static_cast<double>(n - k);
    }
  }
  return assemble_pseaac(aac_from_codes(codes), theta, weight);
}

double autocovariance(std::string_view seq, const PropertyTable& a,
                      const PropertyTable& b, std::size_t lag) {
  if (lag == 0 || lag >= seq.size())
    throw DomainError("lag must lie in [1, sequence length)");
  const auto codes = encode(seq);
  const std::size_t n = codes.size();
  double mean_a = 0.0, mean_b = 0.0;
  for (int r : codes) {
    mean_a += a.values[r];
    mean_b += b.values[r];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i)
    sum += (a.values[codes[i]] - mean_a) * (b.values[codes[i + lag]] - mean_b);
  return sum / static_cast<double>(n - lag);
}

VectorXd extract_autocorr(std::string_view seq, AutocorrMode mode,
                          std::span<const PropertyTable> properties,
                          std::size_t max_lag) {
  if (max_lag == 0) throw DomainError("max_lag must be positive");
  if (seq.size() <= max_lag)
    throw DomainError("autocorrelation lag must be shorter than the sequence");
  for (const auto& p : properties) {
    if (!p.has_values) throw DomainError("property '" + p.name + "' has no scale");
  }
  std::vector<double> out;
  auto ac_block = [&](const PropertyTable& p) {
    for (std::size_t lag = 1; lag <= max_lag; ++lag)
      out.push_back(autocovariance(seq, p, p, lag));
  };
  auto cc_block = [&](const PropertyTable& p, const PropertyTable& q) {
    for (std::size_t lag = 1; lag <= max_lag; ++lag)
      out.push_back(autocovariance(seq, p, q, lag));
  };
  switch (mode) {
    case AutocorrMode::AC:
      if (properties.empty()) throw DomainError("AC needs at least one property");
      for (const auto& p : properties) ac_block(p);
      break;
    case AutocorrMode::CC:
      if (properties.size() < 2) throw DomainError("CC needs at least two properties");
      for (std::size_t i = 0; i < properties.size(); ++i)
        for (std::size_t j = 0; j < properties.size(); ++j)
          if (i != j) cc_block(properties[i], properties[j]);
      break;
    case AutocorrMode::ACC:
      if (properties.size() < 2) throw DomainError("ACC needs at least two properties");
      ac_block(properties[0]);
      cc_block(properties[0], properties[1]);
      break;
  }
  return Eigen::Map<const VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

// FeatureSchema -------------------------------------------------------------------

std::size_t FeatureSchema::dimension() const {
  const std::size_t nac = ac_properties.size();
  const std::size_t ncc = cc_properties.size();
  return 188 + nac * max_lag + ncc * (ncc - 1) * max_lag + 2 * max_lag +
         20 + pc_lambda + 20 + pc_general_lambda +
         20 + sc_lambda * sc_channels.size() +
         20 + sc_general_lambda * sc_general_channels.size();
}

std::size_t FeatureSchema::min_length() const {
  return std::max({std::size_t{2}, max_lag, pc_lambda, pc_general_lambda,
                   sc_lambda, sc_general_lambda}) + 1;
}

std::string FeatureSchema::schema_id() const {
  if (*this == FeatureSchema{}) return "hybrid350-v1";
  // Non-default parameters are folded into the identifier.
  const std::string params = to_json(*this).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : params) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << "hybrid" << dimension() << "-v1-" << std::hex << h;
  return ss.str();
}

std::vector<std::string> FeatureSchema::column_names() const {
  std::vector<std::string> names;
  for (char a : data::kAminoAcids) names.push_back(std::string("aac.") + a);
  for (const auto& t : ctd_properties()) {
    const std::string p = "ctd." + t.name + ".";
    for (int g = 1; g <= 3; ++g) names.push_back(p + "C" + std::to_string(g));
    for (const char* tr : {"T12", "T13", "T23"}) names.push_back(p + tr);
    for (int g = 1; g <= 3; ++g)
      for (const char* q : {"000", "025", "050", "075", "100"})
        names.push_back(p + "D" + std::to_string(g) + "." + q);
  }
  auto lags = [&](const std::string& prefix) {
    for (std::size_t l = 1; l <= max_lag; ++l)
      names.push_back(prefix + ".lag" + std::to_string(l));
  };
  for (const auto& p : ac_properties) lags("ac." + p);
  for (std::size_t i = 0; i < cc_properties.size(); ++i)
    for (std::size_t j = 0; j < cc_properties.size(); ++j)
      if (i != j) lags("cc." + cc_properties[i] + ">" + cc_properties[j]);
  lags("acc.ac." + acc_properties.at(0));
  lags("acc.cc." + acc_properties.at(0) + ">" + acc_properties.at(1));
  auto pse = [&](const std::string& prefix, std::size_t lambda,
                 const std::vector<std::string>* channels) {
    for (char a : data::kAminoAcids) names.push_back(prefix + ".aac." + a);
    for (std::size_t k = 1; k <= lambda; ++k) {
      if (!channels) {
        names.push_back(prefix + ".theta" + std::to_string(k));
      } else {
        for (const auto& c : *channels)
          names.push_back(prefix + ".theta" + std::to_string(k) + "." + c);
      }
    }
  };
  pse("pc", pc_lambda, nullptr);
  pse("pcg", pc_general_lambda, nullptr);
  pse("sc", sc_lambda, &sc_channels);
  pse("scg", sc_general_lambda, &sc_general_channels);
  return names;
}

nlohmann::json to_json(const FeatureSchema& s) {
  return {{"weight", s.weight},
          {"pc_lambda", s.pc_lambda},
          {"pc_general_lambda", s.pc_general_lambda},
          {"sc_lambda", s.sc_lambda},
          {"sc_general_lambda", s.sc_general_lambda},
          {"max_lag", s.max_lag},
          {"pc_channels", s.pc_channels},
          {"pc_general_channels", s.pc_general_channels},
          {"sc_channels", s.sc_channels},
          {"sc_general_channels", s.sc_general_channels},
          {"ac_properties", s.ac_properties},
          {"cc_properties", s.cc_properties},
          {"acc_properties", s.acc_properties}};
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("feature schema must be a JSON object");
  // Anything the writer does not emit is a misspelling.
  const auto known = to_json(FeatureSchema{});
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("feature schema: unknown key \"" + key + "\"");
  FeatureSchema s;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("weight", s.weight);
  get("pc_lambda", s.pc_lambda);
  get("pc_general_lambda", s.pc_general_lambda);
  get("sc_lambda", s.sc_lambda);
  get("sc_general_lambda", s.sc_general_lambda);
  get("max_lag", s.max_lag);
  get("pc_channels", s.pc_channels);
  get("pc_general_channels", s.pc_general_channels);
  get("sc_channels", s.sc_channels);
  get("sc_general_channels", s.sc_general_channels);
  get("ac_properties", s.ac_properties);
  get("cc_properties", s.cc_properties);
  get("acc_properties", s.acc_properties);
  check_weight(s.weight);
  if (s.max_lag == 0) throw ConfigError("max_lag must be positive");
  if (s.ac_properties.empty() || s.cc_properties.size() < 2 ||
      s.acc_properties.size() < 2)
    throw ConfigError("autocorrelation blocks need AC >= 1, CC >= 2, ACC >= 2 properties");
  for (const auto* list : {&s.pc_channels, &s.pc_general_channels, &s.sc_channels,
                           &s.sc_general_channels, &s.ac_properties,
                           &s.cc_properties, &s.acc_properties}) {
    for (const auto& n : *list) scale_property(n);
  }
  return s;
}

FeatureVector extract_hybrid(std::string_view seq, const FeatureSchema& schema) {
  if (seq.size() < schema.min_length()) {
    throw ExtractionError("sequence of length " + std::to_string(seq.size()) +
                          " is shorter than the schema minimum " +
                          std::to_string(schema.min_length()));
  }
  std::vector<VectorXd> blocks;
  try {
    blocks.push_back(extract_188(seq));
    const auto ac = resolve(schema.ac_properties);
    const auto cc = resolve(schema.cc_properties);
    const auto acc = resolve(schema.acc_properties);
    blocks.push_back(extract_autocorr(seq, AutocorrMode::AC, ac, schema.max_lag));
    blocks.push_back(extract_autocorr(seq, AutocorrMode::CC, cc, schema.max_lag));
    blocks.push_back(extract_autocorr(seq, AutocorrMode::ACC, acc, schema.max_lag));
    blocks.push_back(extract_pc_pseaac(seq, schema.pc_lambda, schema.weight,
                                       resolve(schema.pc_channels)));
    blocks.push_back(extract_pc_pseaac(seq, schema.pc_general_lambda, schema.weight,
                                       resolve(schema.pc_general_channels)));
    blocks.push_back(extract_sc_pseaac(seq, schema.sc_lambda, schema.weight,
                                       resolve(schema.sc_channels)));
    blocks.push_back(extract_sc_pseaac(seq, schema.sc_general_lambda, schema.weight,
                                       resolve(schema.sc_general_channels)));
  } catch (const DomainError& e) {
    throw ExtractionError(e.what());
  }
  FeatureVector fv;
  fv.schema_id = schema.schema_id();
  fv.values.resize(static_cast<Eigen::Index>(schema.dimension()));
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    fv.values.segment(at, b.size()) = b;
    at += b.size();
  }
  if (at != fv.values.size())
    throw ExtractionError("hybrid layout does not match the schema dimension");
  if (!fv.values.allFinite()) throw ExtractionError("non-finite feature value");
  return fv;
}

FeatureMatrix extract_matrix(const std::vector<data::SequenceRecord>& records,
                             const FeatureSchema& schema, std::size_t workers,
                             std::vector<ExtractionFailure>* failures,
                             IndexList* kept) {
  const std::size_t n = records.size();
  std::vector<VectorXd> rows(n);
  std::vector<std::string> errors(n);
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      rows[i] = extract_hybrid(records[i].residues, schema).values;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  IndexList ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i].empty()) {
      ok.push_back(i);
      continue;
    }
    if (!failures)
      throw ExtractionError(records[i].accession + ": " + errors[i]);
    failures->push_back({i, records[i].accession, errors[i]});
  }
  FeatureMatrix m;
  m.schema_id = schema.schema_id();
  m.column_names = schema.column_names();
  m.rows.resize(static_cast<Eigen::Index>(ok.size()),
                static_cast<Eigen::Index>(schema.dimension()));
  for (std::size_t r = 0; r < ok.size(); ++r)
    m.rows.row(static_cast<Eigen::Index>(r)) = rows[ok[r]].transpose();
  if (kept) *kept = std::move(ok);
  return m;
}

// CSV -----------------------------------------------------------------------------

std::string matrix_to_csv(const FeatureMatrix& matrix) {
  std::string out;
  for (std::size_t c = 0; c < matrix.column_names.size(); ++c) {
    if (c) out += ',';
    out += matrix.column_names[c];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < matrix.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.rows.cols(); ++c) {
      if (c) out += ',';
      out += format_double(matrix.rows(r, c));
    }
    out += '\n';
  }
  return out;
}

FeatureMatrix matrix_from_csv(std::string_view text) {
  FeatureMatrix m;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string_view::npos
                                             ? std::string_view::npos
                                             : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (m.column_names.empty()) {
      for (auto c : cells) m.column_names.emplace_back(c);
      continue;
    }
    if (cells.size() != m.column_names.size())
      throw FormatError("feature CSV row width differs from header", line_no);
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) {
      try {
        row.push_back(parse_double(c));
      } catch (const FormatError& e) {
        throw FormatError(e.what(), line_no);
      }
    }
    rows.push_back(std::move(row));
  }
  m.rows.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(m.column_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

void write_matrix_csv(const std::string& path, const FeatureMatrix& matrix,
                      const FeatureSchema* schema) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << matrix_to_csv(matrix);
  }
  nlohmann::json sidecar = {{"format_version", 1},
                            {"schema_id", matrix.schema_id},
                            {"dimension", matrix.rows.cols()},
                            {"samples", matrix.rows.rows()}};
  if (schema) sidecar["parameters"] = to_json(*schema);
  std::ofstream side(path + ".schema.json", std::ios::binary);
  if (!side) throw Error("cannot write " + path + ".schema.json");
  side << sidecar.dump(2) << '\n';
}

FeatureMatrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  FeatureMatrix m = matrix_from_csv(ss.str());
  std::ifstream side(path + ".schema.json", std::ios::binary);
  if (side) {
    auto j = nlohmann::json::parse(side);
    m.schema_id = j.at("schema_id").get<std::string>();
  }
  return m;
}

}  // namespace locpred::features
