#include "locpred/properties.hpp"

#include "locpred/common.hpp"
#include "locpred/dataset.hpp"

#include <cmath>
#include <map>

namespace locpred::features {

PropertyTable PropertyTable::partition(std::string name,
                                       std::array<std::string, 3> groups) {
  PropertyTable t;
  t.name = std::move(name);
  t.group_index_.fill(-1);
  for (int g = 0; g < 3; ++g) {
    for (char c : groups[g]) {
      int r = data::residue_index(c);
      if (r < 0 || t.group_index_[r] != -1)
        throw DomainError("partition '" + t.name + "' is not a partition of the 20 residues");
      t.group_index_[r] = g;
    }
  }
  for (int idx : t.group_index_) {
    if (idx < 0) throw DomainError("partition '" + t.name + "' misses a residue");
  }
  t.groups = std::move(groups);
  t.has_groups = true;
  return t;
}

PropertyTable PropertyTable::scale(std::string name,
                                   const std::array<double, 20>& raw) {
  PropertyTable t;
  t.name = std::move(name);
  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= 20.0;
  double var = 0.0;
  for (double v : raw) var += (v - mean) * (v - mean);
  var /= 20.0;
  if (!(var > 0.0)) throw DomainError("scale '" + t.name + "' is constant");
  const double sd = std::sqrt(var);
  for (std::size_t i = 0; i < 20; ++i) t.values[i] = (raw[i] - mean) / sd;
  t.has_values = true;
  return t;
}

const std::vector<PropertyTable>& ctd_properties() {
  // Three-group partitions of the composition/transition/distribution
  // descriptor family (polar/neutral/hydrophobic and analogues).
  static const std::vector<PropertyTable> tables = {
      PropertyTable::partition("hydrophobicity", {"RKEDQN", "GASTPHY", "CLVIMFW"}),
      PropertyTable::partition("van der Waals volume", {"GASTPDC", "NVEQIL", "MHKFRYW"}),
      PropertyTable::partition("polarity", {"LIFWCMVY", "PAGST", "HQRKNED"}),
      PropertyTable::partition("polarizability", {"GASDT", "CPNVEQIL", "KMHFRYW"}),
      PropertyTable::partition("charge", {"KR", "ANCQGHILMFPSTWYV", "DE"}),
      PropertyTable::partition("surface tension", {"GQDNAHR", "KTSEC", "ILMFPWYV"}),
      PropertyTable::partition("secondary structure", {"EALMQKRH", "VIYCWFT", "GNPSD"}),
      PropertyTable::partition("solvent accessibility", {"ALFCGIVW", "RKQEND", "MPSTHY"}),
  };
  return tables;
}

namespace {

// Order: A C D E F G H I K L M N P Q R S T V W Y
const std::map<std::string, std::array<double, 20>, std::less<>>& raw_scales() {
  static const std::map<std::string, std::array<double, 20>, std::less<>> scales = {
      {"hydrophobicity",
       {0.62, 0.29, -0.90, -0.74, 1.19, 0.48, -0.40, 1.38, -1.50, 1.06, 0.64,
        -0.78, 0.12, -0.85, -2.53, -0.18, -0.05, 1.08, 0.81, 0.26}},
      {"hydrophilicity",
       {-0.5, -1.0, 3.0, 3.0, -2.5, 0.0, -0.5, -1.8, 3.0, -1.8, -1.3, 0.2, 0.0,
        0.2, 3.0, 0.3, -0.4, -1.5, -3.4, -2.3}},
      {"side-chain mass",
       {15.0, 47.0, 59.0, 73.0, 91.0, 1.0, 82.0, 57.0, 73.0, 57.0, 75.0, 58.0,
        42.0, 72.0, 101.0, 31.0, 45.0, 43.0, 130.0, 107.0}},
  };
  return scales;
}

}  // namespace

const std::array<double, 20>& raw_scale(std::string_view name) {
  auto it = raw_scales().find(name);
  if (it == raw_scales().end())
    throw DomainError("unknown property scale '" + std::string(name) + "'");
  return it->second;
}

const PropertyTable& scale_property(std::string_view name) {
  static const std::map<std::string, PropertyTable, std::less<>> tables = [] {
    std::map<std::string, PropertyTable, std::less<>> t;
    for (const auto& [n, raw] : raw_scales()) t.emplace(n, PropertyTable::scale(n, raw));
    return t;
  }();
  auto it = tables.find(name);
  if (it == tables.end())
    throw DomainError("unknown property scale '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> scale_names() {
  std::vector<std::string> names;
  for (const auto& [n, raw] : raw_scales()) names.push_back(n);
  return names;
}

}  // namespace locpred::features
