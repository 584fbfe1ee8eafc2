#ifndef LOCPRED_PROPERTIES_HPP
#define LOCPRED_PROPERTIES_HPP

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace locpred::features {

/// Physicochemical property over the 20 amino acids. `groups` is the
/// three-class partition used by CTD encodings; `values` is a numeric scale
/// standardized to mean 0 and unit (population) variance over the 20 letters.
/// A table may carry either or both.
struct PropertyTable {
  std::string name;
  std::array<std::string, 3> groups;
  std::array<double, 20> values{};
  bool has_groups = false;
  bool has_values = false;

  /// Group (0..2) of a residue index; requires has_groups.
  int group_of(int residue) const { return group_index_[residue]; }

  /// Builds a partition table. Throws DomainError unless the groups cover
  /// every canonical residue exactly once.
  static PropertyTable partition(std::string name, std::array<std::string, 3> groups);
  /// Builds a scale table from raw per-residue values in kAminoAcids order;
  /// the values are standardized on construction.
  static PropertyTable scale(std::string name, const std::array<double, 20>& raw);

 private:
  std::array<int, 20> group_index_{};
};

inline constexpr std::string_view kCtdTableVersion = "ctd-partitions-v1";
inline constexpr std::string_view kScaleTableVersion = "scales-v1";

/// The eight CTD partitions in feature order: hydrophobicity, normalized van
/// der Waals volume, polarity, polarizability, charge, surface tension,
/// secondary structure, solvent accessibility.
const std::vector<PropertyTable>& ctd_properties();

/// Named numeric scales: "hydrophobicity", "hydrophilicity", "side-chain mass".
const PropertyTable& scale_property(std::string_view name);
std::vector<std::string> scale_names();

/// Raw (unstandardized) values behind a scale, for tests and provenance.
const std::array<double, 20>& raw_scale(std::string_view name);

}  // namespace locpred::features

#endif  // LOCPRED_PROPERTIES_HPP
