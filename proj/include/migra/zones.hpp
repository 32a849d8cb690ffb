#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "migra/geo.hpp"

namespace migra {

/// Name of the built-in column that is 1 for every zone. Summed over the
/// intervening zones it yields the number of intervening zones.
inline constexpr std::string_view kZoneCountColumn = "zone_count";
inline constexpr std::string_view kPopulationColumn = "population";

struct ZoneRecord {
  std::string id;
  Centroid centroid;
  double population = 0.0;
  std::vector<double> features;  // aligned with the table's feature names
};

/// Immutable per-zone table. Rows are kept sorted by zone id so that zone
/// indices are canonical across files and runs.
class ZoneTable {
 public:
  ZoneTable(std::vector<std::string> feature_names, std::vector<ZoneRecord> rows);

  std::size_t size() const noexcept { return ids_.size(); }

  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Centroid& centroid(std::size_t i) const { return centroids_[i]; }
  double population(std::size_t i) const { return population_[i]; }
  std::span<const double> population() const noexcept { return population_; }

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

  /// population followed by the named features (the built-in zone_count
  /// column is resolvable but not listed).
  std::vector<std::string> column_names() const;
  bool has_column(std::string_view name) const;
  /// Throws Errc::UnknownFeature.
  std::span<const double> column(std::string_view name) const;

  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws Errc::UnknownZone.
  std::size_t index_of(std::string_view id) const;

  bool same_universe(const ZoneTable& other) const noexcept;

 private:
  std::vector<std::string> ids_;
  std::vector<Centroid> centroids_;
  std::vector<double> population_;
  std::vector<double> ones_;
  std::vector<std::string> feature_names_;
  std::vector<std::vector<double>> features_;  // column-major
  std::unordered_map<std::string, std::size_t> index_;
};

using ZoneTablePtr = std::shared_ptr<const ZoneTable>;

/// CSV with header `zone_id,lat,lon,population[,feature...]`.
ZoneTablePtr load_zones(const std::filesystem::path& path);
ZoneTablePtr parse_zones(std::string_view csv_text);
std::string zones_to_csv(const ZoneTable& zones);
void save_zones(const ZoneTable& zones, const std::filesystem::path& path);

}  // namespace migra
