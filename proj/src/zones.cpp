#include "migra/zones.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csv.hpp"
#include "migra/error.hpp"
#include "migra/flows.hpp"

namespace migra {

ZoneTable::ZoneTable(std::vector<std::string> feature_names, std::vector<ZoneRecord> rows)
    : feature_names_(std::move(feature_names)) {
  for (std::size_t f = 0; f < feature_names_.size(); ++f) {
    const auto& name = feature_names_[f];
    if (name.empty() || name == kPopulationColumn || name == kZoneCountColumn || name == "zone_id" ||
        name == "lat" || name == "lon")
      throw Error(Errc::InvalidConfig, "reserved or empty feature name '" + name + "'");
    if (std::find(feature_names_.begin(), feature_names_.begin() + f, name) != feature_names_.begin() + f)
      throw Error(Errc::InvalidConfig, "duplicate feature name '" + name + "'");
  }

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a].id < rows[b].id; });

  ids_.reserve(rows.size());
  centroids_.reserve(rows.size());
  population_.reserve(rows.size());
  features_.assign(feature_names_.size(), {});
  for (std::size_t idx : order) {
    ZoneRecord& r = rows[idx];
    if (r.id.empty()) throw Error(Errc::InvalidConfig, "empty zone id");
    if (!ids_.empty() && ids_.back() == r.id) throw Error(Errc::InvalidConfig, "duplicate zone id '" + r.id + "'");
    if (!(r.population >= 0.0) || !std::isfinite(r.population))
      throw Error(Errc::InvalidConfig, "zone '" + r.id + "' has invalid population");
    if (r.features.size() != feature_names_.size())
      throw Error(Errc::InvalidConfig, "zone '" + r.id + "' has the wrong number of features");
    index_.emplace(r.id, ids_.size());
    ids_.push_back(std::move(r.id));
    centroids_.push_back(r.centroid);
    population_.push_back(r.population);
    for (std::size_t f = 0; f < feature_names_.size(); ++f) features_[f].push_back(r.features[f]);
  }
  ones_.assign(ids_.size(), 1.0);
}

std::vector<std::string> ZoneTable::column_names() const {
  std::vector<std::string> out{std::string(kPopulationColumn)};
  out.insert(out.end(), feature_names_.begin(), feature_names_.end());
  return out;
}

bool ZoneTable::has_column(std::string_view name) const {
  return name == kPopulationColumn || name == kZoneCountColumn ||
         std::find(feature_names_.begin(), feature_names_.end(), name) != feature_names_.end();
}

std::span<const double> ZoneTable::column(std::string_view name) const {
  if (name == kPopulationColumn) return population_;
  if (name == kZoneCountColumn) return ones_;
  auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
  if (it == feature_names_.end()) throw Error(Errc::UnknownFeature, "no zone column '" + std::string(name) + "'");
  return features_[static_cast<std::size_t>(it - feature_names_.begin())];
}

std::optional<std::size_t> ZoneTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ZoneTable::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw Error(Errc::UnknownZone, "unknown zone '" + std::string(id) + "'");
}

bool ZoneTable::same_universe(const ZoneTable& other) const noexcept {
  return this == &other || ids_ == other.ids_;
}

ZoneTablePtr parse_zones(std::string_view text) {
  std::vector<std::string> header;
  std::vector<ZoneRecord> rows;
  csv::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    auto fields = csv::split(line, line_no);
    if (header.empty()) {
      header = std::move(fields);
      if (header.size() < 4 || header[0] != "zone_id" || header[1] != "lat" || header[2] != "lon" ||
          header[3] != "population")
        throw Error(Errc::ParseError, "line " + std::to_string(line_no) +
                                          ": header must start with zone_id,lat,lon,population");
      return;
    }
    if (fields.size() != header.size())
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
    const double lat = csv::parse_double(fields[1], line_no, "lat");
    const double lon = csv::parse_double(fields[2], line_no, "lon");
    std::optional<Centroid> c;
    try {
      c.emplace(lat, lon);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    ZoneRecord r{fields[0], *c, csv::parse_double(fields[3], line_no, "population"), {}};
    if (!(r.population >= 0.0))
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": negative population");
    for (std::size_t f = 4; f < fields.size(); ++f) r.features.push_back(csv::parse_double(fields[f], line_no, header[f]));
    rows.push_back(std::move(r));
  });
  if (header.empty()) throw Error(Errc::ParseError, "zone file is empty");
  return std::make_shared<const ZoneTable>(std::vector<std::string>(header.begin() + 4, header.end()), std::move(rows));
}

ZoneTablePtr load_zones(const std::filesystem::path& path) { return parse_zones(read_text_file(path)); }

std::string zones_to_csv(const ZoneTable& zones) {
  std::string out = "zone_id,lat,lon,population";
  for (const auto& f : zones.feature_names()) out += "," + f;
  out += "\n";
  for (std::size_t i = 0; i < zones.size(); ++i) {
    out += csv::quote(zones.id(i)) + "," + csv::format_double(zones.centroid(i).lat()) + "," +
           csv::format_double(zones.centroid(i).lon()) + "," + csv::format_double(zones.population(i));
    for (const auto& f : zones.feature_names()) out += "," + csv::format_double(zones.column(f)[i]);
    out += "\n";
  }
  return out;
}

void save_zones(const ZoneTable& zones, const std::filesystem::path& path) { write_text_file(path, zones_to_csv(zones)); }

}  // namespace migra
