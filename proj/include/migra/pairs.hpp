#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "migra/zones.hpp"

namespace migra {

struct InterveningQuery {
  std::string variable;
  std::string origin;
  std::string destination;
};

/// Sum of `variable` over every zone k outside {origin, destination} whose
/// centroid is strictly closer to the origin than the destination is.
/// Brute-force scan of the table; errors: UnknownZone, UnknownFeature.
double intervening_sum(const ZoneTable& zones, const InterveningQuery& q);

/// Joint features for every ordered pair (i, j), i != j: the distance and
/// one intervening sum per requested zone variable. Pairs are stored in
/// row-major order (origin index, then destination index, skipping i == j).
class PairFeatureSet {
 public:
  PairFeatureSet(ZoneTablePtr zones, std::vector<std::string> variables, std::vector<double> distance,
                 std::vector<std::vector<double>> intervening);

  static std::size_t index(std::size_t i, std::size_t j, std::size_t n) noexcept {
    return i * (n - 1) + (j < i ? j : j - 1);
  }

  const ZoneTable& zones() const noexcept { return *zones_; }
  const ZoneTablePtr& zones_ptr() const noexcept { return zones_; }
  std::size_t zone_count() const noexcept { return zones_->size(); }
  std::size_t pair_count() const noexcept { return distance_.size(); }

  const std::vector<std::string>& variables() const noexcept { return variables_; }
  bool has_variable(std::string_view name) const noexcept;

  double distance(std::size_t i, std::size_t j) const { return distance_[index(i, j, zone_count())]; }
  double intervening(std::size_t variable, std::size_t i, std::size_t j) const {
    return intervening_[variable][index(i, j, zone_count())];
  }
  /// Throws Errc::UnknownFeature.
  std::size_t variable_index(std::string_view name) const;

  /// "distance" followed by "intervening_<variable>" for each variable.
  std::vector<std::string> column_names() const;
  /// Throws Errc::UnknownFeature.
  std::span<const double> column(std::string_view name) const;

 private:
  ZoneTablePtr zones_;
  std::vector<std::string> variables_;
  std::vector<double> distance_;
  std::vector<std::vector<double>> intervening_;
};

/// Column name used for the intervening aggregate of a zone variable.
std::string intervening_column(std::string_view variable);

/// OpenMP kernel: per origin, sorts all other zones by distance once and
/// answers every destination from prefix sums. Output is independent of
/// thread count. Errors: UnknownFeature.
PairFeatureSet pair_features(const ZoneTablePtr& zones, const std::vector<std::string>& variables);

}  // namespace migra
