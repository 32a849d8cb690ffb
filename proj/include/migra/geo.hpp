#pragma once

namespace migra {

/// Mean Earth radius (IUGG), kilometers.
inline constexpr double kEarthRadiusKm = 6371.0088;

/// Zone centroid in degrees. lat in [-90, 90], lon in [-180, 180).
/// Construction rejects out-of-range values; wrapping longitudes is the
/// ingester's responsibility.
class Centroid {
 public:
  Centroid(double lat, double lon);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const Centroid&, const Centroid&) = default;

 private:
  double lat_;
  double lon_;
};

/// Haversine great-circle distance on a sphere of radius kEarthRadiusKm.
double distance_km(const Centroid& a, const Centroid& b) noexcept;

}  // namespace migra
