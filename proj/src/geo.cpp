#include "migra/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "migra/error.hpp"

namespace migra {

Centroid::Centroid(double lat, double lon) : lat_(lat), lon_(lon) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon < 180.0))
    throw Error(Errc::InvalidCentroid, "centroid out of range: lat=" + std::to_string(lat) +
                                           " lon=" + std::to_string(lon));
}

double distance_km(const Centroid& a, const Centroid& b) noexcept {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double lat1 = a.lat() * kRad;
  const double lat2 = b.lat() * kRad;
  const double sdlat = std::sin(0.5 * (lat2 - lat1));
  const double sdlon = std::sin(0.5 * (b.lon() - a.lon()) * kRad);
  const double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

}  // namespace migra
