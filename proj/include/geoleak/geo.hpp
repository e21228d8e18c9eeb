#pragma once

#include <cmath>
#include <string>

#include "geoleak/error.hpp"

namespace geoleak {

inline constexpr double kEarthRadiusKm = 6371.0088;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

inline bool valid_lat(double lat) { return lat >= -90.0 && lat <= 90.0; }
inline bool valid_lon(double lon) { return lon >= -180.0 && lon <= 180.0; }

inline double deg2rad(double deg) { return deg * M_PI / 180.0; }

// Great-circle distance on a sphere of radius kEarthRadiusKm.
inline double haversine_km(const LatLon& a, const LatLon& b) {
  if (!valid_lat(a.lat) || !valid_lat(b.lat) || !valid_lon(a.lon) ||
      !valid_lon(b.lon)) {
    throw errors::invalid_input("haversine_km: coordinates out of range");
  }
  const double lat1 = deg2rad(a.lat);
  const double lat2 = deg2rad(b.lat);
  const double dlat = deg2rad(b.lat - a.lat);
  const double dlon = deg2rad(b.lon - a.lon);
  const double sl = std::sin(dlat / 2.0);
  const double so = std::sin(dlon / 2.0);
  double h = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
  if (h > 1.0) h = 1.0;
  if (h < 0.0) h = 0.0;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  return haversine_km(LatLon{lat1, lon1}, LatLon{lat2, lon2});
}

// Equirectangular approximation anchored at a reference point. Good to a
// fraction of a percent at the ~100 km scale the generator works on.
class LocalProjection {
 public:
  explicit LocalProjection(LatLon center)
      : center_(center),
        km_per_deg_lat_(M_PI * kEarthRadiusKm / 180.0),
        km_per_deg_lon_(std::cos(deg2rad(center.lat)) * M_PI * kEarthRadiusKm /
                        180.0) {}

  // (east_km, north_km) offset -> absolute coordinates.
  LatLon offset(double east_km, double north_km) const {
    return LatLon{center_.lat + north_km / km_per_deg_lat_,
                  center_.lon + east_km / km_per_deg_lon_};
  }

  double distance_km(const LatLon& p) const {
    const double north = (p.lat - center_.lat) * km_per_deg_lat_;
    const double east = (p.lon - center_.lon) * km_per_deg_lon_;
    return std::sqrt(north * north + east * east);
  }

  double km_per_deg_lat() const { return km_per_deg_lat_; }
  double km_per_deg_lon() const { return km_per_deg_lon_; }
  const LatLon& center() const { return center_; }

 private:
  LatLon center_;
  double km_per_deg_lat_;
  double km_per_deg_lon_;
};

}  // namespace geoleak
