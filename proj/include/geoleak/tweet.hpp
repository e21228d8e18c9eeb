#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "geoleak/geo.hpp"

namespace geoleak {

struct TweetRecord {
  int user_id = 0;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  double lat = std::numeric_limits<double>::quiet_NaN();
  double lon = std::numeric_limits<double>::quiet_NaN();
  bool has_geotag = false;

  static TweetRecord geotagged(int user, std::int64_t ts, double lat, double lon) {
    return TweetRecord{user, ts, lat, lon, true};
  }
  static TweetRecord plain(int user, std::int64_t ts) {
    return TweetRecord{user, ts,
                       std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN(), false};
  }

  LatLon location() const { return LatLon{lat, lon}; }
};

}  // namespace geoleak
