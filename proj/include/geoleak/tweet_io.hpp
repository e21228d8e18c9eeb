#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoleak/error.hpp"
#include "geoleak/tweet.hpp"

namespace geoleak {

enum class TweetFormat { kCsv, kJsonl };

inline TweetFormat tweet_format_from_name(const std::string& name) {
  if (name == "csv") return TweetFormat::kCsv;
  if (name == "jsonl") return TweetFormat::kJsonl;
  throw errors::invalid_parameter("unknown tweet format '" + name +
                                  "' (expected csv or jsonl)");
}

inline TweetFormat tweet_format_from_path(const std::string& path) {
  if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl")
    return TweetFormat::kJsonl;
  return TweetFormat::kCsv;
}

namespace timeutil {

// Civil-date conversions (Gregorian, proleptic). Days relative to 1970-01-01.
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

// "YYYY-MM-DDTHH:MM:SSZ", UTC only.
inline std::int64_t parse_iso8601_utc(const std::string& s) {
  int y, mo, d, h, mi, se;
  char t, z;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%c", &y, &mo, &d, &t, &h,
                  &mi, &se, &z) != 8 ||
      t != 'T' || z != 'Z') {
    throw errors::invalid_input("bad ISO-8601 UTC timestamp: '" + s + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || se < 0 || se > 60) {
    throw errors::invalid_input("timestamp fields out of range: '" + s + "'");
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
}

inline std::string format_iso8601_utc(std::int64_t ts) {
  std::int64_t days = ts / 86400;
  std::int64_t rem = ts % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace timeutil

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

struct IngestResult {
  std::vector<TweetRecord> records;
  std::size_t total_rows = 0;
  std::size_t malformed = 0;
  std::vector<std::string> offenders;  // first few malformed rows, annotated
};

namespace detail {

inline bool parse_double_field(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

inline bool parse_tweet_csv_row(const std::string& line, TweetRecord& rec,
                                std::string& why) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  if (fields.size() != 4) {
    why = "expected 4 fields, got " + std::to_string(fields.size());
    return false;
  }
  long user = -1;
  {
    auto [p, ec] = std::from_chars(fields[0].data(),
                                   fields[0].data() + fields[0].size(), user);
    if (ec != std::errc() || p != fields[0].data() + fields[0].size() || user < 0) {
      why = "bad user id '" + fields[0] + "'";
      return false;
    }
  }
  std::int64_t ts;
  try {
    ts = timeutil::parse_iso8601_utc(fields[1]);
  } catch (const Error& e) {
    why = e.what();
    return false;
  }
  const bool lat_empty = fields[2].empty();
  const bool lon_empty = fields[3].empty();
  if (lat_empty != lon_empty) {
    why = "lat/lon must both be present or both empty";
    return false;
  }
  if (lat_empty) {
    rec = TweetRecord::plain(static_cast<int>(user), ts);
    return true;
  }
  double lat, lon;
  if (!parse_double_field(fields[2], lat) || !parse_double_field(fields[3], lon)) {
    why = "unparseable coordinates";
    return false;
  }
  if (!valid_lat(lat) || !valid_lon(lon)) {
    why = "coordinates out of range";
    return false;
  }
  rec = TweetRecord::geotagged(static_cast<int>(user), ts, lat, lon);
  return true;
}

inline bool parse_tweet_jsonl_row(const std::string& line, TweetRecord& rec,
                                  std::string& why) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    why = "unparseable JSON object";
    return false;
  }
  if (!j.contains("user_id") || !j.contains("timestamp_iso8601") ||
      !j.contains("lat") || !j.contains("lon")) {
    why = "missing required field";
    return false;
  }
  if (!j["user_id"].is_number_integer() || j["user_id"].get<long>() < 0) {
    why = "bad user id";
    return false;
  }
  const int user = j["user_id"].get<int>();
  std::int64_t ts;
  try {
    ts = timeutil::parse_iso8601_utc(j["timestamp_iso8601"].get<std::string>());
  } catch (const std::exception& e) {
    why = e.what();
    return false;
  }
  const bool lat_null = j["lat"].is_null();
  const bool lon_null = j["lon"].is_null();
  if (lat_null != lon_null) {
    why = "lat/lon must both be null or both set";
    return false;
  }
  if (lat_null) {
    rec = TweetRecord::plain(user, ts);
    return true;
  }
  if (!j["lat"].is_number() || !j["lon"].is_number()) {
    why = "coordinates must be numbers";
    return false;
  }
  const double lat = j["lat"].get<double>();
  const double lon = j["lon"].get<double>();
  if (!valid_lat(lat) || !valid_lon(lon)) {
    why = "coordinates out of range";
    return false;
  }
  rec = TweetRecord::geotagged(user, ts, lat, lon);
  return true;
}

}  // namespace detail

// Reads a tweet file. Malformed rows are counted and skipped; more than 1%
// of them aborts the ingestion with the first offenders in the message.
inline IngestResult ingest(const std::string& path, TweetFormat format) {
  std::ifstream in(path);
  if (!in) throw errors::io("cannot open tweet file: " + path);
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++result.total_rows;
    TweetRecord rec;
    std::string why;
    const bool ok = format == TweetFormat::kCsv
                        ? detail::parse_tweet_csv_row(line, rec, why)
                        : detail::parse_tweet_jsonl_row(line, rec, why);
    if (ok) {
      result.records.push_back(rec);
    } else {
      ++result.malformed;
      if (result.offenders.size() < 10) {
        result.offenders.push_back("line " + std::to_string(line_no) + ": " +
                                   why + " ('" + line + "')");
      }
    }
  }
  if (result.total_rows > 0 &&
      static_cast<double>(result.malformed) > 0.01 * static_cast<double>(result.total_rows)) {
    std::string msg = std::to_string(result.malformed) + "/" +
                      std::to_string(result.total_rows) +
                      " malformed rows in " + path;
    for (const auto& o : result.offenders) msg += "\n  " + o;
    throw errors::ingest(msg);
  }
  return result;
}

inline void write_tweets(const std::vector<TweetRecord>& tweets,
                         const std::string& path, TweetFormat format) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write tweet file: " + path);
  for (const auto& t : tweets) {
    if (format == TweetFormat::kCsv) {
      out << t.user_id << ',' << timeutil::format_iso8601_utc(t.timestamp) << ',';
      if (t.has_geotag) out << format_double(t.lat) << ',' << format_double(t.lon);
      else out << ',';
      out << '\n';
    } else {
      nlohmann::json j;
      j["user_id"] = t.user_id;
      j["timestamp_iso8601"] = timeutil::format_iso8601_utc(t.timestamp);
      if (t.has_geotag) {
        j["lat"] = t.lat;
        j["lon"] = t.lon;
      } else {
        j["lat"] = nullptr;
        j["lon"] = nullptr;
      }
      out << j.dump() << '\n';
    }
  }
  if (!out) throw errors::io("write failed: " + path);
}

}  // namespace geoleak
