#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoleak/error.hpp"
#include "geoleak/geo.hpp"
#include "geoleak/graph.hpp"
#include "geoleak/pipeline.hpp"
#include "geoleak/tweet_io.hpp"

namespace geoleak {

struct CategoryThresholds {
  double high_km = 1.0;  // highly predictable: error <= high_km
  double poor_km = 7.0;  // poorly predictable: error > poor_km
};

struct CategoryCounts {
  std::size_t highly = 0;
  std::size_t average = 0;
  std::size_t poorly = 0;

  std::size_t total() const { return highly + average + poorly; }
};

inline CategoryCounts categorize(const std::vector<double>& errors_km,
                                 const CategoryThresholds& t = {}) {
  CategoryCounts c;
  for (double e : errors_km) {
    if (e <= t.high_km) ++c.highly;
    else if (e > t.poor_km) ++c.poorly;
    else ++c.average;
  }
  return c;
}

struct ErrorEntry {
  int terminal_slot = 0;
  int user_id = 0;
  double km = 0.0;
};

struct PerUserRow {
  int user_id = 0;
  double std_lat_deg = 0.0;
  double std_lon_deg = 0.0;
  double mean_error_km = 0.0;
  int n_predictions = 0;
  bool below_threshold = false;
};

struct EvalReport {
  double p = 0.0;
  std::vector<ErrorEntry> entries;       // one per TEST (slot, user)
  std::vector<double> percentiles;       // index q-1 holds the q-th percentile
  double mean_km = 0.0;
  double pct_below_1km = 0.0;
  CategoryCounts categories;
  std::vector<PerUserRow> per_user;
  double split_threshold_km = 0.0;
  double fraction_users_below = 0.0;

  std::size_t n_test_entries() const { return entries.size(); }
};

// Nearest-rank percentile on ascending errors: the q-th percentile is the
// ceil(q*n/100)-th smallest value.
inline std::vector<double> percentile_curve(std::vector<double> errors) {
  std::sort(errors.begin(), errors.end());
  const std::size_t n = errors.size();
  std::vector<double> curve(100, 0.0);
  for (int q = 1; q <= 100; ++q) {
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(static_cast<double>(q) * static_cast<double>(n) / 100.0));
    rank = std::max<std::size_t>(1, std::min(rank, n));
    curve[q - 1] = errors[rank - 1];
  }
  return curve;
}

// Per-user mobility rows: standard deviation of the user's ground-truth
// geo-tag coordinates over the whole period (degrees, per axis; users with
// fewer than two geo-tags get 0), mean test error, and a below/above flag.
inline void mobility_scatter(EvalReport& report, const SnapshotSequence& seq,
                             double split_threshold_km) {
  report.split_threshold_km = split_threshold_km;
  std::map<int, std::pair<double, int>> per_user_error;
  for (const auto& e : report.entries) {
    auto& [sum, n] = per_user_error[e.user_id];
    sum += e.km;
    ++n;
  }
  report.per_user.clear();
  std::size_t below = 0;
  for (const auto& [user, acc] : per_user_error) {
    PerUserRow row;
    row.user_id = user;
    row.n_predictions = acc.second;
    row.mean_error_km = acc.first / acc.second;
    const auto obs = seq.user_observations(user);
    if (obs.size() >= 2) {
      double lat_lo = obs[0].lat, lat_hi = obs[0].lat;
      double lon_lo = obs[0].lon, lon_hi = obs[0].lon;
      double mlat = 0, mlon = 0;
      for (const auto& o : obs) {
        mlat += o.lat;
        mlon += o.lon;
        lat_lo = std::min(lat_lo, o.lat);
        lat_hi = std::max(lat_hi, o.lat);
        lon_lo = std::min(lon_lo, o.lon);
        lon_hi = std::max(lon_hi, o.lon);
      }
      mlat /= static_cast<double>(obs.size());
      mlon /= static_cast<double>(obs.size());
      double vlat = 0, vlon = 0;
      for (const auto& o : obs) {
        vlat += (o.lat - mlat) * (o.lat - mlat);
        vlon += (o.lon - mlon) * (o.lon - mlon);
      }
      // a user pinned to one point has exactly zero spread
      row.std_lat_deg =
          lat_lo == lat_hi ? 0.0 : std::sqrt(vlat / static_cast<double>(obs.size()));
      row.std_lon_deg =
          lon_lo == lon_hi ? 0.0 : std::sqrt(vlon / static_cast<double>(obs.size()));
    }
    row.below_threshold = row.mean_error_km <= split_threshold_km;
    if (row.below_threshold) ++below;
    report.per_user.push_back(row);
  }
  report.fraction_users_below =
      report.per_user.empty()
          ? 0.0
          : static_cast<double>(below) / static_cast<double>(report.per_user.size());
}

// Scores normalized per-example predictions against the ground truth on
// TEST-assigned entries only.
inline EvalReport evaluate(const std::vector<Example>& examples,
                           const std::vector<Eigen::MatrixXd>& predictions,
                           const NormalizationBounds& norm,
                           const SnapshotSequence& seq, double p,
                           const CategoryThresholds& thresholds = {}) {
  if (predictions.size() != examples.size())
    throw errors::invalid_input("evaluate: one prediction matrix per example");
  EvalReport report;
  report.p = p;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    for (int u : ex.users_with(SplitLabel::kTest)) {
      const LatLon pred = norm.denorm(predictions[i](u, 0), predictions[i](u, 1));
      const LatLon truth{ex.target.raw_degrees(u, 0), ex.target.raw_degrees(u, 1)};
      report.entries.push_back(
          ErrorEntry{ex.terminal_slot, u, haversine_km(pred, truth)});
    }
  }
  if (report.entries.empty())
    throw errors::empty_test_set("evaluate: no TEST-assigned entries");

  std::vector<double> errors;
  errors.reserve(report.entries.size());
  double sum = 0.0;
  std::size_t below_1km = 0;
  for (const auto& e : report.entries) {
    errors.push_back(e.km);
    sum += e.km;
    if (e.km < 1.0) ++below_1km;
  }
  report.mean_km = sum / static_cast<double>(errors.size());
  report.pct_below_1km =
      100.0 * static_cast<double>(below_1km) / static_cast<double>(errors.size());
  report.percentiles = percentile_curve(errors);
  report.categories = categorize(errors, thresholds);
  mobility_scatter(report, seq, report.mean_km);
  return report;
}

// Non-learned baseline: each user's most recent visible geo-tag, i.e. the
// lat/lon feature at the terminal slot; users with no history fall back to
// the training centroid.
inline std::vector<Eigen::MatrixXd> baseline_last_known(
    const std::vector<Example>& examples, const Eigen::Vector2d& train_centroid) {
  std::vector<Eigen::MatrixXd> preds;
  preds.reserve(examples.size());
  for (const auto& ex : examples) {
    const int last = ex.features.n_ts - 1;
    const auto& step = ex.features.steps[last];
    Eigen::MatrixXd p(ex.features.n_users, kTargetDim);
    for (int u = 0; u < ex.features.n_users; ++u) {
      if (ex.features.masked(last, u)) {
        p(u, 0) = step(u, 0);
        p(u, 1) = step(u, 1);
      } else {
        p.row(u) = train_centroid.transpose();
      }
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

// Non-learned baseline: unweighted centroid of the friends' current-slot
// imputed locations; users with no observed friends fall back to last-known.
inline std::vector<Eigen::MatrixXd> baseline_friend_centroid(
    const std::vector<Example>& examples, const SocialGraph& graph,
    const Eigen::Vector2d& train_centroid) {
  std::vector<Eigen::MatrixXd> preds =
      baseline_last_known(examples, train_centroid);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const int last = ex.features.n_ts - 1;
    const auto& step = ex.features.steps[last];
    for (int u = 0; u < ex.features.n_users; ++u) {
      double lat = 0, lon = 0;
      int n = 0;
      for (int v : graph.neighbors(u)) {
        if (!ex.features.masked(last, v)) continue;
        lat += step(v, 0);
        lon += step(v, 1);
        ++n;
      }
      if (n > 0) {
        preds[i](u, 0) = lat / n;
        preds[i](u, 1) = lon / n;
      }
    }
  }
  return preds;
}

// ---- report serialization ----------------------------------------------

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["p"] = r.p;
  j["n_test_entries"] = r.n_test_entries();
  j["mean_km"] = r.mean_km;
  j["pct_below_1km"] = r.pct_below_1km;
  j["split_threshold_km"] = r.split_threshold_km;
  j["fraction_users_below"] = r.fraction_users_below;
  j["categories"] = {{"highly", r.categories.highly},
                     {"average", r.categories.average},
                     {"poorly", r.categories.poorly}};
  auto& percentiles = j["percentiles"] = nlohmann::json::array();
  for (int q = 1; q <= 100; ++q)
    percentiles.push_back({{"percentile", q}, {"km", r.percentiles[q - 1]}});
  auto& per_user = j["per_user"] = nlohmann::json::array();
  for (const auto& row : r.per_user) {
    per_user.push_back({{"user_id", row.user_id},
                        {"std_lat", row.std_lat_deg},
                        {"std_lon", row.std_lon_deg},
                        {"mean_error_km", row.mean_error_km},
                        {"n_predictions", row.n_predictions},
                        {"flag", row.below_threshold ? "below" : "above"}});
  }
  auto& entries = j["errors"] = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back(
        {{"slot", e.terminal_slot}, {"user_id", e.user_id}, {"km", e.km}});
  }
  return j;
}

inline void write_report_json(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write report: " + path);
  out << report_to_json(r).dump(2) << "\n";
  if (!out) throw errors::io("write failed: " + path);
}

inline void write_percentiles_csv(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write percentiles: " + path);
  out << "percentile,km\n";
  for (int q = 1; q <= 100; ++q)
    out << q << ',' << format_double(r.percentiles[q - 1]) << '\n';
  if (!out) throw errors::io("write failed: " + path);
}

inline void write_mobility_csv(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write mobility: " + path);
  out << "user_id,std_lat,std_lon,mean_error_km,flag\n";
  for (const auto& row : r.per_user) {
    out << row.user_id << ',' << format_double(row.std_lat_deg) << ','
        << format_double(row.std_lon_deg) << ','
        << format_double(row.mean_error_km) << ','
        << (row.below_threshold ? "below" : "above") << '\n';
  }
  if (!out) throw errors::io("write failed: " + path);
}

struct SweepRow {
  double p = 0.0;
  std::uint64_t seed = 0;
  double mean_km = 0.0;
  double pct_below_1km = 0.0;
};

inline void write_sweep_csv(const std::vector<SweepRow>& rows,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write sweep: " + path);
  out << "p,seed,mean_km,pct_below_1km\n";
  for (const auto& r : rows) {
    out << format_double(r.p) << ',' << r.seed << ','
        << format_double(r.mean_km) << ',' << format_double(r.pct_below_1km)
        << '\n';
  }
  if (!out) throw errors::io("write failed: " + path);
}

inline std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw errors::io("cannot read sweep: " + path);
  std::vector<SweepRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("p,", 0) == 0) continue;
    }
    SweepRow r;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 4) throw errors::io("bad sweep row: '" + line + "'");
    r.p = std::stod(fields[0]);
    r.seed = std::stoull(fields[1]);
    r.mean_km = std::stod(fields[2]);
    r.pct_below_1km = std::stod(fields[3]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace geoleak
