#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "geoleak/error.hpp"
#include "geoleak/geo.hpp"
#include "geoleak/graph.hpp"
#include "geoleak/pipeline.hpp"
#include "geoleak/rng.hpp"
#include "geoleak/tweet.hpp"

namespace geoleak {

struct BBox {
  double center_lat = 40.7128;   // NYC
  double center_lon = -74.0060;
  double radius_km = 100.0;
};

struct SynthConfig {
  int n_users = 200;
  int mean_degree = 10;
  double rewiring_prob = 0.1;
  BBox bbox;
  int n_slots = 248;  // 31 days of 3-hour slots
  std::int64_t slot_duration_s = kDefaultSlotSeconds;
  std::int64_t t_start = 1262304000;  // 2010-01-01T00:00:00Z
  double tweets_per_user_per_slot_rate = 1.0;
  double fraction_stationary = 0.6;
  double co_location_prob = 0.5;
  double geotag_prob = 1.0;
  std::uint64_t seed = 1;

  // Spatial texture of the mobility models. Homes follow the ring order of
  // the lattice so that friends live near each other; mobile users get
  // extra anchors scattered around home.
  double home_ring_radius_km = 55.0;
  double home_jitter_km = 2.0;
  double anchor_spread_km = 8.0;
  double stationary_wander_km = 0.3;
  double mobile_wander_km = 3.0;

  void validate() const {
    if (n_users < 1) throw errors::invalid_parameter("n_users must be >= 1");
    if (mean_degree < 0 || mean_degree % 2 != 0)
      throw errors::invalid_parameter("mean_degree must be even and >= 0");
    if (mean_degree >= n_users)
      throw errors::invalid_parameter("mean_degree must be < n_users");
    if (rewiring_prob < 0.0 || rewiring_prob > 1.0)
      throw errors::invalid_parameter("rewiring_prob must be in [0,1]");
    if (bbox.radius_km <= 0.0)
      throw errors::invalid_parameter("bbox radius must be positive");
    if (n_slots < 1) throw errors::invalid_parameter("n_slots must be >= 1");
    if (slot_duration_s <= 0)
      throw errors::invalid_parameter("slot duration must be positive");
    if (tweets_per_user_per_slot_rate < 0.0)
      throw errors::invalid_parameter("tweet rate must be >= 0");
    if (fraction_stationary < 0.0 || fraction_stationary > 1.0 ||
        co_location_prob < 0.0 || co_location_prob > 1.0 ||
        geotag_prob < 0.0 || geotag_prob > 1.0)
      throw errors::invalid_parameter("probabilities must be in [0,1]");
  }
};

enum class MobilityKind { kStationary, kMobile };

struct MobilityModel {
  MobilityKind kind = MobilityKind::kStationary;
  LatLon home;
  std::vector<LatLon> anchors;  // home plus 1-4 extra places when mobile
  double wander_std_km = 0.3;
};

// Watts-Strogatz small world: ring lattice with mean_degree neighbors,
// each edge rewired with rewiring_prob. Emitted as mutual follow pairs.
inline SocialGraph generate_graph(const SynthConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_users;
  const int half = cfg.mean_degree / 2;

  std::unordered_set<std::uint64_t> edge_set;
  std::vector<std::pair<int, int>> edges;
  auto key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return detail::edge_key(a, b);
  };
  auto has_edge = [&](int a, int b) { return edge_set.count(key(a, b)) > 0; };
  auto add_edge = [&](int a, int b) {
    edge_set.insert(key(a, b));
    edges.emplace_back(std::min(a, b), std::max(a, b));
  };

  for (int i = 0; i < n; ++i)
    for (int j = 1; j <= half; ++j) add_edge(i, (i + j) % n);

  auto stream = rng::Stream::of(cfg.seed, rng::kGraphRewire);
  std::size_t edge_index = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j <= half; ++j, ++edge_index) {
      if (stream.uniform01() >= cfg.rewiring_prob) continue;
      const int old_target = (i + j) % n;
      int candidate = -1;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const int t = static_cast<int>(stream.uniform_int(n));
        if (t != i && !has_edge(i, t)) {
          candidate = t;
          break;
        }
      }
      if (candidate < 0) continue;  // dense neighborhood; keep the edge
      edge_set.erase(key(i, old_target));
      edge_set.insert(key(i, candidate));
      edges[edge_index] = {std::min(i, candidate), std::max(i, candidate)};
    }
  }
  return SocialGraph::from_friendships(n, std::move(edges));
}

namespace detail {

inline LatLon clamp_into_bbox(const LocalProjection& proj, const BBox& bbox,
                              LatLon p) {
  const double d = proj.distance_km(p);
  if (d <= bbox.radius_km) return p;
  const double f = bbox.radius_km / d * 0.999;
  return LatLon{proj.center().lat + (p.lat - proj.center().lat) * f,
                proj.center().lon + (p.lon - proj.center().lon) * f};
}

inline LatLon draw_near(const LocalProjection& proj, const BBox& bbox,
                        const LatLon& center, double std_km,
                        rng::Stream& stream) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double east = stream.normal(0.0, std_km);
    const double north = stream.normal(0.0, std_km);
    const LatLon p{center.lat + north / proj.km_per_deg_lat(),
                   center.lon + east / proj.km_per_deg_lon()};
    if (proj.distance_km(p) <= bbox.radius_km) return p;
  }
  return clamp_into_bbox(proj, bbox, center);
}

}  // namespace detail

// Per-user mobility models. User i's home sits on a ring at angle
// 2*pi*i/n, so lattice neighbors (friends) are geographic neighbors too.
inline std::vector<MobilityModel> generate_mobility(const SynthConfig& cfg) {
  cfg.validate();
  const LocalProjection proj(LatLon{cfg.bbox.center_lat, cfg.bbox.center_lon});
  std::vector<MobilityModel> models(cfg.n_users);
  for (int u = 0; u < cfg.n_users; ++u) {
    auto stream = rng::Stream::of(cfg.seed, rng::kMobility, u);
    MobilityModel& m = models[u];
    m.kind = stream.uniform01() < cfg.fraction_stationary
                 ? MobilityKind::kStationary
                 : MobilityKind::kMobile;
    const double angle = 2.0 * M_PI * u / cfg.n_users;
    const double r = cfg.home_ring_radius_km + stream.normal(0.0, cfg.home_jitter_km);
    m.home = detail::clamp_into_bbox(
        proj, cfg.bbox,
        proj.offset(r * std::cos(angle), r * std::sin(angle)));
    m.anchors.push_back(m.home);
    if (m.kind == MobilityKind::kMobile) {
      const int extra = 1 + static_cast<int>(stream.uniform_int(4));  // 2-5 total
      for (int a = 0; a < extra; ++a) {
        m.anchors.push_back(detail::draw_near(proj, cfg.bbox, m.home,
                                              cfg.anchor_spread_km, stream));
      }
      m.wander_std_km = cfg.mobile_wander_km;
    } else {
      m.wander_std_km = cfg.stationary_wander_km;
    }
  }
  return models;
}

namespace detail {

// The anchor a user occupies in a slot; independent of everything else so
// that a friend's choice can be recomputed without ordering constraints.
inline const LatLon& current_anchor(const std::vector<MobilityModel>& models,
                                    std::uint64_t seed, int user, int slot) {
  const auto& anchors = models[user].anchors;
  if (anchors.size() == 1) return anchors[0];
  auto stream = rng::Stream::of(seed, rng::kTrace, user, slot);
  return anchors[stream.uniform_int(anchors.size())];
}

}  // namespace detail

// Socially-correlated traces: with probability co_location_prob a user's
// slot location is drawn near a uniformly chosen friend's current anchor,
// otherwise near her own; Gaussian wander on top, kept inside the bbox.
// Poisson(rate) tweets per (user, slot), each geo-tagged with geotag_prob.
inline std::vector<TweetRecord> generate_traces(
    const SocialGraph& graph, const std::vector<MobilityModel>& models,
    const SynthConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(models.size()) != graph.n_users())
    throw errors::invalid_input("generate_traces: one MobilityModel per user required");
  const LocalProjection proj(LatLon{cfg.bbox.center_lat, cfg.bbox.center_lon});

  std::vector<TweetRecord> tweets;
  for (int u = 0; u < graph.n_users(); ++u) {
    for (int s = 0; s < cfg.n_slots; ++s) {
      // separate stream from the anchor choice, which friends recompute
      auto stream = rng::Stream::of(cfg.seed, rng::kTrace ^ 0xffULL, u, s);
      const LatLon* anchor = &detail::current_anchor(models, cfg.seed, u, s);
      const auto& nbrs = graph.neighbors(u);
      if (!nbrs.empty() && stream.uniform01() < cfg.co_location_prob) {
        const int friend_id = nbrs[stream.uniform_int(nbrs.size())];
        anchor = &detail::current_anchor(models, cfg.seed, friend_id, s);
      }
      const LatLon loc = detail::draw_near(proj, cfg.bbox, *anchor,
                                           models[u].wander_std_km, stream);
      const int n_tweets = stream.poisson(cfg.tweets_per_user_per_slot_rate);
      for (int i = 0; i < n_tweets; ++i) {
        const std::int64_t ts =
            cfg.t_start + s * cfg.slot_duration_s +
            static_cast<std::int64_t>(stream.uniform_int(cfg.slot_duration_s));
        if (stream.uniform01() < cfg.geotag_prob) {
          tweets.push_back(TweetRecord::geotagged(u, ts, loc.lat, loc.lon));
        } else {
          tweets.push_back(TweetRecord::plain(u, ts));
        }
      }
    }
  }
  return tweets;
}

}  // namespace geoleak
