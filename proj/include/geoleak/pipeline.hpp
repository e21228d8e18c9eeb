#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "geoleak/error.hpp"
#include "geoleak/geo.hpp"
#include "geoleak/rng.hpp"
#include "geoleak/tweet.hpp"

namespace geoleak {

inline constexpr int kFeatureDim = 3;   // normalized lat, lon, staleness
inline constexpr int kTargetDim = 2;    // normalized lat, lon
inline constexpr std::int64_t kDefaultSlotSeconds = 10800;  // 3 hours

enum class TargetMode { kNextSlot, kSameSlotMasked };

inline std::string target_mode_name(TargetMode m) {
  return m == TargetMode::kNextSlot ? "next-slot" : "same-slot-masked";
}
inline TargetMode target_mode_from_name(const std::string& s) {
  if (s == "next-slot") return TargetMode::kNextSlot;
  if (s == "same-slot-masked") return TargetMode::kSameSlotMasked;
  throw errors::invalid_parameter("unknown target mode '" + s + "'");
}

// The GEO-SN over time: at most one observed location per (slot, user).
class SnapshotSequence {
 public:
  SnapshotSequence(int n_slots, int n_users, std::int64_t t_start,
                   std::int64_t slot_duration_s)
      : n_slots_(n_slots),
        n_users_(n_users),
        t_start_(t_start),
        slot_duration_s_(slot_duration_s),
        lat_(static_cast<std::size_t>(n_slots) * n_users, 0.0),
        lon_(static_cast<std::size_t>(n_slots) * n_users, 0.0),
        present_(static_cast<std::size_t>(n_slots) * n_users, 0) {}

  int n_slots() const { return n_slots_; }
  int n_users() const { return n_users_; }
  std::int64_t t_start() const { return t_start_; }
  std::int64_t slot_duration_s() const { return slot_duration_s_; }
  std::size_t n_skipped_out_of_range() const { return n_skipped_; }
  std::size_t n_observations() const { return n_observations_; }

  bool has(int slot, int user) const { return present_[idx(slot, user)] != 0; }
  LatLon at(int slot, int user) const {
    return LatLon{lat_[idx(slot, user)], lon_[idx(slot, user)]};
  }

  void set(int slot, int user, LatLon loc) {
    const auto i = idx(slot, user);
    if (!present_[i]) ++n_observations_;
    present_[i] = 1;
    lat_[i] = loc.lat;
    lon_[i] = loc.lon;
  }

  void count_skipped() { ++n_skipped_; }

  // Every ground-truth observation of one user over the full period.
  std::vector<LatLon> user_observations(int user) const {
    std::vector<LatLon> out;
    for (int s = 0; s < n_slots_; ++s)
      if (has(s, user)) out.push_back(at(s, user));
    return out;
  }

 private:
  std::size_t idx(int slot, int user) const {
    return static_cast<std::size_t>(slot) * n_users_ + user;
  }

  int n_slots_;
  int n_users_;
  std::int64_t t_start_;
  std::int64_t slot_duration_s_;
  std::vector<double> lat_, lon_;
  std::vector<std::uint8_t> present_;
  std::size_t n_skipped_ = 0;
  std::size_t n_observations_ = 0;
};

// Buckets geo-tagged tweets into slots; the earliest tweet in a slot wins
// (ties broken on coordinates so the result is input-order independent).
inline SnapshotSequence discretize(const std::vector<TweetRecord>& tweets,
                                   std::int64_t t_start,
                                   std::int64_t slot_duration_s, int n_slots,
                                   int n_users) {
  if (slot_duration_s <= 0)
    throw errors::invalid_parameter("slot duration must be positive");
  if (n_slots < 1) throw errors::invalid_parameter("need at least one slot");
  SnapshotSequence seq(n_slots, n_users, t_start, slot_duration_s);

  struct Kept {
    std::int64_t ts;
    double lat, lon;
  };
  std::vector<Kept> kept(static_cast<std::size_t>(n_slots) * n_users,
                         Kept{std::numeric_limits<std::int64_t>::max(), 0, 0});

  for (const auto& t : tweets) {
    if (t.user_id < 0 || t.user_id >= n_users) {
      throw errors::invalid_input("tweet user id " + std::to_string(t.user_id) +
                                  " outside [0," + std::to_string(n_users) + ")");
    }
    if (!t.has_geotag) continue;
    if (t.timestamp < t_start ||
        t.timestamp >= t_start + slot_duration_s * n_slots) {
      seq.count_skipped();
      continue;
    }
    const int slot = static_cast<int>((t.timestamp - t_start) / slot_duration_s);
    auto& k = kept[static_cast<std::size_t>(slot) * n_users + t.user_id];
    const Kept cand{t.timestamp, t.lat, t.lon};
    if (std::tie(cand.ts, cand.lat, cand.lon) < std::tie(k.ts, k.lat, k.lon)) {
      k = cand;
      seq.set(slot, t.user_id, LatLon{t.lat, t.lon});
    }
  }
  return seq;
}

enum class SplitLabel : std::uint8_t { kTrain = 0, kValidation, kTest, kDiscarded };

inline const char* split_label_name(SplitLabel l) {
  switch (l) {
    case SplitLabel::kTrain: return "train";
    case SplitLabel::kValidation: return "validation";
    case SplitLabel::kTest: return "test";
    default: return "discarded";
  }
}

// Per-(slot, user) assignment: TRAIN with probability p, VALIDATION and
// TEST with (1-p)/2 each, DISCARDED where the target is unknown. The draw
// is a pure function of (seed, slot, user).
class SplitAssignment {
 public:
  SplitAssignment(int n_slots, int n_users, double p, std::uint64_t seed)
      : n_slots_(n_slots),
        n_users_(n_users),
        p_(p),
        seed_(seed),
        labels_(static_cast<std::size_t>(n_slots) * n_users,
                SplitLabel::kDiscarded) {}

  int n_slots() const { return n_slots_; }
  int n_users() const { return n_users_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }

  SplitLabel at(int slot, int user) const {
    return labels_[static_cast<std::size_t>(slot) * n_users_ + user];
  }
  void set(int slot, int user, SplitLabel l) {
    labels_[static_cast<std::size_t>(slot) * n_users_ + user] = l;
  }

 private:
  int n_slots_;
  int n_users_;
  double p_;
  std::uint64_t seed_;
  std::vector<SplitLabel> labels_;
};

namespace detail {
inline SplitLabel draw_split_label(std::uint64_t seed, int slot, int user,
                                   double p) {
  const double u = rng::Stream::of(seed, rng::kSplitDraw,
                                   static_cast<std::uint64_t>(slot),
                                   static_cast<std::uint64_t>(user))
                       .uniform01();
  if (u < p) return SplitLabel::kTrain;
  if (u < p + (1.0 - p) / 2.0) return SplitLabel::kValidation;
  return SplitLabel::kTest;
}

// Whether the (slot, user) entry has a known target under the mode.
inline bool target_known(const SnapshotSequence& seq, int slot, int user,
                         TargetMode mode) {
  if (mode == TargetMode::kNextSlot) {
    return slot + 1 < seq.n_slots() && seq.has(slot + 1, user);
  }
  return seq.has(slot, user);
}
}  // namespace detail

inline SplitAssignment assign_splits(const SnapshotSequence& seq, double p,
                                     std::uint64_t seed,
                                     TargetMode mode = TargetMode::kNextSlot) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw errors::invalid_parameter("geo-tag probability p must be in (0,1], got " +
                                    std::to_string(p));
  }
  SplitAssignment splits(seq.n_slots(), seq.n_users(), p, seed);
  for (int s = 0; s < seq.n_slots(); ++s) {
    for (int u = 0; u < seq.n_users(); ++u) {
      if (!detail::target_known(seq, s, u, mode)) continue;  // stays DISCARDED
      splits.set(s, u, detail::draw_split_label(seed, s, u, p));
    }
  }
  return splits;
}

// Min/max over training-assigned observations; maps to [0,1] with clamping
// at inference time. A degenerate axis maps everything to 0.5.
struct NormalizationBounds {
  double lat_min = 0.0, lat_max = 0.0;
  double lon_min = 0.0, lon_max = 0.0;

  static double norm_axis(double v, double lo, double hi) {
    if (hi <= lo) return 0.5;
    const double x = (v - lo) / (hi - lo);
    return std::clamp(x, 0.0, 1.0);
  }
  static double denorm_axis(double x, double lo, double hi) {
    if (hi <= lo) return lo;
    return lo + x * (hi - lo);
  }

  double norm_lat(double lat) const { return norm_axis(lat, lat_min, lat_max); }
  double norm_lon(double lon) const { return norm_axis(lon, lon_min, lon_max); }
  double denorm_lat(double x) const { return denorm_axis(x, lat_min, lat_max); }
  double denorm_lon(double x) const { return denorm_axis(x, lon_min, lon_max); }

  LatLon denorm(double nlat, double nlon) const {
    return LatLon{denorm_lat(nlat), denorm_lon(nlon)};
  }
};

inline NormalizationBounds normalization_bounds(const std::vector<LatLon>& train_observations) {
  if (train_observations.empty()) {
    throw errors::empty_training_set(
        "normalization_bounds: no training observations");
  }
  NormalizationBounds b{90.0, -90.0, 180.0, -180.0};
  for (const auto& o : train_observations) {
    b.lat_min = std::min(b.lat_min, o.lat);
    b.lat_max = std::max(b.lat_max, o.lat);
    b.lon_min = std::min(b.lon_min, o.lon);
    b.lon_max = std::max(b.lon_max, o.lon);
  }
  return b;
}

inline NormalizationBounds normalization_bounds(const SnapshotSequence& seq,
                                                const SplitAssignment& splits) {
  std::vector<LatLon> obs;
  for (int s = 0; s < seq.n_slots(); ++s)
    for (int u = 0; u < seq.n_users(); ++u)
      if (seq.has(s, u) && splits.at(s, u) == SplitLabel::kTrain)
        obs.push_back(seq.at(s, u));
  return normalization_bounds(obs);
}

// Mean of training-assigned observations in normalized coordinates; the
// fallback location for users with no visible history.
inline Eigen::Vector2d training_centroid(const SnapshotSequence& seq,
                                         const SplitAssignment& splits,
                                         const NormalizationBounds& norm) {
  double lat = 0.0, lon = 0.0;
  std::size_t n = 0;
  for (int s = 0; s < seq.n_slots(); ++s) {
    for (int u = 0; u < seq.n_users(); ++u) {
      if (seq.has(s, u) && splits.at(s, u) == SplitLabel::kTrain) {
        const LatLon o = seq.at(s, u);
        lat += norm.norm_lat(o.lat);
        lon += norm.norm_lon(o.lon);
        ++n;
      }
    }
  }
  if (n == 0) return Eigen::Vector2d(0.5, 0.5);
  return Eigen::Vector2d(lat / n, lon / n);
}

// Model input for one example: per window slot a (N, 3) matrix of
// normalized lat, lon and staleness, plus a mask telling which users have
// any usable history at that slot. Unmasked users carry the neutral
// sentinel (0.5, 0.5, 1.0).
struct FeatureTensor {
  int n_ts = 0;
  int n_users = 0;
  std::vector<Eigen::MatrixXd> steps;   // n_ts matrices of shape (n_users, 3)
  std::vector<std::uint8_t> mask;       // n_ts * n_users

  bool masked(int t, int u) const {
    return mask[static_cast<std::size_t>(t) * n_users + u] != 0;
  }
};

struct TargetMatrix {
  Eigen::MatrixXd values;        // (n_users, 2), normalized; rows valid iff known
  Eigen::MatrixXd raw_degrees;   // (n_users, 2), ground-truth lat/lon
  std::vector<std::uint8_t> known;

  bool is_known(int u) const { return known[u] != 0; }
};

struct Example {
  int terminal_slot = 0;
  FeatureTensor features;
  TargetMatrix target;
  std::vector<SplitLabel> labels;  // per user, at the terminal slot

  std::vector<int> users_with(SplitLabel l) const {
    std::vector<int> out;
    for (int u = 0; u < static_cast<int>(labels.size()); ++u)
      if (labels[u] == l && target.is_known(u)) out.push_back(u);
    return out;
  }
};

namespace detail {

// Visibility rule for inputs: an observation at slot s is usable at slot s
// only if the user is TRAIN-assigned there; strictly earlier observations
// are history and usable as-is.
template <typename VisibleNow>
FeatureTensor impute_window(const SnapshotSequence& seq, int terminal_slot,
                            int n_ts, const NormalizationBounds& norm,
                            int staleness_cap, VisibleNow&& visible_now) {
  const int n = seq.n_users();
  FeatureTensor ft;
  ft.n_ts = n_ts;
  ft.n_users = n;
  ft.steps.assign(n_ts, Eigen::MatrixXd(n, kFeatureDim));
  ft.mask.assign(static_cast<std::size_t>(n_ts) * n, 0);
  const int window_start = terminal_slot - n_ts + 1;

  for (int u = 0; u < n; ++u) {
    int last_before = -1;  // latest observed slot strictly before s
    for (int s = 0; s <= terminal_slot; ++s) {
      const int source =
          (seq.has(s, u) && visible_now(s, u)) ? s : last_before;
      if (s >= window_start) {
        const int t = s - window_start;
        if (source >= 0) {
          const LatLon o = seq.at(source, u);
          const double staleness =
              static_cast<double>(std::min(s - source, staleness_cap)) /
              static_cast<double>(staleness_cap);
          ft.steps[t](u, 0) = norm.norm_lat(o.lat);
          ft.steps[t](u, 1) = norm.norm_lon(o.lon);
          ft.steps[t](u, 2) = staleness;
          ft.mask[static_cast<std::size_t>(t) * n + u] = 1;
        } else {
          ft.steps[t](u, 0) = 0.5;
          ft.steps[t](u, 1) = 0.5;
          ft.steps[t](u, 2) = 1.0;
        }
      }
      if (seq.has(s, u)) last_before = s;
    }
  }
  return ft;
}

}  // namespace detail

// Split-blind featurization of a window ending at terminal_slot: every
// observation at or before a slot is treated as visible.
inline FeatureTensor impute_and_featurize(const SnapshotSequence& seq,
                                          int terminal_slot, int n_ts,
                                          const NormalizationBounds& norm,
                                          int staleness_cap = -1) {
  if (terminal_slot < n_ts - 1 || terminal_slot >= seq.n_slots())
    throw errors::invalid_input("impute_and_featurize: window out of range");
  if (staleness_cap <= 0) staleness_cap = n_ts;
  return detail::impute_window(seq, terminal_slot, n_ts, norm, staleness_cap,
                               [](int, int) { return true; });
}

// One example per terminal slot. Current-slot geo-tags of users not
// TRAIN-assigned at that slot never reach the input tensor.
inline std::vector<Example> build_examples(const SnapshotSequence& seq, int n_ts,
                                           TargetMode mode,
                                           const SplitAssignment& splits,
                                           const NormalizationBounds& norm) {
  if (n_ts < 1) throw errors::invalid_parameter("N_TS must be >= 1");
  if (seq.n_slots() <= n_ts) {
    throw errors::insufficient_data(
        "need more than N_TS=" + std::to_string(n_ts) + " slots, have " +
        std::to_string(seq.n_slots()));
  }
  const int n = seq.n_users();
  const int last_terminal =
      mode == TargetMode::kNextSlot ? seq.n_slots() - 2 : seq.n_slots() - 1;
  const int staleness_cap = n_ts;

  std::vector<Example> examples;
  for (int t = n_ts - 1; t <= last_terminal; ++t) {
    Example ex;
    ex.terminal_slot = t;
    ex.features = detail::impute_window(
        seq, t, n_ts, norm, staleness_cap, [&](int s, int u) {
          return splits.at(s, u) == SplitLabel::kTrain;
        });

    const int target_slot = mode == TargetMode::kNextSlot ? t + 1 : t;
    ex.target.values = Eigen::MatrixXd::Zero(n, kTargetDim);
    ex.target.raw_degrees = Eigen::MatrixXd::Zero(n, kTargetDim);
    ex.target.known.assign(n, 0);
    ex.labels.assign(n, SplitLabel::kDiscarded);
    for (int u = 0; u < n; ++u) {
      if (seq.has(target_slot, u)) {
        const LatLon o = seq.at(target_slot, u);
        ex.target.values(u, 0) = norm.norm_lat(o.lat);
        ex.target.values(u, 1) = norm.norm_lon(o.lon);
        ex.target.raw_degrees(u, 0) = o.lat;
        ex.target.raw_degrees(u, 1) = o.lon;
        ex.target.known[u] = 1;
      }
      ex.labels[u] = splits.at(t, u);
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

}  // namespace geoleak
