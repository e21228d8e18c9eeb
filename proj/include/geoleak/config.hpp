#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "geoleak/error.hpp"
#include "geoleak/model.hpp"
#include "geoleak/pipeline.hpp"
#include "geoleak/synth.hpp"
#include "geoleak/tweet_io.hpp"

namespace geoleak {

// Flat key-value view of a run: every knob of the generator, pipeline and
// model plus the I/O paths. Serialized as sorted "key = value" lines so the
// resolved config written next to each run's outputs diffs cleanly.
struct RunConfig {
  SynthConfig synth;

  int n_ts = 4;
  TargetMode target_mode = TargetMode::kNextSlot;
  double p = 0.1;

  ModelConfig model;

  std::string tweets_path;
  std::string graph_path;
  std::string checkpoint_path;
  std::string out_dir = ".";
  std::string format = "csv";

  std::vector<double> p_values = {0.01, 0.1, 0.3, 0.7, 0.9};
  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3};
  int jobs = 1;

  std::uint64_t seed = 1;

  // One seed to rule the run: generator, splits and model init all derive
  // their streams from it.
  void propagate_seed() {
    synth.seed = seed;
    model.seed = seed;
  }
};

namespace detail {

template <typename T>
std::string join_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    if constexpr (std::is_same_v<T, double>) out += format_double(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw errors::invalid_parameter("config key '" + key + "': bad number '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw errors::invalid_parameter("config key '" + key + "': bad integer '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::uint64_t x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw errors::invalid_parameter("config key '" + key + "': bad seed '" + v + "'");
  }
}

}  // namespace detail

inline std::map<std::string, std::string> config_to_map(const RunConfig& c) {
  std::map<std::string, std::string> m;
  m["n-users"] = std::to_string(c.synth.n_users);
  m["mean-degree"] = std::to_string(c.synth.mean_degree);
  m["rewiring-prob"] = format_double(c.synth.rewiring_prob);
  m["center-lat"] = format_double(c.synth.bbox.center_lat);
  m["center-lon"] = format_double(c.synth.bbox.center_lon);
  m["radius-km"] = format_double(c.synth.bbox.radius_km);
  m["n-slots"] = std::to_string(c.synth.n_slots);
  m["slot-duration-s"] = std::to_string(c.synth.slot_duration_s);
  m["t-start"] = std::to_string(c.synth.t_start);
  m["tweet-rate"] = format_double(c.synth.tweets_per_user_per_slot_rate);
  m["fraction-stationary"] = format_double(c.synth.fraction_stationary);
  m["co-location-prob"] = format_double(c.synth.co_location_prob);
  m["geotag-prob"] = format_double(c.synth.geotag_prob);
  m["home-ring-radius-km"] = format_double(c.synth.home_ring_radius_km);
  m["home-jitter-km"] = format_double(c.synth.home_jitter_km);
  m["anchor-spread-km"] = format_double(c.synth.anchor_spread_km);
  m["stationary-wander-km"] = format_double(c.synth.stationary_wander_km);
  m["mobile-wander-km"] = format_double(c.synth.mobile_wander_km);
  m["n-ts"] = std::to_string(c.n_ts);
  m["target-mode"] = target_mode_name(c.target_mode);
  m["p"] = format_double(c.p);
  m["n-cnn"] = std::to_string(c.model.n_cnn);
  m["w-cnn"] = std::to_string(c.model.w_cnn);
  m["n-g"] = detail::join_list(c.model.n_g);
  m["k"] = std::to_string(c.model.k);
  m["learning-rate"] = format_double(c.model.learning_rate);
  m["adam-beta1"] = format_double(c.model.adam_beta1);
  m["adam-beta2"] = format_double(c.model.adam_beta2);
  m["adam-eps"] = format_double(c.model.adam_eps);
  m["max-epochs"] = std::to_string(c.model.max_epochs);
  m["patience"] = std::to_string(c.model.patience);
  m["tweets"] = c.tweets_path;
  m["graph"] = c.graph_path;
  m["checkpoint"] = c.checkpoint_path;
  m["out-dir"] = c.out_dir;
  m["format"] = c.format;
  m["p-values"] = detail::join_list(c.p_values);
  m["seeds"] = detail::join_list(c.sweep_seeds);
  m["jobs"] = std::to_string(c.jobs);
  m["seed"] = std::to_string(c.seed);
  return m;
}

inline void config_apply_key(RunConfig& c, const std::string& key,
                             const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_u64;
  if (key == "n-users") c.synth.n_users = static_cast<int>(parse_int(key, value));
  else if (key == "mean-degree") c.synth.mean_degree = static_cast<int>(parse_int(key, value));
  else if (key == "rewiring-prob") c.synth.rewiring_prob = parse_double(key, value);
  else if (key == "center-lat") c.synth.bbox.center_lat = parse_double(key, value);
  else if (key == "center-lon") c.synth.bbox.center_lon = parse_double(key, value);
  else if (key == "radius-km") c.synth.bbox.radius_km = parse_double(key, value);
  else if (key == "n-slots") c.synth.n_slots = static_cast<int>(parse_int(key, value));
  else if (key == "slot-duration-s") c.synth.slot_duration_s = parse_int(key, value);
  else if (key == "t-start") c.synth.t_start = parse_int(key, value);
  else if (key == "tweet-rate") c.synth.tweets_per_user_per_slot_rate = parse_double(key, value);
  else if (key == "fraction-stationary") c.synth.fraction_stationary = parse_double(key, value);
  else if (key == "co-location-prob") c.synth.co_location_prob = parse_double(key, value);
  else if (key == "geotag-prob") c.synth.geotag_prob = parse_double(key, value);
  else if (key == "home-ring-radius-km") c.synth.home_ring_radius_km = parse_double(key, value);
  else if (key == "home-jitter-km") c.synth.home_jitter_km = parse_double(key, value);
  else if (key == "anchor-spread-km") c.synth.anchor_spread_km = parse_double(key, value);
  else if (key == "stationary-wander-km") c.synth.stationary_wander_km = parse_double(key, value);
  else if (key == "mobile-wander-km") c.synth.mobile_wander_km = parse_double(key, value);
  else if (key == "n-ts") c.n_ts = static_cast<int>(parse_int(key, value));
  else if (key == "target-mode") c.target_mode = target_mode_from_name(value);
  else if (key == "p") c.p = parse_double(key, value);
  else if (key == "n-cnn") c.model.n_cnn = static_cast<int>(parse_int(key, value));
  else if (key == "w-cnn") c.model.w_cnn = static_cast<int>(parse_int(key, value));
  else if (key == "n-g") {
    c.model.n_g.clear();
    for (const auto& item : detail::split_list(value))
      c.model.n_g.push_back(static_cast<int>(parse_int(key, item)));
  } else if (key == "k") c.model.k = static_cast<int>(parse_int(key, value));
  else if (key == "learning-rate") c.model.learning_rate = parse_double(key, value);
  else if (key == "adam-beta1") c.model.adam_beta1 = parse_double(key, value);
  else if (key == "adam-beta2") c.model.adam_beta2 = parse_double(key, value);
  else if (key == "adam-eps") c.model.adam_eps = parse_double(key, value);
  else if (key == "max-epochs") c.model.max_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "patience") c.model.patience = static_cast<int>(parse_int(key, value));
  else if (key == "tweets") c.tweets_path = value;
  else if (key == "graph") c.graph_path = value;
  else if (key == "checkpoint") c.checkpoint_path = value;
  else if (key == "out-dir") c.out_dir = value;
  else if (key == "format") c.format = value;
  else if (key == "p-values") {
    c.p_values.clear();
    for (const auto& item : detail::split_list(value))
      c.p_values.push_back(parse_double(key, item));
  } else if (key == "seeds") {
    c.sweep_seeds.clear();
    for (const auto& item : detail::split_list(value))
      c.sweep_seeds.push_back(parse_u64(key, item));
  } else if (key == "jobs") c.jobs = static_cast<int>(parse_int(key, value));
  else if (key == "seed") c.seed = parse_u64(key, value);
  else throw errors::invalid_parameter("unknown config key '" + key + "'");
}

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace detail

// Key/value pairs in file order; values win later when re-applied in order.
inline std::vector<std::pair<std::string, std::string>> parse_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw errors::io("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw errors::invalid_parameter("config " + path + ":" +
                                      std::to_string(line_no) +
                                      ": expected key = value");
    }
    pairs.emplace_back(detail::trim(t.substr(0, eq)),
                       detail::trim(t.substr(eq + 1)));
  }
  return pairs;
}

inline void load_config_file(RunConfig& c, const std::string& path) {
  for (const auto& [k, v] : parse_config_file(path)) config_apply_key(c, k, v);
}

inline void write_config_file(const RunConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write config file: " + path);
  for (const auto& [k, v] : config_to_map(c)) out << k << " = " << v << "\n";
  if (!out) throw errors::io("write failed: " + path);
}

}  // namespace geoleak
