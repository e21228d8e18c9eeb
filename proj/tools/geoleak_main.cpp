// geoleak: infer unshared tweet locations from a social graph and measure
// the privacy leakage as a function of the geo-tagged fraction.
//
// Subcommands: generate, ingest, train, evaluate, sweep. Runs are pure
// functions of (config file, flags, input files); every command writes its
// fully-resolved configuration next to its outputs.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "geoleak/checkpoint.hpp"
#include "geoleak/config.hpp"
#include "geoleak/experiment.hpp"

namespace fs = std::filesystem;
using namespace geoleak;

namespace {

struct FlagCapture {
  // flag values in command-line order; applied over file-config values
  std::vector<std::pair<std::string, std::string>> values;
  std::set<std::string> keys;

  void add(const std::string& key, const std::string& value) {
    values.emplace_back(key, value);
    keys.insert(key);
  }
};

const std::vector<std::pair<std::string, std::string>> kFlagSpecs = {
    {"n-users", "number of users to generate"},
    {"mean-degree", "ring-lattice degree (even)"},
    {"rewiring-prob", "small-world rewiring probability"},
    {"center-lat", "bounding-circle center latitude"},
    {"center-lon", "bounding-circle center longitude"},
    {"radius-km", "bounding-circle radius in km"},
    {"n-slots", "number of time slots"},
    {"slot-duration-s", "slot duration in seconds"},
    {"t-start", "epoch seconds of slot 0"},
    {"tweet-rate", "Poisson tweets per user per slot"},
    {"fraction-stationary", "fraction of stationary users"},
    {"co-location-prob", "probability of visiting a friend's anchor"},
    {"geotag-prob", "probability a generated tweet carries a geo-tag"},
    {"home-ring-radius-km", "home placement ring radius"},
    {"home-jitter-km", "radial home jitter"},
    {"anchor-spread-km", "anchor scatter around home for mobile users"},
    {"stationary-wander-km", "per-slot wander of stationary users"},
    {"mobile-wander-km", "per-slot wander of mobile users"},
    {"n-ts", "input window length in slots"},
    {"target-mode", "next-slot or same-slot-masked"},
    {"p", "geo-tag (TRAIN) probability"},
    {"n-cnn", "temporal conv filters"},
    {"w-cnn", "temporal conv width"},
    {"n-g", "GConvLSTM hidden sizes, comma separated"},
    {"k", "Chebyshev order"},
    {"learning-rate", "Adam learning rate"},
    {"adam-beta1", "Adam beta1"},
    {"adam-beta2", "Adam beta2"},
    {"adam-eps", "Adam epsilon"},
    {"max-epochs", "training epoch budget"},
    {"patience", "early-stopping patience"},
    {"tweets", "tweet file path"},
    {"graph", "edge-list file path"},
    {"checkpoint", "checkpoint file path"},
    {"out-dir", "output directory"},
    {"format", "tweet file format: csv or jsonl"},
    {"p-values", "sweep p grid, comma separated"},
    {"seeds", "sweep seeds, comma separated"},
    {"jobs", "parallel sweep workers"},
    {"seed", "master RNG seed"},
};

void add_config_flags(CLI::App* cmd, FlagCapture& capture,
                      std::string& config_path) {
  cmd->add_option("--config", config_path, "flat key = value config file");
  for (const auto& [key, help] : kFlagSpecs) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [&capture, key = key](const std::string& v) { capture.add(key, v); },
        help);
  }
}

// defaults < config file < flags < GEOLEAK_SEED
RunConfig resolve_config(const std::string& config_path,
                         const FlagCapture& capture,
                         std::set<std::string>& explicit_keys) {
  RunConfig cfg;
  if (!config_path.empty()) {
    for (const auto& [k, v] : parse_config_file(config_path)) {
      config_apply_key(cfg, k, v);
      explicit_keys.insert(k);
    }
  }
  for (const auto& [k, v] : capture.values) {
    config_apply_key(cfg, k, v);
    explicit_keys.insert(k);
  }
  if (const char* env = std::getenv("GEOLEAK_SEED")) {
    config_apply_key(cfg, "seed", env);
    explicit_keys.insert("seed");
  }
  cfg.propagate_seed();
  return cfg;
}

void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw errors::io("cannot create output directory: " + cfg.out_dir);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

Dataset load_dataset_for(const RunConfig& cfg,
                         const std::set<std::string>& explicit_keys) {
  if (cfg.tweets_path.empty())
    throw errors::invalid_parameter("--tweets is required");
  if (cfg.graph_path.empty())
    throw errors::invalid_parameter("--graph is required");
  const std::int64_t t_start =
      explicit_keys.count("t-start") ? cfg.synth.t_start : -1;
  const int n_slots = explicit_keys.count("n-slots") ? cfg.synth.n_slots : 0;
  return load_dataset(cfg.tweets_path, tweet_format_from_name(cfg.format),
                      cfg.graph_path, cfg.synth.slot_duration_s, t_start,
                      n_slots);
}

std::map<std::string, std::string> pipeline_meta_for(const RunConfig& cfg,
                                                     const Dataset& data) {
  std::map<std::string, std::string> meta;
  meta["p"] = format_double(cfg.p);
  meta["seed"] = std::to_string(cfg.seed);
  meta["n-ts"] = std::to_string(cfg.n_ts);
  meta["target-mode"] = target_mode_name(cfg.target_mode);
  meta["slot-duration-s"] = std::to_string(data.seq.slot_duration_s());
  meta["t-start"] = std::to_string(data.seq.t_start());
  meta["n-slots"] = std::to_string(data.seq.n_slots());
  meta["tweets"] = cfg.tweets_path;
  meta["graph"] = cfg.graph_path;
  return meta;
}

int cmd_generate(const RunConfig& cfg) {
  cfg.synth.validate();
  ensure_out_dir(cfg);
  const SocialGraph graph = generate_graph(cfg.synth);
  const auto models = generate_mobility(cfg.synth);
  const auto tweets = generate_traces(graph, models, cfg.synth);

  const TweetFormat format = tweet_format_from_name(cfg.format);
  const std::string tweets_file = out_path(
      cfg, format == TweetFormat::kCsv ? "tweets.csv" : "tweets.jsonl");
  const std::string graph_file = out_path(cfg, "graph.edges");
  write_tweets(tweets, tweets_file, format);
  save_edge_list(graph, graph_file);
  write_config_file(cfg, out_path(cfg, "run_config.txt"));

  std::size_t geotagged = 0;
  for (const auto& t : tweets) geotagged += t.has_geotag ? 1 : 0;
  std::cout << "generated " << tweets.size() << " tweets (" << geotagged
            << " geo-tagged) for " << graph.n_users() << " users, "
            << graph.friend_edges().size() << " friendships\n"
            << "tweets: " << tweets_file << "\n"
            << "graph:  " << graph_file << "\n";
  return 0;
}

int cmd_ingest(const RunConfig& cfg, const std::string& output,
               const std::string& output_format) {
  if (cfg.tweets_path.empty())
    throw errors::invalid_parameter("--tweets is required");
  const IngestResult result =
      ingest(cfg.tweets_path, tweet_format_from_name(cfg.format));
  std::size_t geotagged = 0;
  std::set<int> users;
  std::int64_t lo = 0, hi = 0;
  bool first = true;
  for (const auto& t : result.records) {
    geotagged += t.has_geotag ? 1 : 0;
    users.insert(t.user_id);
    if (first || t.timestamp < lo) lo = t.timestamp;
    if (first || t.timestamp > hi) hi = t.timestamp;
    first = false;
  }
  std::cout << "rows: " << result.total_rows << "\n"
            << "parsed: " << result.records.size() << "\n"
            << "geo-tagged: " << geotagged << "\n"
            << "malformed: " << result.malformed << "\n"
            << "users: " << users.size() << "\n";
  if (!result.records.empty()) {
    std::cout << "time range: " << timeutil::format_iso8601_utc(lo) << " .. "
              << timeutil::format_iso8601_utc(hi) << "\n";
  }
  for (const auto& o : result.offenders) std::cerr << "WARNING: " << o << "\n";
  if (!output.empty()) {
    write_tweets(result.records, output,
                 tweet_format_from_name(output_format.empty() ? cfg.format
                                                              : output_format));
    std::cout << "rewritten: " << output << "\n";
  }
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::set<std::string>& explicit_keys) {
  ensure_out_dir(cfg);
  const Dataset data = load_dataset_for(cfg, explicit_keys);
  if (cfg.p >= 1.0) {
    std::cerr << "WARNING: p=1 leaves the validation set empty; early "
                 "stopping is disabled and patience is ignored\n";
  }
  PreparedRun run = prepare_run(data, cfg.p, cfg.seed, cfg.n_ts, cfg.target_mode);
  ModelConfig model_cfg = cfg.model;
  model_cfg.n_ts = cfg.n_ts;
  model_cfg.seed = cfg.seed;
  const TrainResult result = train(run.examples, data.op, model_cfg);
  if (result.validation_empty && cfg.p < 1.0) {
    std::cerr << "WARNING: validation set is empty; early stopping disabled\n";
  }

  Checkpoint ck;
  ck.model = model_cfg;
  ck.params = result.params;
  ck.adam = make_adam_state(model_cfg);  // fresh optimizer on resume
  ck.norm = run.norm;
  ck.pipeline_meta = pipeline_meta_for(cfg, data);
  const std::string ck_path = cfg.checkpoint_path.empty()
                                  ? out_path(cfg, "checkpoint.json")
                                  : cfg.checkpoint_path;
  save_checkpoint(ck, ck_path);
  write_training_log_csv(result.log, out_path(cfg, "training_log.csv"));
  write_config_file(cfg, out_path(cfg, "run_config.txt"));

  std::cout << "trained " << result.epochs_run << " epochs on "
            << run.examples.size() << " examples\n";
  if (!result.log.empty()) {
    std::cout << "first train loss: " << format_double(result.log.front().train_loss)
              << "\nlast train loss:  " << format_double(result.log.back().train_loss)
              << "\n";
    if (!result.validation_empty)
      std::cout << "best val loss:    " << format_double(result.best_val_loss) << "\n";
  }
  std::cout << "checkpoint: " << ck_path << "\n";
  return 0;
}

// Keys that must agree between an explicit flag and the checkpoint.
void check_config_mismatch(const RunConfig& cfg,
                           const std::set<std::string>& explicit_keys,
                           const Checkpoint& ck) {
  const auto flat = config_to_map(cfg);
  std::map<std::string, std::string> stored;
  stored["n-cnn"] = std::to_string(ck.model.n_cnn);
  stored["w-cnn"] = std::to_string(ck.model.w_cnn);
  stored["n-g"] = detail::join_list(ck.model.n_g);
  stored["k"] = std::to_string(ck.model.k);
  for (const auto& key : {"p", "seed", "n-ts", "target-mode", "slot-duration-s",
                          "t-start", "n-slots"}) {
    auto it = ck.pipeline_meta.find(key);
    if (it != ck.pipeline_meta.end()) stored[key] = it->second;
  }
  for (const auto& [key, want] : stored) {
    if (!explicit_keys.count(key)) continue;
    const auto it = flat.find(key);
    if (it != flat.end() && it->second != want) {
      throw errors::config_mismatch("flag --" + key + "=" + it->second +
                                    " conflicts with checkpoint value " + want);
    }
  }
}

int cmd_evaluate(RunConfig cfg, const std::set<std::string>& explicit_keys) {
  if (cfg.checkpoint_path.empty())
    throw errors::invalid_parameter("--checkpoint is required");
  const Checkpoint ck = load_checkpoint(cfg.checkpoint_path);
  check_config_mismatch(cfg, explicit_keys, ck);

  // the checkpoint's pipeline settings are authoritative
  auto meta = [&](const std::string& key) -> std::string {
    auto it = ck.pipeline_meta.find(key);
    return it == ck.pipeline_meta.end() ? "" : it->second;
  };
  if (cfg.tweets_path.empty()) cfg.tweets_path = meta("tweets");
  if (cfg.graph_path.empty()) cfg.graph_path = meta("graph");
  if (cfg.tweets_path.empty() || cfg.graph_path.empty())
    throw errors::invalid_parameter("--tweets and --graph are required");
  const double p = std::stod(meta("p"));
  const std::uint64_t seed = std::stoull(meta("seed"));
  const TargetMode mode = target_mode_from_name(meta("target-mode"));
  const std::int64_t slot_s = std::stoll(meta("slot-duration-s"));
  const std::int64_t t_start = std::stoll(meta("t-start"));
  const int n_slots = std::stoi(meta("n-slots"));

  const Dataset data =
      load_dataset(cfg.tweets_path, tweet_format_from_name(cfg.format),
                   cfg.graph_path, slot_s, t_start, n_slots);
  SplitAssignment splits = assign_splits(data.seq, p, seed, mode);
  std::vector<Example> examples =
      build_examples(data.seq, ck.model.n_ts, mode, splits, ck.norm);
  const auto preds = predict_all(examples, data.op, ck.params, ck.model);
  const EvalReport report = evaluate(examples, preds, ck.norm, data.seq, p);

  ensure_out_dir(cfg);
  cfg.p = p;
  cfg.n_ts = ck.model.n_ts;
  cfg.target_mode = mode;
  write_report_json(report, out_path(cfg, "report.json"));
  write_percentiles_csv(report, out_path(cfg, "percentiles.csv"));
  write_mobility_csv(report, out_path(cfg, "mobility.csv"));
  write_config_file(cfg, out_path(cfg, "run_config.txt"));

  std::cout << "test entries: " << report.n_test_entries() << "\n"
            << "mean error: " << format_double(report.mean_km) << " km\n"
            << "below 1 km: " << format_double(report.pct_below_1km) << " %\n"
            << "median: " << format_double(report.percentiles[49]) << " km\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::set<std::string>& explicit_keys) {
  ensure_out_dir(cfg);
  const Dataset data = load_dataset_for(cfg, explicit_keys);
  const std::string sweep_path = out_path(cfg, "sweep.csv");
  std::vector<SweepRow> existing;
  if (fs::exists(sweep_path)) {
    existing = read_sweep_csv(sweep_path);
    if (!existing.empty())
      std::cout << "resuming: " << existing.size() << " rows present\n";
  }
  ModelConfig model_cfg = cfg.model;
  const auto rows =
      critical_mass_sweep(data, cfg.p_values, cfg.sweep_seeds, cfg.n_ts,
                          cfg.target_mode, model_cfg, cfg.jobs, existing);
  write_sweep_csv(rows, sweep_path);
  write_sweep_summary_csv(summarize_sweep(rows), out_path(cfg, "sweep_summary.csv"));
  write_config_file(cfg, out_path(cfg, "run_config.txt"));

  std::cout << "p,n_seeds,mean_km,pct_below_1km\n";
  for (const auto& s : summarize_sweep(rows)) {
    std::cout << format_double(s.p) << ',' << s.n_seeds << ','
              << format_double(s.mean_km) << ','
              << format_double(s.pct_below_1km) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"location-privacy inference over social graphs"};
  app.require_subcommand(1);

  struct SubState {
    FlagCapture capture;
    std::string config_path;
  };
  std::map<std::string, SubState> state;
  std::string ingest_output, ingest_output_format;

  for (const std::string name :
       {"generate", "ingest", "train", "evaluate", "sweep"}) {
    CLI::App* cmd = app.add_subcommand(name, name + " subcommand");
    add_config_flags(cmd, state[name].capture, state[name].config_path);
    if (name == "ingest") {
      cmd->add_option("--output", ingest_output, "rewrite parsed tweets here");
      cmd->add_option("--output-format", ingest_output_format,
                      "format for --output (defaults to --format)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERROR:usage: " << e.what() << "\n";
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    std::set<std::string> explicit_keys;
    const RunConfig cfg = resolve_config(state[name].config_path,
                                         state[name].capture, explicit_keys);
    if (name == "generate") return cmd_generate(cfg);
    if (name == "ingest") return cmd_ingest(cfg, ingest_output, ingest_output_format);
    if (name == "train") return cmd_train(cfg, explicit_keys);
    if (name == "evaluate") return cmd_evaluate(cfg, explicit_keys);
    if (name == "sweep") return cmd_sweep(cfg, explicit_keys);
    std::cerr << "ERROR:usage: unknown subcommand\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "ERROR:" << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ERROR:internal: " << e.what() << "\n";
    return 1;
  }
}
