#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "geoleak/config.hpp"
#include "geoleak/eval.hpp"
#include "geoleak/model.hpp"
#include "geoleak/pipeline.hpp"
#include "geoleak/spectral.hpp"
#include "geoleak/synth.hpp"
#include "geoleak/tweet_io.hpp"

namespace geoleak {

// Immutable inputs of a run; shared read-only across sweep workers.
struct Dataset {
  SocialGraph graph;
  SpectralOperator op;
  SnapshotSequence seq;
};

inline Dataset make_dataset(SocialGraph graph,
                            const std::vector<TweetRecord>& tweets,
                            std::int64_t t_start, std::int64_t slot_duration_s,
                            int n_slots) {
  SpectralOperator op = normalized_laplacian(graph);
  SnapshotSequence seq =
      discretize(tweets, t_start, slot_duration_s, n_slots, graph.n_users());
  return Dataset{std::move(graph), std::move(op), std::move(seq)};
}

inline Dataset make_synth_dataset(const SynthConfig& cfg) {
  SocialGraph graph = generate_graph(cfg);
  const auto models = generate_mobility(cfg);
  const auto tweets = generate_traces(graph, models, cfg);
  return make_dataset(std::move(graph), tweets, cfg.t_start,
                      cfg.slot_duration_s, cfg.n_slots);
}

// Loads graph + tweets from disk. t_start < 0 or n_slots <= 0 derive the
// time grid from the data itself.
inline Dataset load_dataset(const std::string& tweets_path, TweetFormat format,
                            const std::string& graph_path,
                            std::int64_t slot_duration_s, std::int64_t t_start,
                            int n_slots) {
  SocialGraph graph = load_edge_list(graph_path);
  IngestResult in = ingest(tweets_path, format);
  if (in.records.empty())
    throw errors::insufficient_data("no tweets in " + tweets_path);
  std::int64_t lo = in.records.front().timestamp;
  std::int64_t hi = lo;
  for (const auto& t : in.records) {
    lo = std::min(lo, t.timestamp);
    hi = std::max(hi, t.timestamp);
  }
  if (t_start < 0) t_start = lo;
  if (n_slots <= 0)
    n_slots = static_cast<int>((hi - t_start) / slot_duration_s + 1);
  return make_dataset(std::move(graph), in.records, t_start, slot_duration_s,
                      n_slots);
}

struct PreparedRun {
  SplitAssignment splits;
  NormalizationBounds norm;
  Eigen::Vector2d train_centroid;
  std::vector<Example> examples;
};

inline PreparedRun prepare_run(const Dataset& data, double p,
                               std::uint64_t seed, int n_ts, TargetMode mode) {
  SplitAssignment splits = assign_splits(data.seq, p, seed, mode);
  NormalizationBounds norm = normalization_bounds(data.seq, splits);
  Eigen::Vector2d centroid = training_centroid(data.seq, splits, norm);
  std::vector<Example> examples = build_examples(data.seq, n_ts, mode, splits, norm);
  return PreparedRun{std::move(splits), norm, centroid, std::move(examples)};
}

inline std::vector<Eigen::MatrixXd> predict_all(
    const std::vector<Example>& examples, const SpectralOperator& op,
    const ModelParams& params, const ModelConfig& cfg) {
  std::vector<Eigen::MatrixXd> preds;
  preds.reserve(examples.size());
  for (const auto& ex : examples) preds.push_back(forward(ex.features, op, params, cfg));
  return preds;
}

struct CellResult {
  double p = 0.0;
  std::uint64_t seed = 0;
  TrainResult training;
  EvalReport report;
};

// One sweep cell: fresh split, fresh training, evaluation.
inline CellResult run_cell(const Dataset& data, double p, std::uint64_t seed,
                           int n_ts, TargetMode mode, ModelConfig model_cfg) {
  model_cfg.n_ts = n_ts;
  model_cfg.seed = seed;
  PreparedRun run = prepare_run(data, p, seed, n_ts, mode);
  CellResult cell;
  cell.p = p;
  cell.seed = seed;
  cell.training = train(run.examples, data.op, model_cfg);
  const auto preds = predict_all(run.examples, data.op, cell.training.params, model_cfg);
  cell.report = evaluate(run.examples, preds, run.norm, data.seq, p);
  return cell;
}

// Retrains from scratch for every (p, seed) cell; cells already present in
// `existing` are skipped. Cells run in parallel when jobs > 1 and are
// merged in sorted (p, seed) order, so the output is schedule-independent.
inline std::vector<SweepRow> critical_mass_sweep(
    const Dataset& data, const std::vector<double>& p_values,
    const std::vector<std::uint64_t>& seeds, int n_ts, TargetMode mode,
    const ModelConfig& model_cfg, int jobs,
    const std::vector<SweepRow>& existing = {}) {
  for (double p : p_values) {
    if (!(p > 0.0 && p <= 1.0))
      throw errors::invalid_parameter("sweep p values must be in (0,1]");
  }
  struct Task {
    double p;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  auto done = [&](double p, std::uint64_t seed) {
    for (const auto& row : existing)
      if (row.p == p && row.seed == seed) return true;
    return false;
  };
  for (double p : p_values)
    for (std::uint64_t s : seeds)
      if (!done(p, s)) tasks.push_back(Task{p, s});

  std::vector<SweepRow> rows = existing;
  std::vector<SweepRow> fresh(tasks.size());
  std::vector<std::string> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        CellResult cell = run_cell(data, tasks[i].p, tasks[i].seed, n_ts, mode,
                                   model_cfg);
        fresh[i] = SweepRow{cell.p, cell.seed, cell.report.mean_km,
                            cell.report.pct_below_1km};
      } catch (const Error& e) {
        failures[i] = std::string(e.category()) + ": p=" +
                      format_double(tasks[i].p) + " seed=" +
                      std::to_string(tasks[i].seed) + ": " + e.what();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!failures[i].empty()) {
      const auto colon = failures[i].find(':');
      throw Error(failures[i].substr(0, colon),
                  "sweep cell failed: " + failures[i].substr(colon + 2));
    }
    rows.push_back(fresh[i]);
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.p != b.p ? a.p < b.p : a.seed < b.seed;
  });
  return rows;
}

// Per-p means over seeds, for the companion summary file.
struct SweepSummaryRow {
  double p = 0.0;
  int n_seeds = 0;
  double mean_km = 0.0;
  double pct_below_1km = 0.0;
};

inline std::vector<SweepSummaryRow> summarize_sweep(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummaryRow> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().p != r.p) out.push_back(SweepSummaryRow{r.p, 0, 0, 0});
    auto& s = out.back();
    ++s.n_seeds;
    s.mean_km += r.mean_km;
    s.pct_below_1km += r.pct_below_1km;
  }
  for (auto& s : out) {
    s.mean_km /= s.n_seeds;
    s.pct_below_1km /= s.n_seeds;
  }
  return out;
}

inline void write_sweep_summary_csv(const std::vector<SweepSummaryRow>& rows,
                                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write sweep summary: " + path);
  out << "p,n_seeds,mean_km,pct_below_1km\n";
  for (const auto& r : rows) {
    out << format_double(r.p) << ',' << r.n_seeds << ','
        << format_double(r.mean_km) << ',' << format_double(r.pct_below_1km)
        << '\n';
  }
  if (!out) throw errors::io("write failed: " + path);
}

inline void write_training_log_csv(const std::vector<EpochLog>& log,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw errors::io("cannot write training log: " + path);
  out << "epoch,train_loss,val_loss\n";
  for (const auto& row : log) {
    out << row.epoch << ',' << format_double(row.train_loss) << ','
        << format_double(row.val_loss) << '\n';
  }
  if (!out) throw errors::io("write failed: " + path);
}

}  // namespace geoleak
