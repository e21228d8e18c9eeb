// Acceptance suite: one pass/fail line per criterion, non-zero exit if any
// criterion fails. Criteria 6 and 7 train real models on the default
// synthetic dataset and dominate the runtime.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "geoleak/experiment.hpp"
#include "oracles/reference.hpp"

#ifndef GEOLEAK_CLI_PATH
#define GEOLEAK_CLI_PATH "geoleak"
#endif

using namespace geoleak;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
  if (!detail.empty()) std::cout << "  (" << detail << ")";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

SocialGraph random_graph(int n, double edge_prob, rng::Stream& s) {
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (s.uniform01() < edge_prob) edges.emplace_back(a, b);
  return SocialGraph::from_friendships(n, edges);
}

// ---- criterion 1: gradient correctness ----------------------------------

void criterion1_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig cfg;
  cfg.n_ts = 4;
  cfg.n_cnn = 2;
  cfg.w_cnn = 2;
  cfg.n_g = {3, 2};
  cfg.k = 2;

  double worst_rel = 0.0;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5 && ok; ++seed) {
    rng::Stream s(seed * 1000);
    const auto graph = random_graph(6, 0.5, s);
    const auto op = normalized_laplacian(graph);
    auto params = init_params(cfg, seed);

    FeatureTensor x;
    x.n_ts = 4;
    x.n_users = 6;
    x.mask.assign(24, 1);
    for (int t = 0; t < 4; ++t) {
      Eigen::MatrixXd step(6, kFeatureDim);
      for (int i = 0; i < step.size(); ++i) step.data()[i] = s.uniform01();
      x.steps.push_back(step);
    }
    TargetMatrix target;
    target.values = Eigen::MatrixXd(6, 2);
    for (int i = 0; i < target.values.size(); ++i)
      target.values.data()[i] = s.uniform01();
    target.raw_degrees = Eigen::MatrixXd::Zero(6, 2);
    target.known.assign(6, 1);
    std::vector<int> mask;
    for (int u = 0; u < 6; ++u)
      if (s.uniform01() < 0.7) mask.push_back(u);
    if (mask.empty()) mask.push_back(0);

    const auto tape = forward_with_tape(x, op, params, cfg);
    const auto analytic =
        backward(tape, masked_mse_grad(tape.pred, target, mask), op, params, cfg);
    const auto numeric = oracle::finite_difference_grads(
        params, [&]() { return masked_mse(forward(x, op, params, cfg), target, mask); },
        1e-5);

    std::vector<const Eigen::MatrixXd*> aa, nn;
    analytic.for_each_array(
        [&](const std::string&, const Eigen::MatrixXd& m) { aa.push_back(&m); });
    numeric.for_each_array(
        [&](const std::string&, const Eigen::MatrixXd& m) { nn.push_back(&m); });
    for (std::size_t i = 0; i < aa.size() && ok; ++i) {
      for (int e = 0; e < aa[i]->size() && ok; ++e) {
        const double a = aa[i]->data()[e];
        const double n = nn[i]->data()[e];
        const double denom = std::max(std::abs(a), std::abs(n));
        if (denom < 1e-6) {
          if (std::abs(a - n) > 1e-7) ok = false;
        } else {
          const double rel = std::abs(a - n) / denom;
          worst_rel = std::max(worst_rel, rel);
          if (rel > 1e-4) ok = false;
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream detail;
  detail << "worst relative error " << worst_rel << ", " << elapsed << " s";
  report("criterion 1: analytic gradients match finite differences",
         ok && elapsed < 30.0, detail.str());
}

// ---- criterion 2: spectral correctness -----------------------------------

void criterion2_spectral() {
  bool spectrum_ok = true, cheb_ok = true;
  rng::Stream s(20202);
  double worst_cheb = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(s.uniform_int(19));
    const auto graph = random_graph(n, 0.3, s);
    const auto op = normalized_laplacian(graph);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.laplacian_dense());
    if (es.eigenvalues().minCoeff() < -1e-9 ||
        es.eigenvalues().maxCoeff() > 2.0 + 1e-9)
      spectrum_ok = false;

    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, 3);
    const auto got = chebyshev_apply(op, x, 4);
    const auto t_mats = oracle::cheb_matrices_by_eigendecomposition(
        op.scaled_laplacian_dense(), 4);
    for (int k = 0; k < 4; ++k) {
      const double err = (got[k] - t_mats[k] * x).cwiseAbs().maxCoeff();
      worst_cheb = std::max(worst_cheb, err);
      if (err > 1e-10) cheb_ok = false;
    }
  }

  const auto k3 = normalized_laplacian(
      SocialGraph::from_friendships(3, {{0, 1}, {1, 2}, {0, 2}}));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k3.laplacian_dense());
  const bool k3_ok = std::abs(es.eigenvalues()[0]) < 1e-10 &&
                     std::abs(es.eigenvalues()[1] - 1.5) < 1e-10 &&
                     std::abs(es.eigenvalues()[2] - 1.5) < 1e-10;

  std::ostringstream detail;
  detail << "worst chebyshev deviation " << worst_cheb;
  report("criterion 2: Laplacian spectrum, Chebyshev filter, K3 eigenvalues",
         spectrum_ok && cheb_ok && k3_ok, detail.str());
}

// ---- criterion 3: split distribution --------------------------------------

void criterion3_splits() {
  const int n_users = 100, n_slots = 1001;  // 10^5 known entries
  SnapshotSequence seq(n_slots, n_users, 0, 3600);
  for (int s = 0; s < n_slots; ++s)
    for (int u = 0; u < n_users; ++u) seq.set(s, u, {40.0, -74.0});

  bool ok = true;
  std::ostringstream detail;
  for (double p : {0.01, 0.1, 0.5}) {
    const auto splits = assign_splits(seq, p, 424242, TargetMode::kNextSlot);
    std::size_t c[3] = {0, 0, 0}, total = 0;
    for (int s = 0; s < n_slots - 1; ++s) {
      for (int u = 0; u < n_users; ++u) {
        ++total;
        ++c[static_cast<int>(splits.at(s, u))];
      }
    }
    const double ft = double(c[0]) / total, fv = double(c[1]) / total,
                 fs = double(c[2]) / total;
    if (std::abs(ft - p) > 0.01 || std::abs(fv - (1 - p) / 2) > 0.01 ||
        std::abs(fs - (1 - p) / 2) > 0.01)
      ok = false;
    detail << "p=" << p << ":(" << ft << "," << fv << "," << fs << ") ";
  }
  report("criterion 3: split fractions within +/-0.01 of (p,(1-p)/2,(1-p)/2)",
         ok, detail.str());
}

// ---- criterion 4: metric oracle -------------------------------------------

void criterion4_metric() {
  const bool antipodal =
      std::abs(haversine_km(0, 0, 0, 180) - 20015.11) <= 0.01;
  const bool one_degree =
      std::abs(haversine_km(0, 0, 0, 1) - 111.195) <= 0.001;
  bool triangle = true;
  rng::Stream s(444);
  for (int i = 0; i < 10000; ++i) {
    const LatLon a{s.uniform01() * 180 - 90, s.uniform01() * 360 - 180};
    const LatLon b{s.uniform01() * 180 - 90, s.uniform01() * 360 - 180};
    const LatLon c{s.uniform01() * 180 - 90, s.uniform01() * 360 - 180};
    if (haversine_km(a, b) > haversine_km(a, c) + haversine_km(c, b) + 1e-9)
      triangle = false;
  }
  report("criterion 4: haversine oracle values and triangle inequality",
         antipodal && one_degree && triangle, "");
}

// ---- criterion 5: no-leakage audit ----------------------------------------

// Independent re-derivation of the input features: an observation at slot s
// is admissible at slot s only under a TRAIN label; strictly earlier
// observations are admissible as history.
struct AuditFeature {
  double lat = 0.5, lon = 0.5, staleness = 1.0;
  bool masked = false;
  int source_slot = -1;
};

bool seq_has_hidden_current(const SnapshotSequence& seq,
                            const SplitAssignment& splits, int slot, int user) {
  if (!seq.has(slot, user)) return false;
  const SplitLabel l = splits.at(slot, user);
  return l == SplitLabel::kValidation || l == SplitLabel::kTest;
}

AuditFeature audit_feature(const SnapshotSequence& seq,
                           const SplitAssignment& splits,
                           const NormalizationBounds& norm, int slot, int user,
                           int cap) {
  AuditFeature f;
  for (int source = slot; source >= 0; --source) {
    if (!seq.has(source, user)) continue;
    if (source == slot && splits.at(source, user) != SplitLabel::kTrain)
      continue;  // current-slot geo-tag of a non-TRAIN user is invisible
    f.masked = true;
    f.source_slot = source;
    f.lat = norm.norm_lat(seq.at(source, user).lat);
    f.lon = norm.norm_lon(seq.at(source, user).lon);
    f.staleness = double(std::min(slot - source, cap)) / cap;
    break;
  }
  return f;
}

void criterion5_no_leakage() {
  // 10 users, 12 slots, sparse observations
  SynthConfig cfg;
  cfg.n_users = 10;
  cfg.mean_degree = 4;
  cfg.n_slots = 12;
  cfg.tweets_per_user_per_slot_rate = 0.8;
  cfg.seed = 99;
  const Dataset data = make_synth_dataset(cfg);

  bool ok = true;
  std::size_t audited = 0, hidden_hits = 0;
  for (TargetMode mode : {TargetMode::kNextSlot, TargetMode::kSameSlotMasked}) {
    const auto splits = assign_splits(data.seq, 0.4, 7, mode);
    NormalizationBounds norm;
    try {
      norm = normalization_bounds(data.seq, splits);
    } catch (const Error&) {
      continue;
    }
    const int n_ts = 4;
    const auto examples = build_examples(data.seq, n_ts, mode, splits, norm);
    for (const auto& ex : examples) {
      const int window_start = ex.terminal_slot - n_ts + 1;
      for (int t = 0; t < n_ts; ++t) {
        const int slot = window_start + t;
        for (int u = 0; u < data.seq.n_users(); ++u) {
          ++audited;
          const AuditFeature want =
              audit_feature(data.seq, splits, norm, slot, u, n_ts);
          const auto& step = ex.features.steps[t];
          if (ex.features.masked(t, u) != want.masked ||
              step(u, 0) != want.lat || step(u, 1) != want.lon ||
              step(u, 2) != want.staleness) {
            ok = false;
          }
          // explicit proof obligation: a VALIDATION/TEST user's current-slot
          // geo-tag never surfaces at that slot
          if (seq_has_hidden_current(data.seq, splits, slot, u)) {
            ++hidden_hits;
            const double leaked_lat = norm.norm_lat(data.seq.at(slot, u).lat);
            const double leaked_lon = norm.norm_lon(data.seq.at(slot, u).lon);
            const bool looks_leaked = step(u, 2) == 0.0 &&
                                      step(u, 0) == leaked_lat &&
                                      step(u, 1) == leaked_lon;
            if (looks_leaked && want.source_slot != slot) ok = false;
            if (want.source_slot == slot) ok = false;  // audit rule violated
          }
        }
      }
    }
  }
  std::ostringstream detail;
  detail << audited << " features audited, " << hidden_hits
         << " hidden current-slot geo-tags checked";
  report("criterion 5: no TEST/VALIDATION current-slot geo-tag reaches the input",
         ok && audited > 0 && hidden_hits > 0, detail.str());
}

// ---- criterion 8: sweep determinism ---------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion8_determinism() {
  const fs::path dir = fs::temp_directory_path() / "geoleak_acceptance_c8";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string gen_cmd =
      std::string(GEOLEAK_CLI_PATH) +
      " generate --n-users 24 --mean-degree 4 --n-slots 14 --seed 5 --out-dir " +
      (dir / "gen").string() + " > /dev/null 2>&1";
  bool ok = std::system(gen_cmd.c_str()) == 0;
  const std::string base =
      std::string(GEOLEAK_CLI_PATH) + " sweep --tweets " +
      (dir / "gen" / "tweets.csv").string() + " --graph " +
      (dir / "gen" / "graph.edges").string() +
      " --n-ts 3 --w-cnn 2 --n-cnn 2 --n-g 4,3 --k 2 --max-epochs 3" +
      " --p-values 0.1,0.5 --seeds 11 --jobs 2";
  for (const std::string run : {"a", "b"}) {
    const std::string cmd =
        base + " --out-dir " + (dir / run).string() + " > /dev/null 2>&1";
    ok = ok && std::system(cmd.c_str()) == 0;
  }
  ok = ok && !slurp(dir / "a" / "sweep.csv").empty() &&
       slurp(dir / "a" / "sweep.csv") == slurp(dir / "b" / "sweep.csv");
  report("criterion 8: identical sweep invocations are byte-identical", ok, "");
  fs::remove_all(dir);
}

// ---- criterion 9: report structure ----------------------------------------

void criterion9_report_structure() {
  SynthConfig cfg;
  cfg.n_users = 60;
  cfg.n_slots = 40;
  cfg.seed = 31;
  const Dataset data = make_synth_dataset(cfg);
  const auto run = prepare_run(data, 0.5, 3, 4, TargetMode::kNextSlot);
  const auto preds =
      baseline_friend_centroid(run.examples, data.graph, run.train_centroid);
  const auto report_obj = evaluate(run.examples, preds, run.norm, data.seq, 0.5);

  bool monotone = true;
  for (int q = 1; q < 100; ++q)
    if (report_obj.percentiles[q] < report_obj.percentiles[q - 1]) monotone = false;
  const bool partition =
      report_obj.categories.total() == report_obj.n_test_entries();
  std::ostringstream detail;
  detail << report_obj.n_test_entries() << " test entries, categories "
         << report_obj.categories.highly << "/" << report_obj.categories.average
         << "/" << report_obj.categories.poorly;
  report("criterion 9: percentile curve monotone, categories partition the "
         "test set",
         monotone && partition, detail.str());
}

// ---- criteria 6 and 7: critical-mass trend and baseline comparison --------

struct AccCell {
  double p = 0.0;
  std::uint64_t seed = 0;
  double model_mean = 0.0;
  double fc_mean = 0.0;
  double lk_mean = 0.0;
  double model_mobile = 0.0;
  double fc_mobile = 0.0;
  double lk_mobile = 0.0;
  std::size_t mobile_entries = 0;
};

double mobile_mean(const EvalReport& r, const std::vector<MobilityModel>& models,
                   std::size_t* count = nullptr) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : r.entries) {
    if (models[e.user_id].kind == MobilityKind::kMobile) {
      sum += e.km;
      ++n;
    }
  }
  if (count) *count = n;
  return n ? sum / n : 0.0;
}

void criteria6_7_sweep() {
  const auto t0 = std::chrono::steady_clock::now();

  SynthConfig synth;  // the default synthetic dataset
  synth.seed = 1;
  const Dataset data = make_synth_dataset(synth);
  const auto models = generate_mobility(synth);

  ModelConfig model_cfg;  // paper architecture, acceptance training budget
  model_cfg.learning_rate = 5e-3;
  model_cfg.max_epochs = 40;
  model_cfg.patience = 6;
  const int n_ts = model_cfg.n_ts;

  const std::vector<double> p_values = {0.01, 0.1, 0.3, 0.7, 0.9};
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<AccCell> cells;
  for (double p : p_values)
    for (auto seed : seeds) cells.push_back(AccCell{p, seed});

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure_msg;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed.load()) return;
      try {
        AccCell& cell = cells[i];
        ModelConfig cfg = model_cfg;
        cfg.seed = cell.seed;
        const auto run = prepare_run(data, cell.p, cell.seed, n_ts,
                                     TargetMode::kNextSlot);
        const auto trained = train(run.examples, data.op, cfg);
        const auto preds = predict_all(run.examples, data.op, trained.params, cfg);
        const auto model_report =
            evaluate(run.examples, preds, run.norm, data.seq, cell.p);
        cell.model_mean = model_report.mean_km;
        cell.model_mobile = mobile_mean(model_report, models, &cell.mobile_entries);
        if (cell.p == 0.9) {
          const auto lk = baseline_last_known(run.examples, run.train_centroid);
          const auto fc = baseline_friend_centroid(run.examples, data.graph,
                                                   run.train_centroid);
          const auto lk_report = evaluate(run.examples, lk, run.norm, data.seq, cell.p);
          const auto fc_report = evaluate(run.examples, fc, run.norm, data.seq, cell.p);
          cell.lk_mean = lk_report.mean_km;
          cell.fc_mean = fc_report.mean_km;
          cell.lk_mobile = mobile_mean(lk_report, models);
          cell.fc_mobile = mobile_mean(fc_report, models);
        }
      } catch (const std::exception& e) {
        failed.store(true);
        failure_msg = e.what();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int n_workers = static_cast<int>(std::min<std::size_t>(hw, cells.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (failed.load()) {
    report("criterion 6: mean error decreases with p", false, failure_msg);
    report("criterion 7: model beats the naive baselines at p=0.9", false,
           failure_msg);
    return;
  }

  auto mean_at = [&](double p, double AccCell::*field) {
    double sum = 0.0;
    int n = 0;
    for (const auto& c : cells)
      if (c.p == p) {
        sum += c.*field;
        ++n;
      }
    return sum / n;
  };

  std::cout << "  p      mean_km (3-seed average)\n";
  for (double p : p_values)
    std::cout << "  " << p << "  " << mean_at(p, &AccCell::model_mean) << "\n";

  const double m001 = mean_at(0.01, &AccCell::model_mean);
  const double m01 = mean_at(0.1, &AccCell::model_mean);
  const double m09 = mean_at(0.9, &AccCell::model_mean);
  const double elapsed = seconds_since(t0);
  {
    std::ostringstream detail;
    detail << "mean_km: p=0.01 " << m001 << ", p=0.1 " << m01 << ", p=0.9 "
           << m09 << "; " << elapsed << " s";
    report("criterion 6: mean error decreases from p=0.01 to p=0.1 and on to p=0.9",
           m001 > m01 && m09 <= m01 && elapsed < 1200.0, detail.str());
  }
  {
    const double model_mean = mean_at(0.9, &AccCell::model_mean);
    const double fc_mean = mean_at(0.9, &AccCell::fc_mean);
    const double lk_mobile = mean_at(0.9, &AccCell::lk_mobile);
    const double fc_mobile = mean_at(0.9, &AccCell::fc_mobile);
    const double model_mobile = mean_at(0.9, &AccCell::model_mobile);
    std::ostringstream detail;
    detail << "overall: model " << model_mean << " vs friend-centroid " << fc_mean
           << "; mobile subset: model " << model_mobile << ", friend-centroid "
           << fc_mobile << ", last-known " << lk_mobile;
    report("criterion 7: model <= friend-centroid overall; both <= last-known "
           "on mobile users",
           model_mean <= fc_mean && model_mobile <= lk_mobile &&
               fc_mobile <= lk_mobile,
           detail.str());
  }
}

}  // namespace

int main() {
  criterion1_gradients();
  criterion2_spectral();
  criterion3_splits();
  criterion4_metric();
  criterion5_no_leakage();
  criterion9_report_structure();
  criterion8_determinism();
  criteria6_7_sweep();

  if (g_failures == 0) {
    std::cout << "all acceptance criteria passed" << std::endl;
    return 0;
  }
  std::cout << g_failures << " acceptance criteria failed" << std::endl;
  return 1;
}
