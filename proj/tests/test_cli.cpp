#include <catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef GEOLEAK_CLI_PATH
#define GEOLEAK_CLI_PATH "geoleak"
#endif

namespace fs = std::filesystem;

namespace {

struct RunOutput {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunOutput run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(GEOLEAK_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  RunOutput r;
  r.exit_code = WEXITSTATUS(rc);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string slurp_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// tiny dataset so CLI round trips stay fast
const std::string kTinyGen =
    "--n-users 24 --mean-degree 4 --n-slots 16 --tweet-rate 1.2 --seed 11";

}  // namespace

TEST_CASE("generate is deterministic byte for byte") {
  const auto d1 = fresh_dir("geoleak_cli_gen1");
  const auto d2 = fresh_dir("geoleak_cli_gen2");
  // identical invocation twice: every output byte-identical
  const std::string cmd = "generate " + kTinyGen + " --out-dir " + (d1 / "out").string();
  REQUIRE(run_cli(cmd, d1).exit_code == 0);
  const std::string tweets1 = slurp_file(d1 / "out" / "tweets.csv");
  const std::string graph1 = slurp_file(d1 / "out" / "graph.edges");
  const std::string config1 = slurp_file(d1 / "out" / "run_config.txt");
  REQUIRE(run_cli(cmd, d1).exit_code == 0);
  REQUIRE(slurp_file(d1 / "out" / "tweets.csv") == tweets1);
  REQUIRE(slurp_file(d1 / "out" / "graph.edges") == graph1);
  REQUIRE(slurp_file(d1 / "out" / "run_config.txt") == config1);
  // same flags, different out-dir: the data files still match
  REQUIRE(run_cli("generate " + kTinyGen + " --out-dir " + (d2 / "out").string(), d2).exit_code == 0);
  REQUIRE(slurp_file(d2 / "out" / "tweets.csv") == tweets1);
  REQUIRE(slurp_file(d2 / "out" / "graph.edges") == graph1);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("generated files parse back through ingest") {
  const auto dir = fresh_dir("geoleak_cli_roundtrip");
  REQUIRE(run_cli("generate " + kTinyGen + " --out-dir " + (dir / "out").string(), dir).exit_code == 0);
  const auto r = run_cli("ingest --tweets " + (dir / "out" / "tweets.csv").string(), dir);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("malformed: 0") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("bad generator parameters exit non-zero with a category prefix") {
  const auto dir = fresh_dir("geoleak_cli_bad");
  const auto r = run_cli(
      "generate --n-users 100 --mean-degree 101 --out-dir " + dir.string(), dir);
  REQUIRE(r.exit_code != 0);
  REQUIRE(r.err.find("ERROR:invalid-parameter:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("missing tweet file names the path in the error") {
  const auto dir = fresh_dir("geoleak_cli_missing");
  const auto r = run_cli(
      "train --tweets /nonexistent/tweets.csv --graph /nonexistent/graph.edges "
      "--out-dir " + dir.string(), dir);
  REQUIRE(r.exit_code != 0);
  REQUIRE(r.err.find("ERROR:") != std::string::npos);
  REQUIRE(r.err.find("/nonexistent") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("train, evaluate and rerun determinism") {
  const auto dir = fresh_dir("geoleak_cli_train");
  const auto gen = (dir / "gen").string();
  REQUIRE(run_cli("generate " + kTinyGen + " --out-dir " + gen, dir).exit_code == 0);

  const std::string common =
      " --tweets " + gen + "/tweets.csv --graph " + gen + "/graph.edges" +
      " --n-ts 3 --w-cnn 2 --n-cnn 2 --n-g 4,3 --k 2 --max-epochs 4 --p 0.5 --seed 11";
  const auto t1 = run_cli("train" + common + " --out-dir " + (dir / "run1").string(), dir);
  REQUIRE(t1.exit_code == 0);

  // log has header + one row per epoch
  {
    std::ifstream log(dir / "run1" / "training_log.csv");
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) ++lines;
    REQUIRE(lines == 4 + 1);
  }

  const auto t2 = run_cli("train" + common + " --out-dir " + (dir / "run2").string(), dir);
  REQUIRE(t2.exit_code == 0);
  REQUIRE(slurp_file(dir / "run1" / "checkpoint.json") ==
          slurp_file(dir / "run2" / "checkpoint.json"));
  REQUIRE(slurp_file(dir / "run1" / "training_log.csv") ==
          slurp_file(dir / "run2" / "training_log.csv"));

  const std::string eval_args =
      "evaluate --checkpoint " + (dir / "run1" / "checkpoint.json").string() +
      " --format csv";
  const auto e1 = run_cli(eval_args + " --out-dir " + (dir / "eval1").string(), dir);
  REQUIRE(e1.exit_code == 0);
  REQUIRE(fs::exists(dir / "eval1" / "report.json"));
  REQUIRE(fs::exists(dir / "eval1" / "percentiles.csv"));
  REQUIRE(fs::exists(dir / "eval1" / "mobility.csv"));
  const auto e2 = run_cli(eval_args + " --out-dir " + (dir / "eval2").string(), dir);
  REQUIRE(slurp_file(dir / "eval1" / "report.json") ==
          slurp_file(dir / "eval2" / "report.json"));

  // conflicting architecture flags are a config mismatch
  const auto bad = run_cli(
      "evaluate --checkpoint " + (dir / "run1" / "checkpoint.json").string() +
      " --n-g 9,9 --out-dir " + (dir / "evalbad").string(), dir);
  REQUIRE(bad.exit_code != 0);
  REQUIRE(bad.err.find("ERROR:config-mismatch:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("p = 1 warns that early stopping is disabled") {
  const auto dir = fresh_dir("geoleak_cli_p1");
  const auto gen = (dir / "gen").string();
  REQUIRE(run_cli("generate " + kTinyGen + " --out-dir " + gen, dir).exit_code == 0);
  const auto r = run_cli(
      "train --tweets " + gen + "/tweets.csv --graph " + gen + "/graph.edges" +
      " --n-ts 3 --w-cnn 2 --n-cnn 2 --n-g 3 --k 2 --max-epochs 2 --p 1.0 --seed 11" +
      " --out-dir " + (dir / "run").string(), dir);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.err.find("WARNING") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("GEOLEAK_SEED overrides the seed flag") {
  const auto d1 = fresh_dir("geoleak_cli_env1");
  const auto d2 = fresh_dir("geoleak_cli_env2");
  // same env seed, different flag seeds: outputs must match
  const auto r1 = run_cli("generate --n-users 20 --mean-degree 4 --n-slots 8 "
                          "--seed 1 --out-dir " + (d1 / "out").string(),
                          d1);
  (void)r1;
  setenv("GEOLEAK_SEED", "99", 1);
  const auto e1 = run_cli("generate --n-users 20 --mean-degree 4 --n-slots 8 "
                          "--seed 1 --out-dir " + (d1 / "env").string(), d1);
  const auto e2 = run_cli("generate --n-users 20 --mean-degree 4 --n-slots 8 "
                          "--seed 2 --out-dir " + (d2 / "env").string(), d2);
  unsetenv("GEOLEAK_SEED");
  REQUIRE(e1.exit_code == 0);
  REQUIRE(e2.exit_code == 0);
  REQUIRE(slurp_file(d1 / "env" / "tweets.csv") == slurp_file(d2 / "env" / "tweets.csv"));
  // and differs from the unoverridden run
  REQUIRE(slurp_file(d1 / "out" / "tweets.csv") != slurp_file(d1 / "env" / "tweets.csv"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("sweep writes, reruns identically, and resumes") {
  const auto dir = fresh_dir("geoleak_cli_sweep");
  const auto gen = (dir / "gen").string();
  REQUIRE(run_cli("generate " + kTinyGen + " --out-dir " + gen, dir).exit_code == 0);

  const std::string common =
      "sweep --tweets " + gen + "/tweets.csv --graph " + gen + "/graph.edges" +
      " --n-ts 3 --w-cnn 2 --n-cnn 2 --n-g 4,3 --k 2 --max-epochs 3" +
      " --p-values 0.3,0.7 --seeds 11,12 --jobs 2";
  const auto s1 = run_cli(common + " --out-dir " + (dir / "s1").string(), dir);
  REQUIRE(s1.exit_code == 0);
  const std::string sweep1 = slurp_file(dir / "s1" / "sweep.csv");
  {
    std::istringstream ss(sweep1);
    std::string line;
    int lines = 0;
    while (std::getline(ss, line)) ++lines;
    REQUIRE(lines == 1 + 4);  // header + 2 p * 2 seeds
  }

  const auto s2 = run_cli(common + " --out-dir " + (dir / "s2").string(), dir);
  REQUIRE(slurp_file(dir / "s2" / "sweep.csv") == sweep1);

  // resume: drop one row, rerun, file is restored
  {
    std::istringstream ss(sweep1);
    std::string line;
    std::ostringstream truncated;
    int i = 0;
    while (std::getline(ss, line)) {
      if (i++ == 2) continue;  // drop one data row
      truncated << line << "\n";
    }
    std::ofstream out(dir / "s1" / "sweep.csv");
    out << truncated.str();
  }
  const auto s3 = run_cli(common + " --out-dir " + (dir / "s1").string(), dir);
  REQUIRE(s3.exit_code == 0);
  REQUIRE(s3.out.find("resuming") != std::string::npos);
  REQUIRE(slurp_file(dir / "s1" / "sweep.csv") == sweep1);
  fs::remove_all(dir);
}

TEST_CASE("unknown flags are a usage error") {
  const auto dir = fresh_dir("geoleak_cli_usage");
  const auto r = run_cli("generate --definitely-not-a-flag 3", dir);
  REQUIRE(r.exit_code == 2);
  REQUIRE(r.err.find("ERROR:usage:") != std::string::npos);
  fs::remove_all(dir);
}
