// Integration tests driving the installed CLI binary. The harness exports
// ADDITIVITY_CLI with the binary path; without it these tests fail loudly
// rather than silently passing.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "additivity/manifest.hpp"
#include "test_helpers.hpp"

using test_helpers::TempDir;
using test_helpers::write_file;

namespace {

std::string cli_path() {
  const char* env = std::getenv("ADDITIVITY_CLI");
  REQUIRE_MESSAGE(env != nullptr,
                  "ADDITIVITY_CLI must point at the CLI binary");
  return env;
}

int run_cli(const std::string& args) {
  std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), ("missing file: " + p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string truth_text() {
  return "model = mC1\n"
         "a = -1.5\n"
         "bVC = 2.5\n"
         "bAVC = 1.0\n"
         "marginal.VC = 0.4\n"
         "marginal.AVC = 0.3\n";
}

const char* kQuickCfg = "--chains 2 --iters 400 --warmup 200";

}  // namespace

TEST_CASE("simulate then validate exits cleanly") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  CHECK(run_cli("simulate --truth " + truth.string() +
                " --n 120 --seed 5 --out-dir " + dir.path().string()) == 0);
  CHECK(run_cli("validate --data " + dir.file("simulated.csv").string()) == 0);
  CHECK(run_cli("validate --crosstab VT,VC --crosstab B,C --data " +
                dir.file("simulated.csv").string()) == 0);
  CHECK(run_cli("validate --crosstab VT,XX --data " +
                dir.file("simulated.csv").string()) == 2);
  CHECK(std::filesystem::exists(dir.file("simulated_manifest.json")));
}

TEST_CASE("exit codes map error classes") {
  TempDir dir;
  // Missing file -> I/O error (4).
  CHECK(run_cli("validate --data " + dir.file("nope.csv").string()) == 4);
  // Malformed cell -> validation (2).
  auto bad = write_file(dir, "bad.csv",
                        "story_id,B,C,T,VB,VT,VC,AVB,AVT,AVC\n"
                        "s1,0,0,0,2,0,0,0,0,0\n");
  CHECK(run_cli("validate --data " + bad.string()) == 2);
  // Unknown model -> validation (2).
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 60 --seed 1 --out-dir " + dir.path().string()) == 0);
  CHECK(run_cli("fit --model mX1 --data " +
                dir.file("simulated.csv").string()) == 2);
  // CLI misuse -> 2.
  CHECK(run_cli("fit") == 2);
  // Help -> 0.
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("fit twice with one seed produces byte-identical artifacts") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 3 --out-dir " + dir.path().string()) == 0);
  std::string data = dir.file("simulated.csv").string();

  std::string base = std::string("fit --model mC1 --data ") + data +
                     " --seed 11 " + kQuickCfg;
  REQUIRE(run_cli(base + " --out-dir " + (dir.path() / "a").string()) == 0);
  REQUIRE(run_cli(base + " --out-dir " + (dir.path() / "b").string()) == 0);

  CHECK(slurp(dir.path() / "a" / "mC1_draws.csv") ==
        slurp(dir.path() / "b" / "mC1_draws.csv"));
  CHECK(slurp(dir.path() / "a" / "mC1_summary.txt") ==
        slurp(dir.path() / "b" / "mC1_summary.txt"));
  CHECK(slurp(dir.path() / "a" / "mC1_summary.csv") ==
        slurp(dir.path() / "b" / "mC1_summary.csv"));

  // Manifests agree on everything except the creation timestamp.
  additivity::RunManifest ma =
      additivity::load_manifest(dir.path() / "a" / "mC1_manifest.json");
  additivity::RunManifest mb =
      additivity::load_manifest(dir.path() / "b" / "mC1_manifest.json");
  CHECK(ma.command == mb.command);
  CHECK(ma.dataset_hash == mb.dataset_hash);
  CHECK(ma.config.seed == mb.config.seed);
  CHECK(ma.extra == mb.extra);
}

TEST_CASE("serial and parallel chains produce identical draws") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 4 --out-dir " + dir.path().string()) == 0);
  std::string data = dir.file("simulated.csv").string();
  std::string base = std::string("fit --model mC1 --data ") + data +
                     " --seed 21 " + kQuickCfg;
  REQUIRE(run_cli(base + " --out-dir " + (dir.path() / "par").string()) == 0);
  REQUIRE(run_cli(base + " --serial --out-dir " +
                  (dir.path() / "ser").string()) == 0);
  CHECK(slurp(dir.path() / "par" / "mC1_draws.csv") ==
        slurp(dir.path() / "ser" / "mC1_draws.csv"));
}

TEST_CASE("rerun from a manifest reproduces the artifacts") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 9 --out-dir " + dir.path().string()) == 0);
  std::string data = dir.file("simulated.csv").string();
  REQUIRE(run_cli("fit --model mC1 --data " + data + " --seed 31 " +
                  kQuickCfg + " --out-dir " +
                  (dir.path() / "orig").string()) == 0);
  REQUIRE(run_cli("rerun --manifest " +
                  (dir.path() / "orig" / "mC1_manifest.json").string() +
                  " --out-dir " + (dir.path() / "replay").string()) == 0);
  CHECK(slurp(dir.path() / "orig" / "mC1_draws.csv") ==
        slurp(dir.path() / "replay" / "mC1_draws.csv"));
  CHECK(slurp(dir.path() / "orig" / "mC1_summary.csv") ==
        slurp(dir.path() / "replay" / "mC1_summary.csv"));
  // The replay directory carries the manifest forward too.
  CHECK(std::filesystem::exists(dir.path() / "replay" / "mC1_manifest.json"));
}

TEST_CASE("commands never mutate their input files") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 83 --out-dir " + dir.path().string()) ==
          0);
  auto data = dir.file("simulated.csv");
  std::string data_before = additivity::file_hash_hex(data);
  std::string truth_before = additivity::file_hash_hex(truth);
  REQUIRE(run_cli("fit --model mC1 --data " + data.string() + " --seed 89 " +
                  kQuickCfg + " --out-dir " + (dir.path() / "o").string()) ==
          0);
  REQUIRE(run_cli("validate --data " + data.string()) == 0);
  CHECK(additivity::file_hash_hex(data) == data_before);
  CHECK(additivity::file_hash_hex(truth) == truth_before);
}

TEST_CASE("compare emits a table whose weights sum to one") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 200 --seed 13 --out-dir " + dir.path().string()) ==
          0);
  REQUIRE(run_cli("compare --models mC1,mC2,mC3 --data " +
                  dir.file("simulated.csv").string() + " --seed 17 " +
                  kQuickCfg + " --out-dir " + dir.path().string()) == 0);
  std::string csv = slurp(dir.file("compare.csv"));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  double total = 0.0;
  int rows = 0;
  while (std::getline(in, line)) {
    // weight is the fifth column
    std::istringstream cells(line);
    std::string cell;
    for (int i = 0; i < 5; ++i) std::getline(cells, cell, ',');
    total += std::stod(cell);
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sensitivity writes an overlay with one series per variant") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 200 --seed 19 --out-dir " + dir.path().string()) ==
          0);
  REQUIRE(run_cli("sensitivity --model mC1 --data " +
                  dir.file("simulated.csv").string() +
                  " --param bVC --priors \"normal(0,10),normal(-3,1)\" "
                  "--seed 23 " +
                  kQuickCfg + " --out-dir " + dir.path().string()) == 0);
  std::string grid = slurp(dir.file("mC1_bVC_prior_grid.csv"));
  CHECK(grid.find("normal(0,10)") != std::string::npos);
  CHECK(grid.find("normal(-3,1)") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("mC1_bVC_prior_report.txt")));
  CHECK(std::filesystem::exists(dir.file("mC1_bVC_prior_manifest.json")));
}

TEST_CASE("plotdata names files model_param_diagnostic") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 29 --out-dir " + dir.path().string()) ==
          0);
  REQUIRE(run_cli("plotdata --model mC1 --data " +
                  dir.file("simulated.csv").string() + " --seed 37 " +
                  kQuickCfg + " --out-dir " + dir.path().string()) == 0);
  for (const char* param : {"a", "bVC", "bAVC"}) {
    for (const char* diag : {"trace", "autocorr", "shrink", "density"}) {
      auto p = dir.file(std::string("mC1_") + param + "_" + diag + ".csv");
      CHECK_MESSAGE(std::filesystem::exists(p), p.string());
    }
  }
  // JSON form of the same series.
  REQUIRE(run_cli("plotdata --model mC1 --data " +
                  dir.file("simulated.csv").string() + " --seed 37 " +
                  kQuickCfg + " --json --out-dir " +
                  (dir.path() / "j").string()) == 0);
  CHECK(std::filesystem::exists(dir.path() / "j" / "mC1_bVC_trace.json"));
  CHECK(std::filesystem::exists(dir.path() / "j" / "mC1_bVC_density.json"));
}

TEST_CASE("inline predictors and prior overrides work through the CLI") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 41 --out-dir " + dir.path().string()) ==
          0);
  CHECK(run_cli("fit --predictor \"a + bVC*VC\" --outcome C --name tiny "
                "--prior \"bVC~normal(0,5)\" --data " +
                dir.file("simulated.csv").string() + " --seed 43 " +
                kQuickCfg + " --out-dir " + dir.path().string()) == 0);
  CHECK(std::filesystem::exists(dir.file("tiny_summary.txt")));
  CHECK(std::filesystem::exists(dir.file("tiny_draws.csv")));
}

TEST_CASE("model files drive fit and compare through the CLI") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 59 --out-dir " + dir.path().string()) ==
          0);
  auto models = write_file(dir, "models.json",
                           R"json([
    {"name": "own", "outcome": "C", "predictor": "a + bVC*VC + bAVC*AVC"},
    {"name": "icept", "outcome": "C", "predictor": "a"}
  ])json");
  std::string data = dir.file("simulated.csv").string();
  CHECK(run_cli("fit --model own --model-file " + models.string() +
                " --data " + data + " --seed 61 " + kQuickCfg +
                " --out-dir " + dir.path().string()) == 0);
  CHECK(std::filesystem::exists(dir.file("own_summary.txt")));
  CHECK(run_cli("compare --models own,icept --model-file " +
                models.string() + " --data " + data + " --seed 67 " +
                kQuickCfg + " --out-dir " + dir.path().string()) == 0);
  CHECK(slurp(dir.file("compare.txt")).find("own") != std::string::npos);
  // Unknown name in the file -> validation error.
  CHECK(run_cli("fit --model nope --model-file " + models.string() +
                " --data " + data) == 2);
}

TEST_CASE("the one-string grid form drives sensitivity") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 71 --out-dir " + dir.path().string()) ==
          0);
  REQUIRE(run_cli("sensitivity --model mC1 --data " +
                  dir.file("simulated.csv").string() +
                  " --grid \"param=bVC; priors=normal(0,10),normal(-3,1)\" "
                  "--seed 73 " +
                  kQuickCfg + " --out-dir " + dir.path().string()) == 0);
  CHECK(std::filesystem::exists(dir.file("mC1_bVC_prior_grid.csv")));
}

TEST_CASE("the json flag swaps structured outputs to JSON") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  REQUIRE(run_cli("simulate --truth " + truth.string() +
                  " --n 150 --seed 47 --out-dir " + dir.path().string()) ==
          0);
  REQUIRE(run_cli("fit --model mC1 --data " +
                  dir.file("simulated.csv").string() + " --seed 53 " +
                  kQuickCfg + " --json --out-dir " +
                  (dir.path() / "j").string()) == 0);
  CHECK(std::filesystem::exists(dir.path() / "j" / "mC1_summary.json"));
  CHECK(!std::filesystem::exists(dir.path() / "j" / "mC1_summary.csv"));
  // Draws stay delimited regardless.
  CHECK(std::filesystem::exists(dir.path() / "j" / "mC1_draws.csv"));
}

TEST_CASE("ADDITIVITY_SEED provides the default seed") {
  TempDir dir;
  auto truth = write_file(dir, "truth.txt", truth_text());
  std::string cmd_a = "ADDITIVITY_SEED=77 " + cli_path() + " simulate --truth " +
                      truth.string() + " --n 80 --out-dir " +
                      (dir.path() / "a").string() + " >/dev/null 2>&1";
  std::string cmd_b = cli_path() + " simulate --truth " + truth.string() +
                      " --n 80 --seed 77 --out-dir " +
                      (dir.path() / "b").string() + " >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd_a.c_str())) == 0);
  REQUIRE(WEXITSTATUS(std::system(cmd_b.c_str())) == 0);
  CHECK(slurp(dir.path() / "a" / "simulated.csv") ==
        slurp(dir.path() / "b" / "simulated.csv"));
}
