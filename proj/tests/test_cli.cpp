#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "test_util.hpp"

namespace {

int run(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// Workspace with a generated dataset and a ready-to-run config.
struct CliFixture {
  test_util::TempDir tmp{"cli"};

  CliFixture() {
    const std::string synth = std::string(EMOBENCH_CLI_BIN) +
                              " synth --out " + (tmp.path() / "data").string() +
                              " --subjects 3 --sessions 1 --trials 10 --classes 2"
                              " --eeg-channels 4 --aux-channels 8 --rate 128"
                              " --seconds 8 --class-separation 4 --subject-shift 0.1"
                              " --seed 5 > /dev/null 2>&1";
    REQUIRE(run(synth) == 0);
    write_file(tmp.path() / "config.json", R"({
  "dataset": "data/manifest.json",
  "output_dir": "out",
  "task": "subject_dependent",
  "split": {"ratio": "3:1:1", "stratify": false},
  "preproc": {"window_seconds": 4.0},
  "models": [{"id": "linear", "epochs": 60, "learning_rate": 0.2}],
  "seeds": [1]
})");
  }

  std::string cli(const std::string& args) const {
    return std::string(EMOBENCH_CLI_BIN) + " " + args + " --config " +
           (tmp.path() / "config.json").string() + " > /dev/null 2>&1";
  }
};

}  // namespace

TEST_CASE("run completes with exit code 0 and emits the report files") {
  CliFixture fx;
  CHECK(run(fx.cli("run")) == 0);
  for (const char* name : {"report.csv", "report.md", "ranks.csv", "units.csv",
                           "run_manifest.json"}) {
    CHECK(std::filesystem::exists(fx.tmp.path() / "out" / name));
  }
}

TEST_CASE("rerun hits the cache and reproduces the report bytes") {
  CliFixture fx;
  REQUIRE(run(fx.cli("run")) == 0);
  const std::string first = slurp(fx.tmp.path() / "out" / "report.csv");
  REQUIRE(run(fx.cli("run")) == 0);
  CHECK(slurp(fx.tmp.path() / "out" / "report.csv") == first);
}

TEST_CASE("staged subcommands reproduce the full run") {
  CliFixture fx;
  REQUIRE(run(fx.cli("run")) == 0);
  const std::string report = slurp(fx.tmp.path() / "out" / "report.csv");
  const std::string metrics = slurp(fx.tmp.path() / "out" / "metrics.json");

  // Re-derive metrics and reports from the persisted predictions.
  REQUIRE(run(fx.cli("eval")) == 0);
  CHECK(slurp(fx.tmp.path() / "out" / "metrics.json") == metrics);
  REQUIRE(run(fx.cli("report")) == 0);
  CHECK(slurp(fx.tmp.path() / "out" / "report.csv") == report);

  // And the full staged chain from scratch equals the one-shot run.
  REQUIRE(run(fx.cli("preprocess")) == 0);
  REQUIRE(run(fx.cli("split")) == 0);
  REQUIRE(run(fx.cli("train")) == 0);
  REQUIRE(run(fx.cli("eval")) == 0);
  REQUIRE(run(fx.cli("report")) == 0);
  CHECK(slurp(fx.tmp.path() / "out" / "report.csv") == report);
}

TEST_CASE("validation failures exit with code 1") {
  CliFixture fx;
  write_file(fx.tmp.path() / "config.json", R"({
  "dataset": "data/manifest.json",
  "output_dir": "out",
  "models": [{"id": "transformer"}],
  "seeds": [1]
})");
  CHECK(run(fx.cli("run")) == 1);
}

TEST_CASE("a missing dataset manifest exits with code 1") {
  CliFixture fx;
  write_file(fx.tmp.path() / "config.json", R"({
  "dataset": "nowhere/manifest.json",
  "output_dir": "out",
  "models": [{"id": "linear"}],
  "seeds": [1]
})");
  CHECK(run(fx.cli("run")) == 1);
}

TEST_CASE("validate subcommand reports issues and exit codes") {
  CliFixture fx;
  const std::string good = std::string(EMOBENCH_CLI_BIN) + " validate --manifest " +
                           (fx.tmp.path() / "data" / "manifest.json").string() +
                           " > /dev/null 2>&1";
  CHECK(run(good) == 0);
  const std::string bad = std::string(EMOBENCH_CLI_BIN) + " validate --manifest " +
                          (fx.tmp.path() / "data" / "missing.json").string() +
                          " > /dev/null 2>&1";
  CHECK(run(bad) == 1);
}

TEST_CASE("EMOBENCH_CACHE_DIR redirects the preprocessing cache") {
  CliFixture fx;
  const std::filesystem::path cache = fx.tmp.path() / "env_cache";
  const std::string command = "EMOBENCH_CACHE_DIR=" + cache.string() + " " + fx.cli("preprocess");
  REQUIRE(run(command) == 0);
  CHECK(std::filesystem::exists(cache));
  bool has_tensor = false;
  for (const auto& entry : std::filesystem::directory_iterator(cache)) {
    if (entry.path().extension() == ".ebc") has_tensor = true;
  }
  CHECK(has_tensor);
  CHECK(!std::filesystem::exists(fx.tmp.path() / "out" / "cache"));
}

TEST_CASE("seed override replaces the config seed list") {
  CliFixture fx;
  REQUIRE(run(fx.cli("run --seed-override 9")) == 0);
  CHECK(std::filesystem::exists(fx.tmp.path() / "out" /
                                "plan_subject_dependent_seed9.txt"));
  CHECK(!std::filesystem::exists(fx.tmp.path() / "out" /
                                 "plan_subject_dependent_seed1.txt"));
}
