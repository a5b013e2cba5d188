#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "cli_runner.hpp"
#include "its/codebook.hpp"
#include "its/csv.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

using its::testing::run_cli;
using its::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures{ITS_FIXTURE_DIR};

its::testing::CliResult replay_run(const std::string& dataset, const fs::path& out,
                                   const std::string& run_id) {
  return run_cli({"run", "--corpus", (kFixtures / dataset / "corpus").string(), "--dataset", dataset,
                  "--mode", "replay", "--fixtures", (kFixtures / dataset / "replay").string(),
                  "--out", out.string(), "--run-id", run_id});
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = run_cli({"--help"});
  CHECK(help.code == 0);
  for (const char* sub : {"run", "simulate", "validate", "reduce-posthoc", "report"})
    CHECK(help.out.find(sub) != std::string::npos);

  const auto run_help = run_cli({"run", "--help"});
  CHECK(run_help.code == 0);
  for (const char* flag : {"--corpus", "--model", "--codes", "--temperature", "--out", "--mode",
                           "--fixtures", "--resume", "--credential-env"})
    CHECK(run_help.out.find(flag) != std::string::npos);
  CHECK(run_help.out.find("api-key") == std::string::npos);

  CHECK(run_cli({"run", "--bogus"}).code == 1);
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"simulate"}).code == 1);

  TempDir out;
  CHECK(run_cli({"run", "--corpus", (kFixtures / "teaching" / "corpus").string(), "--temperature",
                 "0.7", "--out", out.path().string()})
            .code == 1);
}

TEST_CASE("live mode without a credential fails before any work") {
  TempDir out;
  ::unsetenv("ITS_CLI_TEST_NO_KEY");
  const auto r = run_cli({"run", "--corpus", (kFixtures / "teaching" / "corpus").string(),
                          "--credential-env", "ITS_CLI_TEST_NO_KEY", "--out", out.path().string(),
                          "--run-id", "live"});
  CHECK(r.code == 2);
  CHECK(r.err.find("ITS_CLI_TEST_NO_KEY") != std::string::npos);
  CHECK_FALSE(fs::exists(out / "live"));
}

TEST_CASE("replay run, report and posthoc") {
  TempDir out;
  const auto r = replay_run("teaching", out.path(), "t1");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("total=135 unique=53 ITS=0.39") != std::string::npos);
  CHECK(fs::exists(out / "t1" / "manifest.json"));
  CHECK_FALSE(fs::exists(out / ".work" / "t1"));

  const auto again = replay_run("teaching", out.path(), "t1");
  CHECK(again.code != 0);

  fs::remove(out / "t1" / "plots" / "total.svg");
  CHECK(run_cli({"report", "--run-dir", (out / "t1").string()}).code == 0);
  CHECK(fs::exists(out / "t1" / "plots" / "total.svg"));

  const auto post = run_cli({"reduce-posthoc", "--run-dir", (out / "t1").string(), "--mode", "replay",
                             "--fixtures", (kFixtures / "teaching" / "replay").string()});
  CHECK(post.code == 0);
  CHECK(post.out.find("incremental=53 a_posteriori=53 delta=0") != std::string::npos);
}

TEST_CASE("a missing fixture names the digest and leaves no run directory") {
  TempDir out, empty;
  const auto r = run_cli({"run", "--corpus", (kFixtures / "teaching" / "corpus").string(), "--mode",
                          "replay", "--fixtures", empty.path().string(), "--out",
                          out.path().string(), "--run-id", "miss"});
  CHECK(r.code == 2);
  CHECK(r.err.find("FixtureMiss") != std::string::npos);
  CHECK_FALSE(fs::exists(out / "miss"));
}

TEST_CASE("simulate writes its tables") {
  TempDir out;
  const auto r = run_cli({"simulate", "--space", "100", "--iterations", "10", "--draw", "15",
                          "--replications", "200", "--out", out.path().string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "simulation.csv"));
  CHECK(fs::exists(out / "probability_curve.csv"));
  CHECK(fs::exists(out / "plots" / "simulation.svg"));
  CHECK(run_cli({"simulate", "--space", "10", "--draw", "15", "--out", out.path().string()}).code != 0);
  CHECK(run_cli({"simulate", "--space", "10", "--draw", "15", "--with-replacement", "--out",
                 (out / "wr").string()})
            .code == 0);
}

TEST_CASE("validate passes clean codebooks and flags duplicates") {
  TempDir out;
  REQUIRE(replay_run("scrum", out.path(), "s1").code == 0);
  const auto ok = run_cli({"validate", "--run-dir", (out / "s1").string(), "--vectors",
                           (kFixtures / "scrum" / "vectors.csv").string()});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("codes=66") != std::string::npos);
  CHECK(fs::exists(out / "s1" / "similarity" / "heatmap.svg"));

  // copy the vectors and make the second unique code point like the first
  const auto unique = its::codebook::read_codes_csv(out / "s1" / "cumulative_unique.csv");
  auto table = its::csv::read(kFixtures / "scrum" / "vectors.csv");
  std::vector<std::string> first;
  for (const auto& row : table.rows)
    if (row[0] == unique[0].code_id()) first = row;
  REQUIRE(!first.empty());
  for (auto& row : table.rows)
    if (row[0] == unique[1].code_id()) {
      row = first;
      row[0] = unique[1].code_id();
    }
  its::csv::write(out / "dup.csv", table);

  REQUIRE(replay_run("scrum", out.path(), "s2").code == 0);
  const auto bad = run_cli({"validate", "--run-dir", (out / "s2").string(), "--vectors",
                            (out / "dup.csv").string()});
  CHECK(bad.code == 3);
  CHECK(bad.out.find(unique[0].code_id()) != std::string::npos);
  CHECK(bad.out.find(unique[1].code_id()) != std::string::npos);

  CHECK(run_cli({"validate", "--run-dir", (out / "s1").string(), "--vectors",
                 (out / "missing.csv").string()})
            .code != 0);
  CHECK(run_cli({"validate", "--run-dir", (out / "nope").string(), "--vectors",
                 (kFixtures / "scrum" / "vectors.csv").string()})
            .code != 0);
}
