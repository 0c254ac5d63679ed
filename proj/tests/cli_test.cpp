#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "spikewalk/io.hpp"
#include "spikewalk/netgen.hpp"

namespace {

namespace fs = std::filesystem;
using spikewalk::io::read_file;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("spikewalk_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(SPIKEWALK_CLI) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string out(const std::string& name) const { return (dir_ / name).string(); }
  std::string stderr_text() const { return read_file(dir_ / "stderr"); }

  fs::path dir_;
};

TEST_F(Cli, RefusesACoarseTimestepWithAConfigError) {
  EXPECT_EQ(run("solve --dt 0.01 --out " + out("a")), 2);
  EXPECT_NE(stderr_text().find("timestep"), std::string::npos);
  EXPECT_FALSE(fs::exists(out("a")));
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("solve --no-such-flag"), 2);
  EXPECT_EQ(run("bench --length 0.5"), 2);
  EXPECT_EQ(run("solve --length 0.5 --rounding sideways"), 2);
  EXPECT_EQ(run("simulate --length 0.5 --absorb-policy keep"), 2);
  EXPECT_EQ(run("simulate --length 0.5 --start-nodes 10"), 2);
  EXPECT_EQ(run("solve --config " + out("missing.json")), 2);
  spikewalk::io::write_file(out("bad.json"), "{\"lenght\": 0.5}");
  EXPECT_EQ(run("solve --config " + out("bad.json")), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, RuntimeFailureExitsWithThree) {
  spikewalk::io::write_file(out("blocker"), "");
  EXPECT_EQ(run("solve --length 0.25 --walkers 10 --out " + out("blocker") + "/sub"), 3);
}

TEST_F(Cli, SolveIsByteIdenticalAcrossRerunsAndWorkerCounts) {
  const std::string base = "solve --length 0.5 --walkers 500 --runs 2 --seed 9 ";
  ASSERT_EQ(run(base + "--workers 1 --out " + out("a")), 0);
  ASSERT_EQ(run(base + "--workers 3 --out " + out("b")), 0);
  for (const char* f : {"solution.csv", "runs.csv", "summary.json"}) {
    EXPECT_EQ(read_file(dir_ / "a" / f), read_file(dir_ / "b" / f)) << f;
  }
  const std::string csv = read_file(dir_ / "a" / "solution.csv");
  EXPECT_EQ(csv.rfind("# config: {", 0), 0u);
  EXPECT_NE(csv.find("\"seed\":9"), std::string::npos);
}

TEST_F(Cli, ConfigFileValuesAreOverriddenByFlags) {
  spikewalk::io::write_file(out("c.json"), R"({"length": 0.5, "walkers": 100, "seed": 4})");
  ASSERT_EQ(run("solve --config " + out("c.json") + " --walkers 200 --out " + out("a")), 0);
  const std::string line = read_file(dir_ / "a" / "solution.csv");
  const auto config = nlohmann::json::parse(line.substr(10, line.find('\n') - 10));
  EXPECT_EQ(config["walkers"], 200);
  EXPECT_EQ(config["length"], 0.5);
  EXPECT_EQ(config["seed"], 4);
}

TEST_F(Cli, SimulateWritesItsArtifactsDeterministically) {
  const std::string base = "simulate --length 0.5 --tiles 2 --walkers 20 --neural-steps 20000 --seed 6 ";
  ASSERT_EQ(run(base + "--workers 1 --out " + out("a")), 0);
  ASSERT_EQ(run(base + "--workers 2 --out " + out("b")), 0);
  for (const char* f : {"spikes_in_flight.csv", "solution.csv", "record.json"}) {
    EXPECT_EQ(read_file(dir_ / "a" / f), read_file(dir_ / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir_ / "a" / "timing.json"));
}

TEST_F(Cli, GenerateEmitsAnImportableNetlist) {
  ASSERT_EQ(run("generate --length 0.25 --tiles 2 --walkers 7 --seed 11 --out " + out("g")), 0);
  const auto netlist = spikewalk::netgen::import_netlist(read_file(dir_ / "g" / "netlist.json"));
  EXPECT_EQ(netlist.seed, 11u);
  EXPECT_EQ(netlist.network.tiles.size(), 10u);
  EXPECT_EQ(netlist.network.walkers_per_tile, 7u);
}

TEST_F(Cli, OneSidedPresetWarnsAboutAsymmetry) {
  ASSERT_EQ(run("generate --length 0.25 --preset one-sided --seed 1 --out " + out("g")), 0);
  EXPECT_NE(stderr_text().find("warning"), std::string::npos);
}

TEST_F(Cli, BenchSweepProducesOneRowPerValue) {
  ASSERT_EQ(run("bench --length 0.25 --seed 5 --walkers 10 --sweep-axis tiles --sweep-values 1 2 3 "
                "--neural-steps 3000 --out " + out("b")),
            0);
  const auto doc = nlohmann::json::parse(read_file(dir_ / "b" / "bench.json"));
  ASSERT_EQ(doc["rows"].size(), 3u);
  EXPECT_EQ(doc["rows"][2]["value"], 3);
  EXPECT_TRUE(fs::exists(dir_ / "b" / "timing.json"));
  EXPECT_EQ(run("bench --length 0.25 --seed 5 --sweep-axis cores --sweep-values 1"), 2);
}

}  // namespace
