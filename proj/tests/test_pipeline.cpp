#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "support.hpp"

using namespace strataflow;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(STRATAFLOW_CLI) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("strataflow-test-" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Config, HashIsStableAndSensitive) {
    RunConfig a, b;
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    b.strat.eta = 0.06;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, JsonRoundTrip) {
    RunConfig c;
    c.scenario = "dumbbell";
    c.strat.gamma = 0.3;
    c.j = {1, 2};
    c.p = {0.25};
    c.seed = 42;
    auto back = config_from_json(to_json(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
    EXPECT_EQ(back.j, c.j);
}

TEST(Config, BadJsonIsParseError) {
    try {
        config_from_json(nlohmann::json{{"resolution", "many"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
}

TEST(Config, UnknownScenarioRejected) {
    RunConfig c;
    c.scenario = "torus";
    EXPECT_THROW(make_track(c), Error);
}

TEST(Aggregate, RefusesMixedHashes) {
    nlohmann::json a{{"config_hash", "aa"}}, b{{"config_hash", "bb"}};
    EXPECT_EQ(aggregate({a, a}).at("reports").size(), 2u);
    EXPECT_THROW(aggregate({a, b}), Error);
}

TEST(Stratify, PlaneHasEmptyStrata) {
    RunConfig c;
    c.scenario = "plane";
    c.samples = 12;
    auto rep = run_stratify(sft::flow("plane"), c);
    const auto& strata = rep.summary.at("strata");
    ASSERT_EQ(strata.size(), 4u);
    for (const auto& s : strata) {
        const auto& members = s.at("members");
        EXPECT_EQ(members.back().get<int>(), 0);
    }
}

TEST(Stratify, DeterministicAndHashed) {
    RunConfig c;
    c.scenario = "circle";
    c.samples = 10;
    const auto& f = sft::flow("circle");
    auto a = run_stratify(f, c), b = run_stratify(f, c);
    EXPECT_EQ(a.csv, b.csv);
    EXPECT_EQ(a.summary.dump(), b.summary.dump());
    EXPECT_EQ(a.summary.at("config_hash"), config_hash(c));
}

TEST(Stratify, RejectsStratumOutOfRange) {
    RunConfig c;
    c.scenario = "plane";
    c.samples = 4;
    c.j = {7};
    EXPECT_THROW(run_stratify(sft::flow("plane"), c), Error);
}

TEST(Cli, ExitCodes) {
    auto dir = scratch_dir("cli");
    EXPECT_EQ(run_cli("simulate --scenario torus --out " + dir.string()), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("simulate --scenario plane --out " + dir.string()), 0);
    std::ifstream in(dir / "plane.track");
    ASSERT_TRUE(in);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    RunConfig c;
    c.scenario = "plane";
    EXPECT_NE(text.find(config_hash(c)), std::string::npos);

    std::ofstream(dir / "bad.track") << "track 1 2 1 1\nslice zero 1 2 1\n";
    EXPECT_EQ(run_cli("stratify --track " + (dir / "bad.track").string() + " --out " + dir.string()), 1);
    EXPECT_EQ(run_cli("stratify --track " + (dir / "missing.track").string() + " --out " + dir.string()), 1);
}

TEST(Cli, StratifyWritesHashedOutputs) {
    auto dir = scratch_dir("stratify");
    ASSERT_EQ(run_cli("simulate --scenario plane --out " + dir.string()), 0);
    ASSERT_EQ(run_cli("stratify --track " + (dir / "plane.track").string() + " --samples 6 --out " + dir.string()), 0);
    std::ifstream csv(dir / "strata.csv");
    std::string first;
    std::getline(csv, first);
    EXPECT_EQ(first.rfind("# config_hash ", 0), 0u);
    std::ifstream js(dir / "strata.json");
    auto summary = nlohmann::json::parse(js);
    EXPECT_EQ(first.substr(14), summary.at("config_hash").get<std::string>());
}
