#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qhydro/cli.hpp"

using namespace qhydro;
namespace fs = std::filesystem;

namespace {

const fs::path config_dir = QHYDRO_CONFIG_DIR;
const fs::path scratch = QHYDRO_SCRATCH_DIR;

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "qhydro");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
    const fs::path p = scratch / name;
    fs::remove_all(p);
    return p;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string config(const std::string& name) { return (config_dir / name).string(); }

} // namespace

TEST(Cli, EosRunWritesHashedManifest) {
    const auto dir = fresh("eos");
    auto r = run_cli({"eos", "--out", dir.string(), "--set", "eos.kind=lattice", "--set", "eos.modes=[8]"});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(fs::exists(dir / "eos_table.csv"));
    const json m = read_json(dir / "manifest.json");
    EXPECT_EQ(m["mode"], "eos");
    std::vector<std::string> paths;
    for (const auto& f : m["files"]) {
        paths.push_back(f["path"]);
        EXPECT_EQ(f["sha256"], sha256_file((dir / f["path"].get<std::string>()).string())) << f["path"];
    }
    EXPECT_NE(std::find(paths.begin(), paths.end(), "eos_table.csv"), paths.end());
    EXPECT_NE(std::find(paths.begin(), paths.end(), "config.json"), paths.end());
    EXPECT_NE(r.err.find("[timing]"), std::string::npos);
    EXPECT_EQ(read_json(dir / "eos_summary.json")["points"], 9 * 4);
}

TEST(Cli, SchemaViolationNamesTheKey) {
    const auto dir = fresh("invalid");
    auto r = run_cli({"quantum", "--config", config("invalid_lambda4.json"), "--out", dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("lambda4"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir));

    r = run_cli({"quantum", "--config", config("quantum_chain.json"), "--out", dir.string(), "--set", "lambda.base.lambda4=0"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("lambda4"), std::string::npos) << r.err;

    r = run_cli({"quantum", "--config", config("quantum_chain.json"), "--out", dir.string(), "--set", "quantum.colour=1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("colour"), std::string::npos) << r.err;
}

TEST(Cli, UsageAndModeMismatch) {
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"hydro"}).code, 2);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
    auto r = run_cli({"euler", "--config", config("quantum_chain.json"), "--out", fresh("mismatch").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("/mode"), std::string::npos);
    EXPECT_EQ(run_cli({"eos", "--threads", "-1", "--out", fresh("threads").string()}).code, 2);
}

TEST(Cli, NumericalFailureWritesErrorReport) {
    const auto dir = fresh("negative_pressure");
    auto r = run_cli({"euler", "--config", config("euler_pulse.json"), "--out", dir.string(), "--set",
                      "euler.initial.pressure.base=-1", "--set", "euler.pressure=eos"});
    EXPECT_EQ(r.code, 3);
    const json e = read_json(dir / "error.json");
    EXPECT_EQ(e["error"], "DomainError");
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, QuantumRun) {
    const auto dir = fresh("quantum");
    auto r = run_cli({"quantum", "--config", config("quantum_chain.json"), "--out", dir.string(), "--set", "quantum.times=[0,1]",
                      "--set", "lattice.dims=[6]"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json s = read_json(dir / "quantum_summary.json");
    EXPECT_LT(s["drifts"]["N"].get<double>(), 1e-10);
    EXPECT_LT(s["drifts"]["H"].get<double>(), 1e-10);
    EXPECT_EQ(s["entropy"].size(), 2u);
    EXPECT_TRUE(s.contains("note")); // W != 0
    EXPECT_TRUE(fs::exists(dir / "quantum_occupations_0001.csv"));
}

TEST(Cli, CompareRun) {
    const auto dir = fresh("compare");
    auto r = run_cli({"compare", "--config", config("compare_standard.json"), "--out", dir.string(), "--set",
                      "compare.times=[0,1]", "--set", "compare.refine=2", "--set", "lattice.dims=[8]"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json rep = read_json(dir / "compare_report.json");
    EXPECT_EQ(rep["sites"], 8);
    EXPECT_EQ(rep["entropy_series"].size(), 2u);
    EXPECT_TRUE(fs::exists(dir / "compare_frame_0000.csv"));
}

TEST(Cli, EulerRunIsThreadIndependent) {
    std::vector<json> manifests;
    for (int threads : {1, 3}) {
        const auto dir = fresh("euler_t" + std::to_string(threads));
        auto r = run_cli({"euler", "--config", config("euler_pulse.json"), "--out", dir.string(), "--threads",
                          std::to_string(threads), "--set", "euler.cells=[64]"});
        ASSERT_EQ(r.code, 0) << r.err;
        manifests.push_back(read_json(dir / "manifest.json")["files"]);
    }
    EXPECT_EQ(manifests[0], manifests[1]);
}

TEST(Cli, DiagRun) {
    const auto dir = fresh("diag");
    auto r = run_cli({"diag", "--config", config("diag.json"), "--out", dir.string(), "--set", "diagnostics.boundary_sizes=[4,6]"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json d = read_json(dir / "diag_report.json");
    for (const auto& c : d["car"]) EXPECT_LT(c["max_defect"].get<double>(), 1e-12);
    EXPECT_LT(d["duality"]["max_deviation"].get<double>(), 1e-6);
    EXPECT_TRUE(fs::exists(dir / "hamiltonian_coo.txt"));
}

TEST(Cli, CorruptedPressureCacheIsRejected) {
    const auto dir = fresh("cache");
    auto first = acceptance::load_pressure_cache(dir.string(), 2);
    ASSERT_TRUE(first.cache && first.problem.empty());
    auto again = acceptance::load_pressure_cache(dir.string(), 2);
    ASSERT_TRUE(again.cache && again.problem.empty());
    {
        std::ofstream os(dir / "pressure_cache_d3.csv", std::ios::app);
        os << "garbage\n";
    }
    auto bad = acceptance::load_pressure_cache(dir.string(), 2);
    EXPECT_FALSE(bad.cache);
    EXPECT_NE(bad.problem.find("checksum mismatch"), std::string::npos);

    AcceptanceOptions o;
    o.eos_cache_dir = dir.string();
    auto c = acceptance::euler(o);
    EXPECT_FALSE(c.passed && !c.skipped);
    EXPECT_NE(c.line().find("checksum mismatch"), std::string::npos) << c.line();
}

TEST(Cli, RandomizedCriteriaAgreeAcrossSeeds) {
    for (std::uint64_t seed : {1, 2}) {
        AcceptanceOptions o;
        o.seed = seed;
        for (const auto& c : {acceptance::car(o), acceptance::duality(o), acceptance::entropy_inequality(o)})
            EXPECT_TRUE(c.passed && !c.skipped) << "seed " << seed << ": " << c.line();
    }
}
