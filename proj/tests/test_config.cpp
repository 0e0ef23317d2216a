#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "qhydro/config.hpp"

using namespace qhydro;

namespace {

const std::filesystem::path config_dir = QHYDRO_CONFIG_DIR;

json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

/// Key path reported by validate_config, or "" if the config is accepted.
std::string rejected_key(const json& c) {
    try {
        validate_config(c);
    } catch (const ConfigError& e) {
        return e.key;
    }
    return "";
}

json minimal_quantum() {
    return json::parse(R"({"mode": "quantum", "lattice": {"dims": [6]}, "lambda": {"base": {"lambda0": 0.1, "lambda4": 1.0}}})");
}

} // namespace

TEST(Config, PublishedSchemaMatchesEmbedded) {
    EXPECT_EQ(read_json(config_dir / "schema.json"), experiment_schema());
}

TEST(Config, ShippedConfigsValidate) {
    int checked = 0;
    for (const auto& entry : std::filesystem::directory_iterator(config_dir)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() != ".json" || name == "schema.json") continue;
        const json c = read_json(entry.path());
        if (name == "invalid_lambda4.json") {
            EXPECT_EQ(rejected_key(c), "/lambda/base/lambda4");
        } else {
            EXPECT_EQ(rejected_key(c), "") << name;
        }
        ++checked;
    }
    EXPECT_GE(checked, 8);
}

TEST(Config, RequiredAndUnknownKeys) {
    EXPECT_EQ(rejected_key(json::object()), "/mode");
    EXPECT_EQ(rejected_key(minimal_quantum()), "");

    json c = minimal_quantum();
    c["lattice"]["colour"] = 3;
    EXPECT_EQ(rejected_key(c), "/lattice/colour");
    try {
        validate_config(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("unknown key"), std::string::npos) << e.what();
    }

    c = minimal_quantum();
    c["lambda"]["base"].erase("lambda4");
    EXPECT_EQ(rejected_key(c), "/lambda/base/lambda4");
}

TEST(Config, TypesEnumsAndBounds) {
    json c = minimal_quantum();
    c["lattice"]["dims"] = "six";
    EXPECT_EQ(rejected_key(c), "/lattice/dims");

    c = minimal_quantum();
    c["lattice"]["dims"] = json::array({6, 0});
    EXPECT_EQ(rejected_key(c), "/lattice/dims/1");

    c = minimal_quantum();
    c["lattice"]["dims"] = json::array({2, 2, 2, 2});
    EXPECT_EQ(rejected_key(c), "/lattice/dims");

    c = minimal_quantum();
    c["mode"] = "hydro";
    EXPECT_EQ(rejected_key(c), "/mode");

    for (double b : {0.0, -1.0}) {
        c = minimal_quantum();
        c["lambda"]["base"]["lambda4"] = b;
        EXPECT_EQ(rejected_key(c), "/lambda/base/lambda4");
    }

    c = minimal_quantum();
    c["lattice"]["W"] = {{"1,x", 0.5}};
    EXPECT_EQ(rejected_key(c), "/lattice/W/1,x");
    c["lattice"]["W"] = {{"1,0", 0.5}, {"-1,1", 0.2}};
    EXPECT_EQ(rejected_key(c), "");

    c = minimal_quantum();
    c["seed"] = 1.5;
    EXPECT_EQ(rejected_key(c), "/seed");
}

TEST(Config, ReferencedDefinitions) {
    json c = json::parse(R"({"mode": "eos", "eos": {"grid": {"lambda0": {"min": 0, "max": 1, "count": 0},
        "lambda4": {"min": 1, "max": 2, "count": 2}}}})");
    EXPECT_EQ(rejected_key(c), "/eos/grid/lambda0/count");
    c["eos"]["grid"]["lambda0"]["count"] = 3;
    EXPECT_EQ(rejected_key(c), "");
    c["selftest"] = {{"tolerances", {{"virial", 1e-9}}}};
    EXPECT_EQ(rejected_key(c), "");
    c["selftest"]["tolerances"]["speed"] = 1.0;
    EXPECT_EQ(rejected_key(c), "/selftest/tolerances/speed");
}

TEST(Config, OverridesParseJsonWithStringFallback) {
    json c = minimal_quantum();
    apply_override(c, "lambda.base.lambda0=-0.25");
    EXPECT_EQ(c["lambda"]["base"]["lambda0"], -0.25);
    apply_override(c, "lattice.dims.0=8");
    EXPECT_EQ(c["lattice"]["dims"], json::array({8}));
    apply_override(c, "output=runs/a");
    EXPECT_EQ(c["output"], "runs/a");
    apply_override(c, "quantum.times=[0,1,2]");
    EXPECT_EQ(c["quantum"]["times"], json::array({0, 1, 2}));
    apply_override(c, "diagnostics.export_operators=true");
    EXPECT_EQ(c["diagnostics"]["export_operators"], true);

    auto key_of = [&](const std::string& a) {
        try {
            apply_override(c, a);
        } catch (const ConfigError& e) {
            return e.key;
        }
        return std::string("accepted");
    };
    EXPECT_EQ(key_of("lattice.dims.3=1"), "/lattice/dims/3");
    EXPECT_EQ(key_of("lattice.dims.x=1"), "/lattice/dims/x");
    EXPECT_EQ(key_of("lattice..dims=1"), "/lattice");
    EXPECT_EQ(key_of("novalue"), "");
}

TEST(Config, LoadAppliesOverridesBeforeValidation) {
    const auto path = (config_dir / "invalid_lambda4.json").string();
    EXPECT_THROW(load_config(path), ConfigError);
    json c = load_config(path, {"lambda.base.lambda4=2.0"});
    EXPECT_EQ(c["lambda"]["base"]["lambda4"], 2.0);
    EXPECT_THROW(load_config((config_dir / "missing.json").string()), ConfigError);
}

TEST(Config, ProfileBuilder) {
    json c = minimal_quantum();
    c["lambda"]["modes"] = json::parse(R"([{"component": "lambda0", "k": [1], "sin": 0.5, "omega": 2},
                                           {"component": "lambda4", "k": [2], "cos": 0.3}])");
    FourierProfile p = profile_from(c);
    EXPECT_EQ(p.base[0], 0.1);
    EXPECT_EQ(p.base[4], 1.0);
    ASSERT_EQ(p.modes.size(), 2u);
    EXPECT_EQ(p.modes[0].component, 0);
    EXPECT_EQ(p.modes[0].sin_coeff, 0.5);
    EXPECT_EQ(p.modes[0].omega, 2.0);
    EXPECT_EQ(p.modes[1].component, 4);
    EXPECT_EQ(p.modes[1].wavevector[0], 2);

    // schema-valid but lambda4 dips below zero at some point of the torus
    c["lambda"]["modes"][1]["sin"] = 1.0;
    try {
        profile_from(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key, "/lambda/base/lambda4");
    }
}

TEST(Config, PotentialBuilder) {
    json c = minimal_quantum();
    c["lattice"]["dims"] = json::array({6, 6});
    c["lattice"]["W"] = {{"1,0", 0.5}, {"1,1", 0.25}};
    const Lattice lat = lattice_from(c);
    PairPotential w = potential_from(c, lat);
    EXPECT_FALSE(w.is_zero());
    EXPECT_EQ(w.range(), 2); // ceil(sqrt 2)

    c["lattice"]["W"] = {{"1,0,0", 0.5}};
    EXPECT_THROW(potential_from(c, lat), ConfigError);
    c["lattice"].erase("W");
    EXPECT_TRUE(potential_from(c, lat).is_zero());
}

TEST(Config, RangesAndFreeEos) {
    auto r = range_from(json::parse(R"({"min": 1, "max": 2, "count": 5})"));
    ASSERT_EQ(r.size(), 5u);
    EXPECT_DOUBLE_EQ(r[1], 1.25);
    EXPECT_EQ(range_from(json::parse(R"({"min": 3, "max": 9, "count": 1})")), std::vector<double>{3});

    json c = json::parse(R"({"mode": "eos", "eos": {"kind": "lattice", "modes": [10]}})");
    EXPECT_EQ(free_eos_from(c)->kind(), "lattice_free");
    c["eos"] = {{"kind", "continuum"}, {"dimension", 2}};
    auto m = free_eos_from(c);
    EXPECT_EQ(m->kind(), "continuum_free");
    EXPECT_EQ(m->dimension(), 2);
    c["eos"] = {{"kind", "lattice"}};
    EXPECT_THROW(free_eos_from(c), ConfigError);
}
