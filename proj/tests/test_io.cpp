#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace chemostat;
using testsupport::data_path;

TEST(Io, LoadsBundledTable1) {
    const ChemostatModel model = load_model(data_path("table1.json"));
    EXPECT_EQ(model.n, 5);
    EXPECT_EQ(model.s_in, 1.0);
    EXPECT_EQ(model.u, 0.4);
    EXPECT_EQ(model.epsilon, 0.1);
    EXPECT_EQ(model.yields, (std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0}));
    EXPECT_EQ(model.kinetics[0].a, 0.84);
    EXPECT_EQ(model.kinetics[4].b, 0.36);
    EXPECT_EQ(model.perturbation.kind(), PerturbationKind::NeumannLaplacian);
    EXPECT_EQ(load_model(data_path("table1_case2.json")).perturbation.kind(),
              PerturbationKind::MutationCirculant);
}

TEST(Io, JsonRoundTripPreservesFingerprint) {
    const ChemostatModel model = load_model(data_path("table1_case2.json"));
    const ChemostatModel reparsed = model_from_json(model_to_json(model));
    EXPECT_EQ(model_fingerprint(model), model_fingerprint(reparsed));

    ChemostatModel changed = model;
    changed.u = 0.5;
    EXPECT_NE(model_fingerprint(model), model_fingerprint(changed));
}

TEST(Io, SchemaUsesExactFieldNames) {
    const nlohmann::json j = model_to_json(testsupport::table1_case1());
    for (const char* key : {"n", "s_in", "u", "epsilon", "yields", "kinetics", "perturbation"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["kinetics"][0]["type"], "monod");
    EXPECT_TRUE(j["kinetics"][0].contains("a"));
    EXPECT_TRUE(j["kinetics"][0].contains("b"));
    EXPECT_EQ(j["perturbation"]["type"], "neumann_laplacian");

    nlohmann::json constant = j;
    constant["perturbation"] = {{"type", "constant_matrix"},
                                {"matrix", {{-1.0, 1.0}, {1.0, -1.0}}}};
    constant["n"] = 2;
    constant["yields"] = {1.0, 2.0};
    constant["kinetics"] = {{{"type", "monod"}, {"a", 0.5}, {"b", 0.3}},
                            {{"type", "monod"}, {"a", 0.7}, {"b", 0.2}}};
    EXPECT_EQ(model_from_json(constant).perturbation.kind(), PerturbationKind::ConstantMatrix);
}

TEST(Io, RejectsBrokenInputs) {
    EXPECT_THROW(load_model("/nonexistent/model.json"), ConfigError);

    const std::string tmp = std::filesystem::temp_directory_path() / "chemostat_bad_model.json";
    std::ofstream(tmp) << "{ not json";
    EXPECT_THROW(load_model(tmp), ConfigError);

    std::ofstream(tmp) << R"({"n": 2, "s_in": 1.0, "u": 0.4, "epsilon": 0.1,
        "yields": [1.0], "kinetics": [{"type":"monod","a":0.5,"b":0.3}],
        "perturbation": {"type":"neumann_laplacian"}})";
    EXPECT_THROW(load_model(tmp), ConfigError); // length mismatch

    std::ofstream(tmp) << R"({"n": 1, "s_in": 1.0, "u": 0.4})";
    EXPECT_THROW(load_model(tmp), ConfigError); // missing fields
    std::remove(tmp.c_str());
}

TEST(Io, TrajectoryCsvUses17SignificantDigits) {
    EXPECT_EQ(format_float(0.1), "0.10000000000000001");
    EXPECT_EQ(format_float(1.0), "1");

    Trajectory traj;
    traj.times = {0.0, 1.0};
    traj.states.push_back(State{Eigen::VectorXd::Constant(2, 0.1), 0.5});
    traj.states.push_back(State{Eigen::VectorXd::Constant(2, 0.2), 0.25});
    const std::string csv = trajectory_csv(traj);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x1,x2,s");
    EXPECT_NE(csv.find("0.10000000000000001"), std::string::npos);
}

TEST(Io, ManifestWritesAtomically) {
    const auto dir = std::filesystem::temp_directory_path() / "chemostat_manifest_test";
    std::filesystem::create_directories(dir);
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.model_fingerprint = "deadbeefdeadbeef";
    manifest.seed = 42;
    manifest.outputs = {"trajectory.csv"};
    const std::string path = (dir / "simulate.manifest.json").string();
    write_manifest(path, manifest);
    EXPECT_TRUE(std::filesystem::exists(path));
    EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
    nlohmann::json j;
    std::ifstream(path) >> j;
    EXPECT_EQ(j["seed"], 42);
    EXPECT_EQ(j["command"], "simulate");
    std::filesystem::remove_all(dir);
}
