#pragma once

#include "chemostat/errors.hpp"
#include "chemostat/integrator.hpp"
#include "chemostat/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace chemostat {

inline std::string format_float(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

// --- model JSON schema -------------------------------------------------------

inline nlohmann::json model_to_json(const ChemostatModel& model) {
    nlohmann::json j;
    j["n"] = model.n;
    j["s_in"] = model.s_in;
    j["u"] = model.u;
    j["epsilon"] = model.epsilon;
    j["yields"] = model.yields;
    j["kinetics"] = nlohmann::json::array();
    for (const auto& k : model.kinetics)
        j["kinetics"].push_back({{"type", "monod"}, {"a", k.a}, {"b", k.b}});
    switch (model.perturbation.kind()) {
    case PerturbationKind::NeumannLaplacian:
        j["perturbation"] = {{"type", "neumann_laplacian"}};
        break;
    case PerturbationKind::MutationCirculant:
        j["perturbation"] = {{"type", "mutation_circulant"}};
        break;
    case PerturbationKind::ConstantMatrix: {
        const auto& m = model.perturbation.matrix();
        std::vector<std::vector<double>> rows;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::vector<double> row(static_cast<std::size_t>(m.cols()));
            for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(i, c);
            rows.push_back(std::move(row));
        }
        j["perturbation"] = {{"type", "constant_matrix"}, {"matrix", rows}};
        break;
    }
    }
    return j;
}

inline ChemostatModel model_from_json(const nlohmann::json& j) {
    try {
        ChemostatModel model;
        model.n = j.at("n").get<int>();
        model.s_in = j.at("s_in").get<double>();
        model.u = j.at("u").get<double>();
        model.epsilon = j.at("epsilon").get<double>();
        model.yields = j.at("yields").get<std::vector<double>>();
        for (const auto& k : j.at("kinetics")) {
            if (k.at("type").get<std::string>() != "monod")
                throw ConfigError("unsupported kinetics type: " + k.at("type").get<std::string>());
            model.kinetics.push_back({k.at("a").get<double>(), k.at("b").get<double>()});
        }
        const auto& p = j.at("perturbation");
        const std::string type = p.at("type").get<std::string>();
        if (type == "neumann_laplacian") {
            model.perturbation = PerturbationTerm::neumann_laplacian();
        } else if (type == "mutation_circulant") {
            model.perturbation = PerturbationTerm::mutation_circulant();
        } else if (type == "constant_matrix") {
            const auto rows = p.at("matrix").get<std::vector<std::vector<double>>>();
            Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows.size())
                    throw ConfigError("perturbation matrix must be square");
                for (std::size_t c = 0; c < rows[i].size(); ++c)
                    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
            }
            model.perturbation = PerturbationTerm::constant(std::move(m));
        } else {
            throw ConfigError("unknown perturbation type: " + type);
        }
        validate(model);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model schema violation: ") + e.what());
    }
}

inline ChemostatModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model file is not valid JSON: " + std::string(e.what()));
    }
    return model_from_json(j);
}

/// FNV-1a hash of the canonical (key-sorted) model JSON; stable across runs
/// and platforms, used to stamp outputs with the exact configuration.
inline std::string model_fingerprint(const ChemostatModel& model) {
    const std::string dump = model_to_json(model).dump();
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

// --- file output --------------------------------------------------------------

/// Write-then-rename so readers never observe a partial file.
inline void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write file: " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream out;
    const Eigen::Index n = traj.states.front().x.size();
    out << "t";
    for (Eigen::Index i = 0; i < n; ++i) out << ",x" << (i + 1);
    out << ",s\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out << format_float(traj.times[k]);
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_float(traj.states[k].x(i));
        out << ',' << format_float(traj.states[k].s) << '\n';
    }
    return out.str();
}

/// Execution record written next to every file-producing command.
struct RunManifest {
    std::string command;
    std::string model_fingerprint;
    std::uint64_t seed = 0;
    nlohmann::json settings;
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;

    nlohmann::json to_json() const {
        return {{"command", command},       {"model_fingerprint", model_fingerprint},
                {"seed", seed},             {"settings", settings},
                {"outputs", outputs},       {"duration_seconds", duration_seconds}};
    }
};

inline void write_manifest(const std::string& path, const RunManifest& manifest) {
    write_text_atomic(path, manifest.to_json().dump(2) + "\n");
}

inline nlohmann::json settings_to_json(const IntegratorSettings& s) {
    return {{"rtol", s.rtol},
            {"atol", s.atol},
            {"t_final", s.t_final},
            {"max_step", s.effective_max_step()},
            {"sample_count", s.sample_count}};
}

} // namespace chemostat
