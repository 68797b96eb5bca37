// Command-line front end: wires model JSON files to the library operations
// and emits the CSV/JSON artifacts (with reproducibility manifests).

#include "chemostat/chemostat.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace chemostat;
using nlohmann::json;

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse number '" + item + "'");
        }
    }
    if (values.empty()) throw ConfigError("empty number list");
    return values;
}

std::pair<double, double> parse_range(const std::string& text) {
    const auto parts = parse_double_list([&] {
        std::string t = text;
        for (char& c : t)
            if (c == ':') c = ',';
        return t;
    }());
    if (parts.size() != 2) throw ConfigError("expected range A:B, got '" + text + "'");
    return {parts[0], parts[1]};
}

std::vector<double> parse_grid(const std::string& text) {
    const auto parts = parse_double_list([&] {
        std::string t = text;
        for (char& c : t)
            if (c == ':') c = ',';
        return t;
    }());
    if (parts.size() != 3 || parts[2] < 1) throw ConfigError("expected grid A:B:N, got '" + text + "'");
    return linspace(parts[0], parts[1], static_cast<int>(parts[2]));
}

BasinSpec parse_region(const std::string& text, const ChemostatModel& model, int count,
                       std::uint64_t seed) {
    BasinSpec spec;
    spec.count = count;
    spec.seed = seed;
    if (text == "full") {
        spec.region = SampleRegion::FullBox;
        return spec;
    }
    std::stringstream ss(text);
    std::string kind, index, alpha;
    std::getline(ss, kind, ':');
    std::getline(ss, index, ':');
    std::getline(ss, alpha);
    if ((kind != "delta" && kind != "delta-minus") || index.empty() || alpha.empty())
        throw ConfigError("region must be full, delta:i:alpha, or delta-minus:i:alpha");
    spec.region = kind == "delta" ? SampleRegion::DeltaIAlpha : SampleRegion::DeltaMinus;
    spec.species = std::stoi(index) - 1; // species numbered from 1 on the CLI
    spec.alpha = std::stod(alpha);
    if (spec.species < 0 || spec.species >= model.n) throw ConfigError("region species out of range");
    return spec;
}

State default_diagram_initial(const ChemostatModel& model) {
    return make_initial_state(model, Eigen::VectorXd::Constant(model.n, 0.15), 0.25);
}

json equilibrium_json(const ChemostatModel& model, const Equilibrium& eq) {
    const StabilityReport report = classify(model, eq);
    json j;
    j["kind"] = to_string(eq.kind, eq.species);
    j["x"] = std::vector<double>(eq.state.x.data(), eq.state.x.data() + eq.state.x.size());
    j["s"] = eq.state.s;
    j["residual"] = eq.residual;
    j["spectral_margin"] = report.margin;
    return j;
}

struct ManifestTimer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void emit_manifest(const std::string& dir, const std::string& command,
                   const ChemostatModel& model, std::uint64_t seed, const json& settings,
                   const std::vector<std::string>& outputs, const ManifestTimer& timer) {
    RunManifest manifest;
    manifest.command = command;
    manifest.model_fingerprint = model_fingerprint(model);
    manifest.seed = seed;
    manifest.settings = settings;
    manifest.outputs = outputs;
    manifest.duration_seconds = timer.seconds();
    write_manifest((std::filesystem::path(dir) / (command + ".manifest.json")).string(), manifest);
}

int run(int argc, char** argv) {
    CLI::App app{"Perturbed chemostat simulator and steady-state analyzer"};
    app.require_subcommand(1);

    int jobs = 0;
    app.add_option("--jobs", jobs, "worker threads for sweeps (0 = auto)")
        ->envname("CHEMOSTAT_JOBS");

    std::string model_path;
    std::string out_path, outdir = ".";
    std::uint64_t seed = 0;
    double tfinal = 200.0;
    bool gnuplot = false;

    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--model", model_path, "model JSON file")->required();
    };

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "integrate one trajectory, emit CSV");
    add_model(simulate_cmd);
    std::string x0_text, kind_text = "coexistence", region_text = "full", eps_list_text;
    double s0 = 0.0;
    std::optional<double> eps_override;
    simulate_cmd->add_option("--x0", x0_text, "initial species concentrations, comma-separated")
        ->required();
    simulate_cmd->add_option("--s0", s0, "initial substrate concentration")->required();
    simulate_cmd->add_option("--epsilon", [&](const CLI::results_t& res) {
        eps_override = std::stod(res[0]);
        return true;
    }, "override the model's perturbation parameter");
    simulate_cmd->add_option("--tfinal", tfinal, "integration horizon");
    simulate_cmd->add_option("--out", out_path, "output CSV path (default: stdout)");

    // equilibrium
    auto* equilibrium_cmd = app.add_subcommand("equilibrium", "solve a steady state, JSON to stdout");
    add_model(equilibrium_cmd);
    equilibrium_cmd->add_option("--kind", kind_text, "washout | cep:i | coexistence");

    // cep
    auto* cep_cmd = app.add_subcommand("cep", "break-even table and winning species, JSON to stdout");
    add_model(cep_cmd);

    // ucrit
    auto* ucrit_cmd = app.add_subcommand("ucrit", "critical dilution rate over an epsilon grid, CSV");
    add_model(ucrit_cmd);
    std::string eps_grid_text;
    ucrit_cmd->add_option("--eps-grid", eps_grid_text, "epsilon grid A:B:N")->required();
    ucrit_cmd->add_option("--out", out_path, "output CSV path (default: stdout)");

    // diagram
    auto* diagram_cmd = app.add_subcommand("diagram", "operating diagram sweep (CSV files)");
    add_model(diagram_cmd);
    std::string eps_range_text, u_range_text;
    int resolution = 100;
    diagram_cmd->add_option("--eps", eps_range_text, "epsilon range A:B")->required();
    diagram_cmd->add_option("--u", u_range_text, "dilution range A:B")->required();
    diagram_cmd->add_option("--res", resolution, "grid resolution per axis");
    diagram_cmd->add_option("--x0", x0_text, "fixed initial species concentrations");
    diagram_cmd->add_option("--s0", s0, "fixed initial substrate");
    diagram_cmd->add_option("--tfinal", tfinal, "integration horizon");
    diagram_cmd->add_option("--outdir", outdir, "output directory");
    diagram_cmd->add_option("--seed", seed, "seed echoed in the manifest");
    diagram_cmd->add_flag("--gnuplot", gnuplot, "also emit a gnuplot script");

    // stability-map
    auto* map_cmd = app.add_subcommand("stability-map", "lambda(J) over the (eps,u) grid (CSV)");
    add_model(map_cmd);
    map_cmd->add_option("--eps", eps_range_text, "epsilon range A:B")->required();
    map_cmd->add_option("--u", u_range_text, "dilution range A:B")->required();
    map_cmd->add_option("--res", resolution, "grid resolution per axis");
    map_cmd->add_option("--outdir", outdir, "output directory");
    map_cmd->add_flag("--gnuplot", gnuplot, "also emit a gnuplot script");

    // lambda-scan
    auto* scan_cmd = app.add_subcommand("lambda-scan", "lambda(B(s,u,eps)) over the s-grid (CSV)");
    add_model(scan_cmd);
    double scan_u = 0.4;
    int s_resolution = 100;
    scan_cmd->add_option("--u", scan_u, "dilution rate")->required();
    scan_cmd->add_option("--eps-list", eps_list_text, "epsilon values, comma-separated")->required();
    scan_cmd->add_option("--sres", s_resolution, "s-grid resolution");
    scan_cmd->add_option("--outdir", outdir, "output directory");

    // basin
    auto* basin_cmd = app.add_subcommand("basin", "random-initial-condition convergence study");
    add_model(basin_cmd);
    int count = 100;
    basin_cmd->add_option("--region", region_text, "full | delta:i:alpha | delta-minus:i:alpha")
        ->required();
    basin_cmd->add_option("--count", count, "number of initial conditions")->required();
    basin_cmd->add_option("--seed", seed, "sampling seed");
    basin_cmd->add_option("--tfinal", tfinal, "integration horizon");
    basin_cmd->add_option("--out", out_path, "per-sample CSV path (optional)");

    // gap
    auto* gap_cmd = app.add_subcommand("gap", "Malkin-Gorshin trajectory gap per epsilon, CSV");
    add_model(gap_cmd);
    gap_cmd->add_option("--eps-list", eps_list_text, "epsilon values, comma-separated")->required();
    gap_cmd->add_option("--count", count, "number of initial conditions")->required();
    gap_cmd->add_option("--seed", seed, "sampling seed");
    gap_cmd->add_option("--region", region_text, "sampling region (default delta:i*:0.05)");
    gap_cmd->add_option("--out", out_path, "output CSV path (default: stdout)");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "run the full property suite");
    add_model(verify_cmd);
    verify_cmd->add_option("--seed", seed, "randomized-check seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    ManifestTimer timer;

    const ChemostatModel model = load_model(model_path);

    if (simulate_cmd->parsed()) {
        ChemostatModel m = model;
        if (eps_override) m.epsilon = *eps_override;
        IntegratorSettings settings;
        settings.t_final = tfinal;
        const auto x0 = parse_double_list(x0_text);
        const State init =
            make_initial_state(m, Eigen::Map<const Eigen::VectorXd>(x0.data(),
                                                                    static_cast<Eigen::Index>(x0.size())),
                               s0);
        const Trajectory traj = integrate(m, init, settings);
        const std::string csv = trajectory_csv(traj);
        if (out_path.empty()) {
            std::cout << csv;
        } else {
            write_text_atomic(out_path, csv);
            emit_manifest(std::filesystem::path(out_path).parent_path().string(), "simulate", m,
                          seed, settings_to_json(settings), {out_path}, timer);
        }
        return 0;
    }

    if (equilibrium_cmd->parsed()) {
        Equilibrium eq;
        if (kind_text == "washout") {
            eq = washout_equilibrium(model);
        } else if (kind_text == "coexistence") {
            eq = coexistence_equilibrium(model);
        } else if (kind_text.rfind("cep:", 0) == 0) {
            eq = cep_equilibrium(model, std::stoi(kind_text.substr(4)) - 1);
        } else {
            throw ConfigError("unknown equilibrium kind: " + kind_text);
        }
        std::cout << equilibrium_json(model, eq).dump(2) << "\n";
        return 0;
    }

    if (cep_cmd->parsed()) {
        const BreakEvenTable table = break_even(model);
        json j;
        j["break_even"] = json::array();
        for (double v : table.break_even)
            j["break_even"].push_back(std::isfinite(v) ? json(v) : json(nullptr));
        j["phi"] = std::isfinite(table.phi) ? json(table.phi) : json(nullptr);
        j["winner"] = table.winner ? json(*table.winner + 1) : json(nullptr);
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (ucrit_cmd->parsed()) {
        std::vector<std::pair<double, double>> curve;
        for (double eps : parse_grid(eps_grid_text)) curve.emplace_back(eps, u_crit(model, eps));
        const std::string csv = ucrit_csv(curve);
        if (out_path.empty()) {
            std::cout << csv;
        } else {
            write_text_atomic(out_path, csv);
        }
        return 0;
    }

    if (diagram_cmd->parsed()) {
        const auto [e0, e1] = parse_range(eps_range_text);
        const auto [u0, u1] = parse_range(u_range_text);
        IntegratorSettings settings;
        settings.t_final = tfinal;
        State init = default_diagram_initial(model);
        if (!x0_text.empty()) {
            const auto x0 = parse_double_list(x0_text);
            init = make_initial_state(
                model,
                Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size())),
                s0 > 0.0 ? s0 : 0.25);
        }
        SweepResult sweep =
            operating_diagram(model, e0, e1, u0, u1, resolution, init, settings, jobs);
        sweep.seed = seed;
        const auto dir = std::filesystem::path(outdir);
        std::filesystem::create_directories(dir);
        const std::string diagram_path = (dir / "operating_diagram.csv").string();
        const std::string curve_path = (dir / "ucrit_curve.csv").string();
        write_text_atomic(diagram_path, sweep_csv(sweep, "distance"));
        write_text_atomic(curve_path, ucrit_csv(sweep.ucrit_curve));
        std::vector<std::string> outputs{diagram_path, curve_path};
        if (gnuplot) {
            const std::string gp = (dir / "operating_diagram.gp").string();
            write_text_atomic(gp, sweep_gnuplot("operating_diagram.csv", "distance",
                                                "ucrit_curve.csv"));
            outputs.push_back(gp);
        }
        json settings_json = settings_to_json(settings);
        settings_json["resolution"] = resolution;
        emit_manifest(outdir, "diagram", model, seed, settings_json, outputs, timer);
        return 0;
    }

    if (map_cmd->parsed()) {
        const auto [e0, e1] = parse_range(eps_range_text);
        const auto [u0, u1] = parse_range(u_range_text);
        SweepResult sweep = stability_map(model, e0, e1, u0, u1, resolution, jobs);
        const auto dir = std::filesystem::path(outdir);
        std::filesystem::create_directories(dir);
        const std::string map_path = (dir / "stability_map.csv").string();
        const std::string curve_path = (dir / "ucrit_curve.csv").string();
        write_text_atomic(map_path, sweep_csv(sweep, "lambda_J"));
        write_text_atomic(curve_path, ucrit_csv(sweep.ucrit_curve));
        std::vector<std::string> outputs{map_path, curve_path};
        if (gnuplot) {
            const std::string gp = (dir / "stability_map.gp").string();
            write_text_atomic(gp, sweep_gnuplot("stability_map.csv", "lambda_J", "ucrit_curve.csv"));
            outputs.push_back(gp);
        }
        emit_manifest(outdir, "stability-map", model, seed, {{"resolution", resolution}}, outputs,
                      timer);
        return 0;
    }

    if (scan_cmd->parsed()) {
        const LambdaScan scan = lambda_scan(model, scan_u, parse_double_list(eps_list_text),
                                            s_resolution);
        const auto dir = std::filesystem::path(outdir);
        std::filesystem::create_directories(dir);
        const std::string path = (dir / "lambda_scan.csv").string();
        write_text_atomic(path, lambda_scan_csv(scan));
        emit_manifest(outdir, "lambda-scan", model, seed,
                      {{"u", scan_u}, {"s_resolution", s_resolution}}, {path}, timer);
        return 0;
    }

    if (basin_cmd->parsed()) {
        IntegratorSettings settings;
        settings.t_final = tfinal;
        const BasinSpec spec = parse_region(region_text, model, count, seed);
        Equilibrium target;
        if (model.epsilon > 0.0) {
            target = coexistence_equilibrium(model);
        } else {
            const BreakEvenTable table = break_even(model);
            if (!table.winner) throw DomainError("basin: no unique CEP winner at eps = 0");
            target = cep_equilibrium(model, *table.winner);
        }
        const BasinStudy study = basin_study(model, spec, target, settings, jobs);
        json j;
        j["region"] = region_text;
        j["count"] = count;
        j["seed"] = seed;
        j["target"] = to_string(target.kind, target.species);
        j["max_final_distance"] = study.max_distance;
        std::cout << j.dump(2) << "\n";
        if (!out_path.empty()) {
            std::ostringstream csv;
            csv << "sample,final_distance\n";
            for (std::size_t i = 0; i < study.final_distances.size(); ++i)
                csv << i << ',' << format_float(study.final_distances[i]) << '\n';
            write_text_atomic(out_path, csv.str());
            emit_manifest(std::filesystem::path(out_path).parent_path().string(), "basin", model,
                          seed, settings_to_json(settings), {out_path}, timer);
        }
        return 0;
    }

    if (gap_cmd->parsed()) {
        IntegratorSettings settings;
        BasinSpec spec;
        if (gap_cmd->count("--region")) {
            spec = parse_region(region_text, model, count, seed);
        } else {
            const BreakEvenTable table = break_even(model);
            if (!table.winner) throw DomainError("gap: no unique CEP winner for the default region");
            spec = BasinSpec{SampleRegion::DeltaIAlpha, *table.winner, 0.05, count, seed};
        }
        const auto initials = sample_initials(model, spec);
        const auto eps_values = parse_double_list(eps_list_text);
        const auto gaps = trajectory_gap(model, initials, eps_values, settings);
        std::ostringstream csv;
        csv << "epsilon,gap\n";
        for (std::size_t k = 0; k < eps_values.size(); ++k)
            csv << format_float(eps_values[k]) << ',' << format_float(gaps[k]) << '\n';
        if (out_path.empty()) {
            std::cout << csv.str();
        } else {
            write_text_atomic(out_path, csv.str());
        }
        return 0;
    }

    if (verify_cmd->parsed()) {
        const auto results = run_property_suite(model, seed, jobs);
        int hard_failures = 0;
        for (const auto& r : results) {
            const char* tag = r.pass ? "PASS" : (r.hard ? "FAIL" : "WARN");
            if (!r.pass && r.hard) ++hard_failures;
            std::cout << "[" << tag << "] " << r.name;
            if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
            std::cout << "\n";
        }
        std::cout << (hard_failures == 0 ? "verify: all hard checks passed\n"
                                         : "verify: " + std::to_string(hard_failures) +
                                               " hard check(s) failed\n");
        return hard_failures == 0 ? 0 : 3;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const chemostat::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
