#pragma once

#include "chemostat/equilibria.hpp"
#include "chemostat/errors.hpp"
#include "chemostat/integrator.hpp"
#include "chemostat/io.hpp"
#include "chemostat/model.hpp"
#include "chemostat/random.hpp"
#include "chemostat/stability.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace chemostat {

/// Runs fn(i) for i in [0, count) on `jobs` threads (0 = hardware default).
/// Work items write to disjoint preallocated slots, so the merged result is
/// independent of scheduling.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count ? count : 1)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed) std::rethrow_exception(error);
}

inline std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    if (count == 1) {
        v[0] = lo;
        return v;
    }
    for (int k = 0; k < count; ++k)
        v[static_cast<std::size_t>(k)] = lo + (hi - lo) * static_cast<double>(k) / (count - 1);
    return v;
}

// --- random initial conditions -----------------------------------------------

enum class SampleRegion { FullBox, DeltaIAlpha, DeltaMinus };

/// Sampling request: FullBox draws from (0,10]^n x [0,s_in]; the Delta
/// regions draw uniformly from the invariant simplex b <= s_in and keep the
/// samples with x_i >= alpha (DeltaIAlpha) or x_i < alpha (DeltaMinus).
struct BasinSpec {
    SampleRegion region = SampleRegion::FullBox;
    int species = 0; // 0-based index i of the constraint coordinate
    double alpha = 0.0;
    int count = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline State sample_full_box(const ChemostatModel& model, SplitMix64& rng) {
    State st;
    st.x.resize(model.n);
    for (int i = 0; i < model.n; ++i) st.x(i) = 10.0 * (1.0 - rng.uniform01()); // (0, 10]
    st.s = model.s_in * rng.uniform01();
    return st;
}

/// Uniform draw from the simplex {(x, s) : x >= 0, s >= 0,
/// s + sum x_j / Y_+ <= s_in} via normalized exponentials.
inline State sample_delta(const ChemostatModel& model, SplitMix64& rng) {
    const int n = model.n;
    Eigen::VectorXd e(n + 2);
    for (int i = 0; i < n + 2; ++i) e(i) = rng.exponential();
    const double total = e.sum();
    State st;
    st.x = model.y_plus() * model.s_in / total * e.head(n);
    st.s = model.s_in * e(n) / total;
    return st;
}

} // namespace detail

inline std::vector<State> sample_initials(const ChemostatModel& model, const BasinSpec& spec) {
    if (spec.count < 1) throw ConfigError("sample count must be >= 1");
    if (spec.region != SampleRegion::FullBox && (spec.species < 0 || spec.species >= model.n))
        throw ConfigError("sample species index out of range");
    SplitMix64 rng(spec.seed);
    std::vector<State> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    long rejections = 0;
    while (out.size() < static_cast<std::size_t>(spec.count)) {
        State st = spec.region == SampleRegion::FullBox ? detail::sample_full_box(model, rng)
                                                        : detail::sample_delta(model, rng);
        bool keep = true;
        if (spec.region == SampleRegion::DeltaIAlpha) keep = st.x(spec.species) >= spec.alpha;
        if (spec.region == SampleRegion::DeltaMinus) keep = st.x(spec.species) < spec.alpha;
        if (keep) {
            out.push_back(std::move(st));
        } else if (++rejections > 100000) {
            throw ConfigError("sampling region appears empty (100000 rejections)");
        }
    }
    return out;
}

/// Batch convergence study: integrate every sampled initial condition and
/// record its final distance to the target equilibrium.
struct BasinStudy {
    BasinSpec spec;
    std::vector<State> initials;
    std::vector<double> final_distances;
    double max_distance = 0.0;
};

inline BasinStudy basin_study(const ChemostatModel& model, const BasinSpec& spec,
                              const Equilibrium& target, const IntegratorSettings& settings,
                              int jobs = 0) {
    BasinStudy study;
    study.spec = spec;
    study.initials = sample_initials(model, spec);
    study.final_distances.resize(study.initials.size());
    parallel_for(study.initials.size(), jobs, [&](std::size_t i) {
        const Trajectory traj = integrate(model, study.initials[i], settings);
        study.final_distances[i] = distance(traj.final_state(), target.state);
    });
    for (double d : study.final_distances) study.max_distance = std::max(study.max_distance, d);
    return study;
}

// --- parameter-plane sweeps ----------------------------------------------------

/// Gridded (eps, u) sweep rows; quantity is the distance to washout at
/// t_final (operating diagram) or lambda(J) at the coexistence equilibrium
/// (stability map). Rows are ordered lexicographically by (eps, u).
struct SweepResult {
    struct Row {
        double epsilon = 0.0;
        double u = 0.0;
        double quantity = 0.0;
        std::string status; // "ok", "no-coexistence", or "error:<reason>"
    };
    std::vector<Row> rows;
    double eps_min = 0.0, eps_max = 0.0, u_min = 0.0, u_max = 0.0;
    int resolution = 0;
    std::vector<std::pair<double, double>> ucrit_curve; // (eps, u_c(eps))
    std::string model_fingerprint;
    std::uint64_t seed = 0;
};

inline ChemostatModel with_parameters(const ChemostatModel& model, double epsilon, double u) {
    ChemostatModel m = model;
    m.epsilon = epsilon;
    m.u = u;
    return m;
}

/// Distance-to-washout map reproducing the operating diagram: one trajectory
/// per grid cell from the same fixed initial condition.
inline SweepResult operating_diagram(const ChemostatModel& model, double eps_min, double eps_max,
                                     double u_min, double u_max, int resolution,
                                     const State& fixed_initial, const IntegratorSettings& settings,
                                     int jobs = 0) {
    if (resolution < 1) throw ConfigError("operating_diagram: resolution must be >= 1");
    const auto eps_grid = linspace(eps_min, eps_max, resolution);
    const auto u_grid = linspace(u_min, u_max, resolution);

    SweepResult result;
    result.eps_min = eps_min;
    result.eps_max = eps_max;
    result.u_min = u_min;
    result.u_max = u_max;
    result.resolution = resolution;
    result.model_fingerprint = model_fingerprint(model);
    result.rows.resize(eps_grid.size() * u_grid.size());

    const State washout = washout_state(model);
    parallel_for(result.rows.size(), jobs, [&](std::size_t cell) {
        const std::size_t ie = cell / u_grid.size(), iu = cell % u_grid.size();
        auto& row = result.rows[cell];
        row.epsilon = eps_grid[ie];
        row.u = u_grid[iu];
        try {
            const ChemostatModel m = with_parameters(model, row.epsilon, row.u);
            const Trajectory traj = integrate(m, fixed_initial, settings);
            row.quantity = distance(traj.final_state(), washout);
            row.status = "ok";
        } catch (const std::exception& e) {
            row.quantity = std::numeric_limits<double>::quiet_NaN();
            row.status = std::string("error:") + e.what();
        }
    });

    for (double eps : eps_grid) result.ucrit_curve.emplace_back(eps, u_crit(model, eps));
    return result;
}

/// lambda(J) at the coexistence equilibrium over the admissible part of the
/// (eps, u) grid. The eps = 0 column falls back to the CEP equilibrium of the
/// winning species; cells at or above u_c(eps) report "no-coexistence".
inline SweepResult stability_map(const ChemostatModel& model, double eps_min, double eps_max,
                                 double u_min, double u_max, int resolution, int jobs = 0) {
    if (resolution < 1) throw ConfigError("stability_map: resolution must be >= 1");
    const auto eps_grid = linspace(eps_min, eps_max, resolution);
    const auto u_grid = linspace(u_min, u_max, resolution);

    SweepResult result;
    result.eps_min = eps_min;
    result.eps_max = eps_max;
    result.u_min = u_min;
    result.u_max = u_max;
    result.resolution = resolution;
    result.model_fingerprint = model_fingerprint(model);
    result.rows.resize(eps_grid.size() * u_grid.size());

    std::vector<double> uc(eps_grid.size());
    for (std::size_t ie = 0; ie < eps_grid.size(); ++ie) {
        uc[ie] = u_crit(model, eps_grid[ie]);
        result.ucrit_curve.emplace_back(eps_grid[ie], uc[ie]);
    }

    parallel_for(result.rows.size(), jobs, [&](std::size_t cell) {
        const std::size_t ie = cell / u_grid.size(), iu = cell % u_grid.size();
        auto& row = result.rows[cell];
        row.epsilon = eps_grid[ie];
        row.u = u_grid[iu];
        row.quantity = std::numeric_limits<double>::quiet_NaN();
        if (row.u >= uc[ie] || !(row.u > 0.0)) {
            row.status = "no-coexistence";
            return;
        }
        try {
            const ChemostatModel m = with_parameters(model, row.epsilon, row.u);
            Equilibrium eq;
            if (row.epsilon == 0.0) {
                const BreakEvenTable table = break_even(m);
                if (!table.winner) throw DomainError("no unique CEP winner");
                eq = cep_equilibrium(m, *table.winner);
            } else {
                eq = coexistence_equilibrium(m);
            }
            row.quantity = classify(m, eq).margin;
            row.status = "ok";
        } catch (const std::exception& e) {
            row.status = std::string("error:") + e.what();
        }
    });
    return result;
}

/// Table of lambda(B(s, u, eps)) over a dense s-grid, one column per eps.
struct LambdaScan {
    double u = 0.0;
    std::vector<double> s_grid;
    std::vector<double> eps_values;
    std::vector<std::vector<double>> lambda; // lambda[e][k] over the s-grid
};

inline LambdaScan lambda_scan(const ChemostatModel& model, double u,
                              const std::vector<double>& eps_values, int s_resolution) {
    if (s_resolution < 2) throw ConfigError("lambda_scan: s_resolution must be >= 2");
    LambdaScan scan;
    scan.u = u;
    scan.s_grid = linspace(0.0, model.s_in, s_resolution);
    scan.eps_values = eps_values;
    for (double eps : eps_values) {
        std::vector<double> column;
        column.reserve(scan.s_grid.size());
        for (double s : scan.s_grid)
            column.push_back(spectral_abscissa(assemble_B(model, s, u, eps)));
        scan.lambda.push_back(std::move(column));
    }
    return scan;
}

// --- CSV artifacts --------------------------------------------------------------

inline std::string sweep_csv(const SweepResult& result, const std::string& quantity_name) {
    std::ostringstream out;
    out << "epsilon,u," << quantity_name << ",status\n";
    for (const auto& row : result.rows)
        out << format_float(row.epsilon) << ',' << format_float(row.u) << ','
            << format_float(row.quantity) << ',' << row.status << '\n';
    return out.str();
}

inline std::string ucrit_csv(const std::vector<std::pair<double, double>>& curve) {
    std::ostringstream out;
    out << "epsilon,u_c\n";
    for (const auto& [eps, uc] : curve)
        out << format_float(eps) << ',' << format_float(uc) << '\n';
    return out.str();
}

inline std::string lambda_scan_csv(const LambdaScan& scan) {
    std::ostringstream out;
    out << "s";
    for (double eps : scan.eps_values) out << ",lambda_eps_" << format_float(eps);
    out << '\n';
    for (std::size_t k = 0; k < scan.s_grid.size(); ++k) {
        out << format_float(scan.s_grid[k]);
        for (const auto& column : scan.lambda) out << ',' << format_float(column[k]);
        out << '\n';
    }
    return out.str();
}

/// Companion gnuplot script for a heat-map CSV; generated text only, never an
/// execution dependency.
inline std::string sweep_gnuplot(const std::string& csv_name, const std::string& quantity_name,
                                 const std::string& curve_csv) {
    std::ostringstream out;
    out << "set datafile separator ','\n"
        << "set xlabel 'epsilon'\n"
        << "set ylabel 'u'\n"
        << "set view map\n"
        << "splot '" << csv_name << "' using 1:2:3 with points pointtype 5 pointsize 1 "
        << "palette title '" << quantity_name << "', \\\n"
        << "      '" << curve_csv << "' using 1:2:(0) with lines linecolor 'red' title 'u_c'\n";
    return out.str();
}

} // namespace chemostat
