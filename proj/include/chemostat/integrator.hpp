#pragma once

#include "chemostat/errors.hpp"
#include "chemostat/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace chemostat {

struct IntegratorSettings {
    double rtol = 1e-8;
    double atol = 1e-10;
    double t_final = 200.0;
    double max_step = 0.0; // <= 0 means t_final / 10
    int sample_count = 400;

    double effective_max_step() const { return max_step > 0.0 ? max_step : t_final / 10.0; }
};

inline void validate(const IntegratorSettings& s) {
    if (!(s.rtol > 0.0) || !(s.atol > 0.0)) throw ConfigError("tolerances must be positive");
    if (!(s.t_final > 0.0)) throw ConfigError("t_final must be positive");
    if (s.sample_count < 2) throw ConfigError("sample_count must be >= 2");
}

/// Time-sampled solution path. delta_entry_time is the first instant with
/// b(t) <= s_in (0 when the initial condition already lies in that region).
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::optional<double> delta_entry_time;
    std::map<std::string, double> final_distance_to;

    const State& final_state() const { return states.back(); }
};

namespace dopri5 {

// Dormand-Prince 5(4) tableau, its embedded error weights, and the weights of
// the 4th-order dense-output polynomial.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

} // namespace dopri5

namespace detail {

struct DenseStep {
    double t0 = 0.0, h = 0.0;
    Eigen::VectorXd r1, r2, r3, r4, r5;

    Eigen::VectorXd at(double t) const {
        const double theta = std::clamp((t - t0) / h, 0.0, 1.0);
        const double omt = 1.0 - theta;
        return r1 + theta * (r2 + omt * (r3 + theta * (r4 + omt * r5)));
    }
};

inline double initial_step(const RhsEvaluator& rhs, const Eigen::VectorXd& y0,
                           const Eigen::VectorXd& f0, const IntegratorSettings& settings) {
    const auto sc = [&](const Eigen::VectorXd& y) {
        return (settings.atol + settings.rtol * y.cwiseAbs().array()).matrix().eval();
    };
    const Eigen::VectorXd scale = sc(y0);
    const double dny = (y0.array() / scale.array()).matrix().norm();
    const double dnf = (f0.array() / scale.array()).matrix().norm();
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min(h, settings.effective_max_step());

    Eigen::VectorXd y1 = y0 + h * f0, f1(y0.size());
    rhs(y1, f1);
    if (!f1.allFinite()) return std::min(1e-6, h);
    const double der2 = ((f1 - f0).array() / scale.array()).matrix().norm() / h;
    const double der12 = std::max(der2, dnf);
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, settings.effective_max_step()});
}

} // namespace detail

/// Integrates the perturbed chemostat from a validated initial condition with
/// an embedded Dormand-Prince 5(4) pair, PI step control, and 4th-order dense
/// output at sample_count equally spaced instants. Records the first entry
/// into the region b <= s_in (bisection on the dense output, time tolerance
/// 1e-9) and the final distance to each named target point.
inline Trajectory integrate(const ChemostatModel& model, const State& initial,
                            const IntegratorSettings& settings,
                            const std::vector<std::pair<std::string, State>>& targets = {},
                            std::optional<double> epsilon_override = {}) {
    validate(settings);
    if (initial.x.size() != model.n) throw ConfigError("integrate: initial state dimension mismatch");

    const RhsEvaluator rhs(model, epsilon_override);
    const int dim = model.n + 1;
    const double t_final = settings.t_final;
    const double hmax = settings.effective_max_step();

    std::vector<double> sample_times(static_cast<std::size_t>(settings.sample_count));
    for (int k = 0; k < settings.sample_count; ++k)
        sample_times[static_cast<std::size_t>(k)] =
            t_final * static_cast<double>(k) / (settings.sample_count - 1);

    Trajectory traj;
    traj.times.reserve(sample_times.size());
    traj.states.reserve(sample_times.size());

    auto record_sample = [&](double t, const Eigen::VectorXd& y) {
        traj.times.push_back(t);
        traj.states.push_back(State::from_vector(y));
    };

    auto check_invariants = [&](double t, const Eigen::VectorXd& y) {
        if (!y.allFinite()) throw NumericError("integrate: non-finite state at t=" + std::to_string(t));
        const double min_x = y.head(model.n).minCoeff();
        if (min_x < -settings.atol)
            throw NumericError("integrate: species dipped to " + std::to_string(min_x) + " at t=" +
                               std::to_string(t) + " (beyond -atol; invariance violated)");
        const double s = y(model.n);
        if (s < -settings.atol || s > model.s_in + settings.atol)
            throw NumericError("integrate: substrate left [0, s_in] at t=" + std::to_string(t));
    };

    auto mass_gap = [&](const Eigen::VectorXd& y) {
        return y(model.n) + y.head(model.n).sum() / model.y_plus() - model.s_in;
    };

    Eigen::VectorXd y = initial.as_vector();
    double t = 0.0;
    record_sample(0.0, y);
    std::size_t next_sample = 1;
    if (mass_gap(y) <= 0.0) traj.delta_entry_time = 0.0;

    Eigen::VectorXd k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    Eigen::VectorXd ytmp(dim), ynew(dim), err_vec(dim);
    rhs(y, k1);
    if (!k1.allFinite()) throw NumericError("integrate: non-finite derivative at initial state");

    double h = detail::initial_step(rhs, y, k1, settings);
    double facold = 1e-4;
    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
    constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
    bool rejected = false;
    long step_count = 0;

    using namespace dopri5;
    while (t < t_final) {
        if (++step_count > 20'000'000) throw NumericError("integrate: step limit exceeded");
        bool last = false;
        if (t + 1.01 * h >= t_final) {
            h = t_final - t;
            last = true;
        }
        if (h < 1e-14) throw NumericError("integrate: step size underflow (stiff problem?)");

        ytmp = y + h * (a21 * k1);
        rhs(ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(ynew, k7);

        err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err_sq = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double sc =
                settings.atol + settings.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
            const double r = err_vec(i) / sc;
            err_sq += r * r;
        }
        double err = std::sqrt(err_sq / dim);
        if (!std::isfinite(err)) err = 1e10; // overshoot into a kinetics pole: reject hard

        if (err <= 1.0) {
            const double fac11 = std::pow(err, expo1);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(facc2, std::min(facc1, fac / safe));
            double hnew = h / fac;
            facold = std::max(err, 1e-4);

            const double t_new = last ? t_final : t + h;
            check_invariants(t_new, ynew);

            detail::DenseStep dense;
            dense.t0 = t;
            dense.h = h;
            dense.r1 = y;
            dense.r2 = ynew - y;
            dense.r3 = h * k1 - dense.r2;
            dense.r4 = dense.r2 - h * k7 - dense.r3;
            dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            if (!traj.delta_entry_time && mass_gap(ynew) <= 0.0) {
                double lo = t, hi = t_new;
                while (hi - lo > 1e-9) {
                    const double mid = 0.5 * (lo + hi);
                    (mass_gap(dense.at(mid)) <= 0.0 ? hi : lo) = mid;
                }
                traj.delta_entry_time = hi;
            }

            while (next_sample < sample_times.size() &&
                   sample_times[next_sample] <= t_new + 1e-14 * t_final) {
                const double ts = sample_times[next_sample];
                record_sample(ts, ts >= t_new ? ynew : dense.at(ts));
                ++next_sample;
            }

            if (rejected) hnew = std::min(hnew, h);
            rejected = false;
            t = t_new;
            y.swap(ynew);
            k1.swap(k7); // first-same-as-last
            h = std::min(hnew, hmax);
        } else {
            rejected = true;
            h /= std::min(facc1, std::pow(err, expo1) / safe);
        }
    }

    // Guard against a dropped terminal sample from floating-point drift.
    while (next_sample < sample_times.size()) {
        record_sample(sample_times[next_sample], y);
        ++next_sample;
    }

    for (const auto& [name, target] : targets)
        traj.final_distance_to[name] = distance(traj.final_state(), target);
    return traj;
}

/// Empirical Malkin-Gorshin gap: for each epsilon, the worst (over the given
/// initial conditions) sup-in-time distance between the perturbed and the
/// unperturbed trajectory on the shared sample grid.
inline std::vector<double> trajectory_gap(const ChemostatModel& model,
                                          const std::vector<State>& initial_set,
                                          const std::vector<double>& epsilon_values,
                                          const IntegratorSettings& settings) {
    if (initial_set.empty()) throw ConfigError("trajectory_gap: empty initial set");
    for (double eps : epsilon_values)
        if (!(eps >= 0.0)) throw ConfigError("trajectory_gap: epsilon values must be non-negative");

    std::vector<Trajectory> base;
    base.reserve(initial_set.size());
    for (const auto& init : initial_set) base.push_back(integrate(model, init, settings, {}, 0.0));

    std::vector<double> gaps;
    gaps.reserve(epsilon_values.size());
    for (double eps : epsilon_values) {
        double g = 0.0;
        for (std::size_t i = 0; i < initial_set.size(); ++i) {
            const Trajectory perturbed = integrate(model, initial_set[i], settings, {}, eps);
            for (std::size_t k = 0; k < perturbed.states.size(); ++k)
                g = std::max(g, distance(perturbed.states[k], base[i].states[k]));
        }
        gaps.push_back(g);
    }
    return gaps;
}

} // namespace chemostat
