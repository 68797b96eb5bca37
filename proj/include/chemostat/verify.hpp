#pragma once

#include "chemostat/analysis.hpp"
#include "chemostat/equilibria.hpp"
#include "chemostat/integrator.hpp"
#include "chemostat/model.hpp"
#include "chemostat/random.hpp"
#include "chemostat/spectral.hpp"
#include "chemostat/stability.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace chemostat {

/// One named property check; soft checks (hard = false) are heuristics that
/// report a warning instead of failing the suite.
struct CheckResult {
    std::string name;
    bool pass = false;
    bool hard = true;
    std::string detail;
};

namespace detail {

inline ChemostatModel with_perturbation(const ChemostatModel& model, PerturbationTerm term) {
    ChemostatModel m = model;
    m.perturbation = std::move(term);
    return m;
}

/// The two built-in exchange families instantiated on this model's kinetics.
inline std::vector<ChemostatModel> built_in_variants(const ChemostatModel& model) {
    return {with_perturbation(model, PerturbationTerm::neumann_laplacian()),
            with_perturbation(model, PerturbationTerm::mutation_circulant())};
}

inline Eigen::VectorXd random_box_vector(SplitMix64& rng, int n, double hi) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(0.0, hi);
    return x;
}

/// Random essentially non-negative matrix with zero column sums (hence a zero
/// Perron root); strictly positive off-diagonals make it irreducible.
inline Eigen::MatrixXd random_conservative_matrix(SplitMix64& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = i == j ? 0.0 : rng.uniform01();
    for (int j = 0; j < n; ++j) a(j, j) = -(a.col(j).sum());
    return a;
}

class Suite {
public:
    Suite(const ChemostatModel& model, std::uint64_t seed, int jobs)
        : model_(model), seed_(seed), jobs_(jobs) {}

    std::vector<CheckResult> run() {
        hypotheses();
        exchange_mass_conservation();
        exchange_sign_condition();
        washout_equilibrium_for_all_eps();
        realized_matrix_structure();
        perron_root_on_grid();
        perron_root_random();
        transpose_symmetry();
        collatz_wielandt();
        mass_balance_envelope();
        delta_forward_invariance();
        strict_positivity();
        tolerance_halving();
        lambda_monotone_in_s();
        ucrit_nonincreasing();
        coexistence_invariants();
        coexistence_fixed_point();
        normalization_independence();
        coexistence_beyond_epsilon_bar();
        coexistence_cep_continuity();
        jacobian_fd_agreement();
        washout_margin_structure();
        cep_margin_negative();
        malkin_gorshin_gap();
        diagram_determinism();
        diagram_column_monotone();
        return results_;
    }

private:
    const ChemostatModel& model_;
    std::uint64_t seed_;
    int jobs_;
    std::vector<CheckResult> results_;

    void add(std::string name, bool pass, std::string detail = {}, bool hard = true) {
        results_.push_back({std::move(name), pass, hard, std::move(detail)});
    }

    void guarded(const std::string& name, const std::function<void()>& body, bool hard = true) {
        try {
            body();
        } catch (const std::exception& e) {
            add(name, false, std::string("exception: ") + e.what(), hard);
        }
    }

    void hypotheses() {
        const HypothesisReport report = check_hypotheses(model_, 200);
        for (const auto& c : report.checks) add("hypotheses: " + c.name, c.pass, c.detail);
        std::ostringstream info;
        info << "epsilon_bar=" << report.epsilon_bar
             << ", c_eps=" << report.linear_growth_constant;
        add("hypotheses: epsilon_bar reported", true, info.str());
    }

    void exchange_mass_conservation() {
        const std::string name = "exchange conserves mass (1000 random states)";
        guarded(name, [&] {
            SplitMix64 rng(seed_ + 1);
            double worst = 0.0;
            for (int k = 0; k < 1000; ++k) {
                const Eigen::VectorXd x = random_box_vector(rng, model_.n, 10.0);
                const double s = rng.uniform(0.0, model_.s_in);
                const double eps = rng.uniform(0.0, 10.0);
                const double sum = eval_perturbation(model_, x, s, eps).sum();
                const double bound = 1e-10 * (1.0 + x.norm()) * eps;
                worst = std::max(worst, std::abs(sum) - bound);
            }
            add(name, worst <= 0.0, worst > 0.0 ? "excess " + std::to_string(worst) : "");
        });
    }

    void exchange_sign_condition() {
        const std::string name = "zero component cannot be drained (both built-in exchanges)";
        guarded(name, [&] {
            SplitMix64 rng(seed_ + 2);
            bool pass = true;
            std::string detail;
            for (const auto& m : built_in_variants(model_)) {
                for (int k = 0; k < 200 && pass; ++k) {
                    Eigen::VectorXd x = random_box_vector(rng, m.n, 10.0);
                    const int i = static_cast<int>(rng.next() % static_cast<std::uint64_t>(m.n));
                    x(i) = 0.0;
                    const double s = rng.uniform(0.0, m.s_in);
                    const double eps = rng.uniform(1e-6, 10.0);
                    const double hi = eval_perturbation(m, x, s, eps)(i);
                    if (hi < -1e-12) {
                        pass = false;
                        detail = "h_i = " + std::to_string(hi);
                    }
                }
            }
            add(name, pass, detail);
        });
    }

    void washout_equilibrium_for_all_eps() {
        const std::string name = "washout is an equilibrium for every epsilon";
        guarded(name, [&] {
            const State wo = washout_state(model_);
            double worst = 0.0;
            for (int k = 0; k <= 20; ++k)
                worst = std::max(worst, eval_rhs(model_, wo, 0.5 * k).lpNorm<Eigen::Infinity>());
            add(name, worst <= 1e-14, "max |rhs| = " + std::to_string(worst));
        });
    }

    void realized_matrix_structure() {
        guarded("realized exchange matrix structure", [&] {
            if (model_.perturbation.kind() == PerturbationKind::NeumannLaplacian) {
                const Eigen::MatrixXd theta = model_.perturbation_matrix(model_.s_in);
                const bool symmetric = theta == theta.transpose();
                const double row = theta.rowwise().sum().cwiseAbs().maxCoeff();
                add("Theta symmetric with zero row sums", symmetric && row <= 1e-14,
                    symmetric ? "" : "not symmetric");
            }
            const double col = max_abs_column_sum(model_.perturbation_matrix(model_.s_in));
            add("T(s_in) column sums vanish", col <= 1e-14,
                "max |column sum| = " + std::to_string(col));
        });
    }

    void perron_root_on_grid() {
        const std::string name = "lambda(T(s)) = 0 on the s-grid";
        guarded(name, [&] {
            double worst = 0.0;
            for (double s : linspace(0.0, model_.s_in, 50))
                worst = std::max(worst, std::abs(spectral_abscissa(model_.perturbation_matrix(s))));
            add(name, worst <= 1e-9, "max |lambda| = " + std::to_string(worst));
        });
    }

    void perron_root_random() {
        const std::string name = "lambda = 0 and Perron residuals on 200 random conservative matrices";
        guarded(name, [&] {
            SplitMix64 rng(seed_ + 3);
            bool pass = true;
            std::string detail;
            for (int k = 0; k < 200 && pass; ++k) {
                const Eigen::MatrixXd a = random_conservative_matrix(rng, std::max(2, model_.n));
                const double lambda = spectral_abscissa(a);
                if (std::abs(lambda) > 1e-9) {
                    pass = false;
                    detail = "lambda = " + std::to_string(lambda);
                    break;
                }
                const PerronPair pair = perron_pair(a);
                const double scale = a.norm();
                if ((a * pair.v - pair.lambda * pair.v).norm() > 1e-10 * scale ||
                    (a.transpose() * pair.w - pair.lambda * pair.w).norm() > 1e-10 * scale ||
                    std::abs(pair.w.dot(pair.v) - 1.0) > 1e-12 ||
                    std::abs(pair.v.norm() - 1.0) > 1e-12 || pair.v.minCoeff() <= 0.0 ||
                    pair.w.minCoeff() <= 0.0) {
                    pass = false;
                    detail = "Perron pair invariant violated at sample " + std::to_string(k);
                }
            }
            add(name, pass, detail);
        });
    }

    void transpose_symmetry() {
        const std::string name = "spectral abscissa invariant under transpose (100 random)";
        guarded(name, [&] {
            SplitMix64 rng(seed_ + 4);
            double worst = 0.0;
            for (int k = 0; k < 100; ++k) {
                const int n = std::max(2, model_.n);
                Eigen::MatrixXd a(n, n);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
                worst = std::max(worst,
                                 std::abs(spectral_abscissa(a) - spectral_abscissa(a.transpose())));
            }
            add(name, worst <= 1e-10, "max discrepancy = " + std::to_string(worst));
        });
    }

    void collatz_wielandt() {
        const std::string name = "Collatz-Wielandt row-sum sandwich (100 random)";
        guarded(name, [&] {
            SplitMix64 rng(seed_ + 5);
            bool pass = true;
            for (int k = 0; k < 100 && pass; ++k) {
                const int n = std::max(2, model_.n);
                Eigen::MatrixXd a(n, n);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        a(i, j) = i == j ? rng.uniform(-2.0, 0.0) : rng.uniform01();
                const auto [lo, hi] = row_sum_bounds(a);
                const double lambda = spectral_abscissa(a);
                pass = lambda >= lo - 1e-10 && lambda <= hi + 1e-10;
            }
            add(name, pass);
        });
    }

    void mass_balance_envelope() {
        const std::string name = "mass-balance envelope on 50 trajectories (both built-in exchanges)";
        guarded(name, [&] {
            IntegratorSettings settings;
            settings.sample_count = 200;
            bool pass = true;
            std::string detail;
            for (const auto& m : built_in_variants(model_)) {
                BasinSpec spec{SampleRegion::FullBox, 0, 0.0, 25, seed_ + 6};
                const auto initials = sample_initials(m, spec);
                std::vector<double> excess(initials.size(), 0.0);
                parallel_for(initials.size(), jobs_, [&](std::size_t i) {
                    const Trajectory traj = integrate(m, initials[i], settings);
                    const double b0 = mass_coordinate(m, initials[i]);
                    for (std::size_t k = 0; k < traj.times.size(); ++k) {
                        const double bound =
                            m.s_in + (b0 - m.s_in) * std::exp(-m.u * traj.times[k]) + 1e-6;
                        excess[i] = std::max(excess[i],
                                             mass_coordinate(m, traj.states[k]) - bound);
                    }
                });
                for (double e : excess)
                    if (e > 0.0) {
                        pass = false;
                        detail = "bound exceeded by " + std::to_string(e);
                    }
            }
            add(name, pass, detail);
        });
    }

    void delta_forward_invariance() {
        const std::string name = "Delta is forward invariant";
        guarded(name, [&] {
            IntegratorSettings settings;
            settings.sample_count = 200;
            BasinSpec spec{SampleRegion::DeltaIAlpha, 0, 0.0, 20, seed_ + 7};
            const auto initials = sample_initials(model_, spec);
            std::vector<char> ok(initials.size(), 1);
            parallel_for(initials.size(), jobs_, [&](std::size_t i) {
                const Trajectory traj = integrate(model_, initials[i], settings);
                for (const auto& st : traj.states)
                    if (!in_delta(model_, st, 1e-8)) ok[i] = 0;
            });
            bool pass = true;
            for (char c : ok) pass = pass && c;
            add(name, pass);
        });
    }

    void strict_positivity() {
        const std::string name = "zeroed species become positive for t >= 1 (both built-in exchanges)";
        guarded(name, [&] {
            SplitMix64 rng(seed_ + 8);
            IntegratorSettings settings;
            settings.t_final = 20.0;
            settings.sample_count = 100;
            bool pass = true;
            std::string detail;
            for (const auto& m : built_in_variants(model_)) {
                if (!(m.epsilon > 0.0)) continue; // positivity needs an active exchange
                for (int trial = 0; trial < 8 && pass; ++trial) {
                    Eigen::VectorXd x = random_box_vector(rng, m.n, 1.0);
                    const int i = static_cast<int>(rng.next() % static_cast<std::uint64_t>(m.n));
                    x(i) = 0.0;
                    if (x.sum() == 0.0) x((i + 1) % m.n) = 0.5;
                    const Trajectory traj =
                        integrate(m, make_initial_state(m, x, 0.5 * m.s_in), settings);
                    for (std::size_t k = 0; k < traj.times.size(); ++k)
                        if (traj.times[k] >= 1.0 && !(traj.states[k].x(i) > 0.0)) {
                            pass = false;
                            detail = "species " + std::to_string(i + 1) + " not positive at t=" +
                                     std::to_string(traj.times[k]);
                        }
                }
            }
            add(name, pass, detail);
        });
    }

    void tolerance_halving() {
        const std::string name = "tolerance halving moves the final state by < 10 rtol";
        guarded(name, [&] {
            IntegratorSettings coarse;
            IntegratorSettings fine;
            fine.rtol = coarse.rtol / 2.0;
            fine.atol = coarse.atol / 2.0;
            const State init = make_initial_state(
                model_, Eigen::VectorXd::Constant(model_.n, 0.15), 0.25 * model_.s_in);
            const double moved = distance(integrate(model_, init, coarse).final_state(),
                                          integrate(model_, init, fine).final_state());
            add(name, moved < 10.0 * coarse.rtol, "moved " + std::to_string(moved));
        });
    }

    void lambda_monotone_in_s() {
        const std::string name = "lambda(B(s,u,eps)) strictly increasing in s (both built-in exchanges)";
        guarded(name, [&] {
            bool pass = true;
            std::string detail;
            for (const auto& m : built_in_variants(model_))
                for (double u : {0.4, 1.5})
                    for (double eps : {0.0, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0}) {
                        const LambdaScan scan = lambda_scan(m, u, {eps}, 100);
                        for (std::size_t k = 0; k + 1 < scan.s_grid.size(); ++k)
                            if (!(scan.lambda[0][k + 1] > scan.lambda[0][k])) {
                                pass = false;
                                detail = "not increasing at s=" + std::to_string(scan.s_grid[k]) +
                                         ", eps=" + std::to_string(eps);
                            }
                    }
            add(name, pass, detail);
        });
    }

    void ucrit_nonincreasing() {
        const std::string name = "u_c nonincreasing in epsilon";
        guarded(name, [&] {
            bool pass = true;
            double prev = u_crit(model_, 0.0);
            for (int k = 1; k <= 40; ++k) {
                const double uc = u_crit(model_, 0.25 * k);
                if (uc > prev + 1e-10) pass = false;
                prev = uc;
            }
            add(name, pass);
        });
    }

    bool coexistence_applicable() const {
        return model_.epsilon > 0.0 && model_.u > 0.0 && model_.u < u_crit(model_, model_.epsilon);
    }

    void coexistence_invariants() {
        const std::string name = "coexistence equilibrium strictly interior with small residual";
        guarded(name, [&] {
            if (!coexistence_applicable()) {
                add(name, true, "skipped: no coexistence regime at model (eps, u)");
                return;
            }
            const Equilibrium eq = coexistence_equilibrium(model_);
            const bool interior =
                eq.state.x.minCoeff() > 0.0 && eq.state.s > 0.0 && eq.state.s < model_.s_in;
            add(name, interior && eq.residual <= 1e-8,
                "residual " + std::to_string(eq.residual));
        });
    }

    void coexistence_fixed_point() {
        const std::string name = "integrating from the coexistence equilibrium stays put";
        guarded(name, [&] {
            if (!coexistence_applicable()) {
                add(name, true, "skipped: no coexistence regime at model (eps, u)");
                return;
            }
            const Equilibrium eq = coexistence_equilibrium(model_);
            IntegratorSettings settings;
            settings.t_final = 50.0;
            const double moved =
                distance(integrate(model_, eq.state, settings).final_state(), eq.state);
            add(name, moved < 1e-6, "moved " + std::to_string(moved));
        });
    }

    void normalization_independence() {
        const std::string name = "equilibrium independent of Perron normalization";
        guarded(name, [&] {
            if (!coexistence_applicable()) {
                add(name, true, "skipped: no coexistence regime at model (eps, u)");
                return;
            }
            const Equilibrium eq = coexistence_equilibrium(model_);
            const PerronPair pair =
                perron_pair(assemble_B(model_, eq.state.s, model_.u, model_.epsilon));
            const Eigen::VectorXd a1 = pair.v / pair.v.lpNorm<1>();
            double tau = 0.0;
            for (int j = 0; j < model_.n; ++j)
                tau += model_.mu(j, eq.state.s) * a1(j) / model_.yields[static_cast<std::size_t>(j)];
            const Eigen::VectorXd x1 = (model_.u * (model_.s_in - eq.state.s) / tau) * a1;
            const double diff = (x1 - eq.state.x).lpNorm<Eigen::Infinity>();
            add(name, diff <= 1e-10, "difference " + std::to_string(diff));
        });
    }

    void coexistence_beyond_epsilon_bar() {
        const std::string name = "coexistence solver succeeds far beyond epsilon_bar (regression)";
        guarded(name, [&] {
            const double u_safe = 0.9 * mu_hat(model_); // below u_c(eps) for every eps
            bool pass = true;
            std::string detail;
            for (double eps : {1.0, 10.0, 100.0}) {
                ChemostatModel m = model_;
                m.epsilon = eps;
                m.u = u_safe;
                const Equilibrium eq = coexistence_equilibrium(m);
                if (!(eq.state.x.minCoeff() > 0.0)) {
                    pass = false;
                    detail = "non-positive component at eps=" + std::to_string(eps);
                }
            }
            add(name, pass, detail);
        });
    }

    void coexistence_cep_continuity() {
        const std::string name = "coexistence equilibrium -> CEP equilibrium as eps -> 0";
        guarded(name, [&] {
            const BreakEvenTable table = break_even(model_);
            if (!table.winner || !(model_.u < u_crit(model_, 0.0)) || !(model_.u > 0.0)) {
                add(name, true, "skipped: no unique CEP winner below u_c(0)");
                return;
            }
            ChemostatModel m = model_;
            m.epsilon = 1e-8;
            const Equilibrium near = coexistence_equilibrium(m);
            const Equilibrium cep = cep_equilibrium(model_, *table.winner);
            const double diff = distance(near.state, cep.state);
            add(name, diff <= 1e-4, "distance " + std::to_string(diff));
        });
    }

    void jacobian_fd_agreement() {
        const std::string name = "analytic Jacobian matches finite differences (100 random states)";
        guarded(name, [&] {
            SplitMix64 rng(seed_ + 9);
            double worst = 0.0;
            for (const auto& m : built_in_variants(model_))
                for (int k = 0; k < 50; ++k) {
                    State st;
                    st.x = random_box_vector(rng, m.n, 10.0);
                    st.s = rng.uniform(0.0, m.s_in);
                    worst = std::max(worst, stability_fd_discrepancy(m, st));
                }
            add(name, worst <= 1e-5, "max discrepancy " + std::to_string(worst));
        });
    }

    static double stability_fd_discrepancy(const ChemostatModel& m, const State& st) {
        return detail::checked_jacobian(m, st).second;
    }

    void washout_margin_structure() {
        const std::string name = "washout margin equals max(u_c(eps) - u, -u)";
        guarded(name, [&] {
            bool pass = true;
            std::string detail;
            for (double eps : {0.0, model_.epsilon, 2.0}) {
                for (double u : {0.5 * model_.u, model_.u, 2.0 * model_.u}) {
                    if (!(u > 0.0)) continue;
                    ChemostatModel m = with_parameters(model_, eps, u);
                    const StabilityReport report = classify(m, washout_equilibrium(m));
                    const double expected = std::max(u_crit(m, eps) - u, -u);
                    if (std::abs(report.margin - expected) > 1e-9) {
                        pass = false;
                        detail = "margin " + std::to_string(report.margin) + " vs expected " +
                                 std::to_string(expected);
                    }
                }
            }
            add(name, pass, detail);
        });
    }

    void cep_margin_negative() {
        const std::string name = "CEP equilibrium margin negative at eps = 0";
        guarded(name, [&] {
            const BreakEvenTable table = break_even(model_);
            if (!table.winner) {
                add(name, true, "skipped: no unique CEP winner");
                return;
            }
            ChemostatModel m = model_;
            m.epsilon = 0.0;
            const StabilityReport report = classify(m, cep_equilibrium(m, *table.winner));
            add(name, report.margin < 0.0, "margin " + std::to_string(report.margin));
        });
    }

    void malkin_gorshin_gap() {
        const std::string name = "trajectory gap shrinks with epsilon (Malkin-Gorshin)";
        guarded(name, [&] {
            const BreakEvenTable table = break_even(model_);
            if (!table.winner) {
                add(name, true, "skipped: no unique CEP winner");
                return;
            }
            BasinSpec spec{SampleRegion::DeltaIAlpha, *table.winner, 0.05, 20, seed_ + 10};
            const auto initials = sample_initials(model_, spec);
            const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
            const std::vector<double> gaps = trajectory_gap(model_, initials, eps, {});
            bool pass = gaps.back() < gaps.front();
            for (std::size_t k = 0; k + 1 < gaps.size(); ++k)
                if (gaps[k + 1] > 1.05 * gaps[k]) pass = false;
            std::ostringstream detail;
            detail << "g = ";
            for (double g : gaps) detail << g << ' ';
            add(name, pass, detail.str());
        });
    }

    void diagram_determinism() {
        const std::string name = "operating diagram independent of worker count";
        guarded(name, [&] {
            IntegratorSettings settings;
            settings.t_final = 50.0;
            settings.sample_count = 50;
            const State init = make_initial_state(
                model_, Eigen::VectorXd::Constant(model_.n, 0.15), 0.25 * model_.s_in);
            const SweepResult one =
                operating_diagram(model_, 0.0, 2.0, 0.1, 0.8, 4, init, settings, 1);
            const SweepResult two =
                operating_diagram(model_, 0.0, 2.0, 0.1, 0.8, 4, init, settings, 2);
            bool same = one.rows.size() == two.rows.size();
            for (std::size_t i = 0; same && i < one.rows.size(); ++i)
                same = one.rows[i].epsilon == two.rows[i].epsilon &&
                       one.rows[i].u == two.rows[i].u &&
                       one.rows[i].quantity == two.rows[i].quantity &&
                       one.rows[i].status == two.rows[i].status;
            add(name, same);
        });
    }

    void diagram_column_monotone() {
        const std::string name =
            "washout distance weakly decreasing in u above u_c (heuristic, warning only)";
        guarded(
            name,
            [&] {
                IntegratorSettings settings;
                const State init = make_initial_state(
                    model_, Eigen::VectorXd::Constant(model_.n, 0.15), 0.25 * model_.s_in);
                const SweepResult sweep =
                    operating_diagram(model_, 0.0, 8.0, 0.0, 0.9, 8, init, settings, jobs_);
                bool pass = true;
                for (std::size_t ie = 0; ie < 8; ++ie) {
                    const double uc = sweep.ucrit_curve[ie].second;
                    double prev = std::numeric_limits<double>::infinity();
                    for (std::size_t iu = 0; iu < 8; ++iu) {
                        const auto& row = sweep.rows[ie * 8 + iu];
                        if (row.u < uc + 0.02 || row.status != "ok") continue;
                        if (row.quantity > 1.05 * prev) pass = false;
                        prev = row.quantity;
                    }
                }
                add(name, pass, pass ? "" : "non-monotone column (heuristic)", /*hard=*/false);
            },
            /*hard=*/false);
    }
};

} // namespace detail

/// Runs every module-level property on the given model; each result carries
/// the property's name so callers can print one line per check.
inline std::vector<CheckResult> run_property_suite(const ChemostatModel& model,
                                                   std::uint64_t seed = 0, int jobs = 0) {
    return detail::Suite(model, seed, jobs).run();
}

} // namespace chemostat
