#pragma once

#include "chemostat/errors.hpp"
#include "chemostat/matrix_props.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace chemostat {

/// Monod growth law mu(s) = a*s / (b + s): zero at s = 0, strictly
/// increasing, bounded above by the maximal rate a.
struct MonodKinetics {
    double a; // maximal growth rate (1/time)
    double b; // half-saturation constant (concentration)

    double value(double s) const { return a * s / (b + s); }
    double derivative(double s) const {
        const double d = b + s;
        return a * b / (d * d);
    }
    /// Break-even concentration mu^{-1}(u); caller guards u < a.
    double inverse(double u) const { return u * b / (a - u); }
};

enum class PerturbationKind { NeumannLaplacian, MutationCirculant, ConstantMatrix };

/// Tagged choice of exchange matrix family T(s). NeumannLaplacian is the
/// constant tridiagonal diffusion stencil; MutationCirculant scales the
/// cyclic neighbor stencil by the species kinetics; ConstantMatrix is an
/// arbitrary user matrix validated against the structural assumptions
/// (essentially non-negative, zero column sums, irreducible) at construction.
class PerturbationTerm {
public:
    static PerturbationTerm neumann_laplacian() { return PerturbationTerm(PerturbationKind::NeumannLaplacian); }
    static PerturbationTerm mutation_circulant() { return PerturbationTerm(PerturbationKind::MutationCirculant); }

    static PerturbationTerm constant(Eigen::MatrixXd m) {
        if (m.rows() != m.cols()) throw ConfigError("constant perturbation matrix must be square");
        if (!all_finite(m)) throw ConfigError("constant perturbation matrix has non-finite entries");
        const double scale = std::max(1.0, max_abs_entry(m));
        if (!is_essentially_nonnegative(m))
            throw ConfigError("constant perturbation matrix has a negative off-diagonal entry");
        if (max_abs_column_sum(m) > 1e-12 * scale)
            throw ConfigError("constant perturbation matrix columns must sum to zero");
        if (!is_irreducible(m))
            throw ConfigError("constant perturbation matrix must be irreducible");
        PerturbationTerm t(PerturbationKind::ConstantMatrix);
        t.matrix_ = std::move(m);
        return t;
    }

    PerturbationKind kind() const { return kind_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }

private:
    explicit PerturbationTerm(PerturbationKind k) : kind_(k) {}
    PerturbationKind kind_;
    Eigen::MatrixXd matrix_;
};

/// A point of the state space: species concentrations x and substrate s.
struct State {
    Eigen::VectorXd x;
    double s = 0.0;

    Eigen::VectorXd as_vector() const {
        Eigen::VectorXd y(x.size() + 1);
        y.head(x.size()) = x;
        y(x.size()) = s;
        return y;
    }
    static State from_vector(const Eigen::VectorXd& y) {
        State st;
        st.x = y.head(y.size() - 1);
        st.s = y(y.size() - 1);
        return st;
    }
};

inline double distance(const State& a, const State& b) {
    return std::sqrt((a.x - b.x).squaredNorm() + (a.s - b.s) * (a.s - b.s));
}

/// Full parameterization of the perturbed chemostat:
///   x' = D(s)x - u x + eps T(s) x,   s' = -sum mu_j(s)x_j/Y_j + u(s_in - s).
struct ChemostatModel {
    int n = 0;                           // species count
    double s_in = 0.0;                   // input substrate concentration
    double u = 0.0;                      // dilution rate (1/time)
    double epsilon = 0.0;                // perturbation parameter
    std::vector<double> yields;          // Y_i > 0
    std::vector<MonodKinetics> kinetics; // mu_i
    PerturbationTerm perturbation = PerturbationTerm::neumann_laplacian();

    double mu(int i, double s) const { return kinetics[static_cast<std::size_t>(i)].value(s); }
    double mu_prime(int i, double s) const { return kinetics[static_cast<std::size_t>(i)].derivative(s); }

    Eigen::VectorXd growth_rates(double s) const {
        Eigen::VectorXd g(n);
        for (int i = 0; i < n; ++i) g(i) = mu(i, s);
        return g;
    }
    Eigen::VectorXd growth_rate_derivatives(double s) const {
        Eigen::VectorXd g(n);
        for (int i = 0; i < n; ++i) g(i) = mu_prime(i, s);
        return g;
    }

    double y_plus() const { return *std::max_element(yields.begin(), yields.end()); }

    /// Realized exchange matrix T(s).
    Eigen::MatrixXd perturbation_matrix(double s) const {
        switch (perturbation.kind()) {
        case PerturbationKind::NeumannLaplacian:
            return neumann_laplacian_matrix(n);
        case PerturbationKind::MutationCirculant:
            return cyclic_stencil(growth_rates(s));
        case PerturbationKind::ConstantMatrix:
            return perturbation.matrix();
        }
        throw ConfigError("unknown perturbation kind");
    }

    /// dT/ds, needed by the analytic Jacobian. Zero for the constant
    /// families; the mutation stencil differentiates column-wise.
    Eigen::MatrixXd perturbation_matrix_derivative(double s) const {
        if (perturbation.kind() == PerturbationKind::MutationCirculant)
            return cyclic_stencil(growth_rate_derivatives(s));
        return Eigen::MatrixXd::Zero(n, n);
    }

    static Eigen::MatrixXd neumann_laplacian_matrix(int n) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        if (n == 1) return m;
        for (int i = 0; i < n; ++i) {
            if (i > 0) m(i, i - 1) = 1.0;
            if (i + 1 < n) m(i, i + 1) = 1.0;
            m(i, i) = (i == 0 || i == n - 1) ? -1.0 : -2.0;
        }
        return m;
    }

private:
    // Mutation stencil: of the growth w_j of species j, a fraction eps leaves
    // the species, half toward each cyclic neighbor. Column j holds -w_j on
    // the diagonal and w_j/2 on the two neighbor rows, so every column sums
    // to zero. For n = 2 both neighbor slots coincide.
    Eigen::MatrixXd cyclic_stencil(const Eigen::VectorXd& w) const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        if (n == 1) return m;
        for (int j = 0; j < n; ++j) {
            m(j, j) = -w(j);
            m((j + 1) % n, j) += 0.5 * w(j);
            m((j + n - 1) % n, j) += 0.5 * w(j);
        }
        return m;
    }
};

inline void validate(const ChemostatModel& model) {
    if (model.n < 1) throw ConfigError("species count n must be >= 1");
    if (!(model.s_in > 0.0)) throw ConfigError("s_in must be positive");
    if (!(model.u >= 0.0)) throw ConfigError("dilution rate u must be non-negative");
    if (!(model.epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
    if (model.yields.size() != static_cast<std::size_t>(model.n))
        throw ConfigError("yields list length must equal n");
    if (model.kinetics.size() != static_cast<std::size_t>(model.n))
        throw ConfigError("kinetics list length must equal n");
    for (double y : model.yields)
        if (!(y > 0.0)) throw ConfigError("yield coefficients must be positive");
    for (const auto& k : model.kinetics)
        if (!(k.a > 0.0) || !(k.b > 0.0)) throw ConfigError("Monod parameters a, b must be positive");
    if (model.perturbation.kind() == PerturbationKind::ConstantMatrix &&
        model.perturbation.matrix().rows() != model.n)
        throw ConfigError("perturbation matrix dimension must equal n");
}

/// Validated initial condition: x >= 0 componentwise, s in [0, s_in].
inline State make_initial_state(const ChemostatModel& model, Eigen::VectorXd x, double s) {
    if (x.size() != model.n) throw ConfigError("initial state dimension mismatch");
    if (!x.allFinite() || !std::isfinite(s)) throw ConfigError("initial state has non-finite entries");
    if (x.minCoeff() < 0.0) throw ConfigError("initial species concentrations must be non-negative");
    if (s < 0.0 || s > model.s_in) throw ConfigError("initial substrate must lie in [0, s_in]");
    return State{std::move(x), s};
}

inline State washout_state(const ChemostatModel& model) {
    return State{Eigen::VectorXd::Zero(model.n), model.s_in};
}

/// Mass coordinate b = s + sum_j x_j / Y_+ whose sublevel set b <= s_in is
/// the invariant region Delta.
inline double mass_coordinate(const ChemostatModel& model, const State& state) {
    return state.s + state.x.sum() / model.y_plus();
}

inline bool in_delta(const ChemostatModel& model, const State& state, double tol = 0.0) {
    return state.x.minCoeff() >= -tol && state.s >= -tol && state.s <= model.s_in + tol &&
           mass_coordinate(model, state) <= model.s_in + tol;
}

/// Perturbation term h(x, s, eps) = eps * T(s) * x.
inline Eigen::VectorXd eval_perturbation(const ChemostatModel& model, const Eigen::VectorXd& x,
                                         double s, double epsilon) {
    if (x.size() != model.n) throw ConfigError("eval_perturbation: x dimension mismatch");
    if (epsilon == 0.0) return Eigen::VectorXd::Zero(model.n);
    return epsilon * (model.perturbation_matrix(s) * x);
}

/// Allocation-free right-hand-side evaluator for the hot integration loop.
/// Constant exchange matrices are cached; the mutation stencil is applied
/// directly without forming T(s).
class RhsEvaluator {
public:
    explicit RhsEvaluator(const ChemostatModel& model, std::optional<double> epsilon_override = {})
        : model_(model), epsilon_(epsilon_override.value_or(model.epsilon)) {
        if (model.perturbation.kind() != PerturbationKind::MutationCirculant)
            cached_t_ = model.perturbation_matrix(0.0);
    }

    int dimension() const { return model_.n + 1; }
    double epsilon() const { return epsilon_; }

    void operator()(const Eigen::VectorXd& y, Eigen::VectorXd& dydt) const {
        const int n = model_.n;
        const double s = y(n);
        dydt.resize(n + 1);
        double consumption = 0.0;
        for (int i = 0; i < n; ++i) {
            const double mu_i = model_.mu(i, s);
            dydt(i) = (mu_i - model_.u) * y(i);
            consumption += mu_i * y(i) / model_.yields[static_cast<std::size_t>(i)];
        }
        if (epsilon_ != 0.0) add_exchange(y, s, dydt);
        dydt(n) = -consumption + model_.u * (model_.s_in - s);
    }

private:
    void add_exchange(const Eigen::VectorXd& y, double s, Eigen::VectorXd& dydt) const {
        const int n = model_.n;
        if (model_.perturbation.kind() == PerturbationKind::MutationCirculant) {
            if (n == 1) return;
            // (T(s)x)_i = -z_i + (z_{i-1} + z_{i+1})/2 with z_j = mu_j(s) x_j (cyclic).
            z_.resize(n);
            for (int j = 0; j < n; ++j) z_(j) = model_.mu(j, s) * y(j);
            for (int i = 0; i < n; ++i)
                dydt(i) += epsilon_ * (0.5 * (z_((i + 1) % n) + z_((i + n - 1) % n)) - z_(i));
        } else {
            dydt.head(n).noalias() += epsilon_ * (cached_t_ * y.head(n));
        }
    }

    const ChemostatModel& model_;
    double epsilon_;
    Eigen::MatrixXd cached_t_;
    mutable Eigen::VectorXd z_;
};

/// Time derivatives (x'_1..x'_n, s') of the perturbed chemostat at a state.
inline Eigen::VectorXd eval_rhs(const ChemostatModel& model, const State& state,
                                std::optional<double> epsilon_override = {}) {
    if (state.x.size() != model.n) throw ConfigError("eval_rhs: state dimension mismatch");
    RhsEvaluator rhs(model, epsilon_override);
    Eigen::VectorXd y = state.as_vector();
    Eigen::VectorXd dydt(model.n + 1);
    rhs(y, dydt);
    return dydt;
}

// --- Hypothesis report ------------------------------------------------------

struct HypothesisCheck {
    std::string name;
    bool pass = false;
    std::string detail; // witnessing s / explanation on failure
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    /// Supremum of epsilon for which s -> mu_i(s) + eps*t_ii(s) stays
    /// increasing on the grid (+inf when every t_ii is constant).
    double epsilon_bar = 0.0;
    /// Informative linear-growth constant for the model's own epsilon:
    /// c_eps = eps * sup_s ||T(s)||_2.
    double linear_growth_constant = 0.0;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

inline bool diagonal_shift_increasing(const ChemostatModel& model,
                                      const std::vector<Eigen::MatrixXd>& t_on_grid,
                                      const std::vector<double>& s_grid, double eps) {
    for (int i = 0; i < model.n; ++i)
        for (std::size_t k = 0; k + 1 < s_grid.size(); ++k) {
            const double lo = model.mu(i, s_grid[k]) + eps * t_on_grid[k](i, i);
            const double hi = model.mu(i, s_grid[k + 1]) + eps * t_on_grid[k + 1](i, i);
            if (!(hi > lo)) return false;
        }
    return true;
}

} // namespace detail

/// Samples s on a uniform grid of [0, s_in] and reports, check by check,
/// whether the structural hypotheses on the kinetics and the exchange matrix
/// hold there. Failures are report entries, never exceptions.
inline HypothesisReport check_hypotheses(const ChemostatModel& model, int grid_resolution) {
    if (grid_resolution < 2) throw ConfigError("grid_resolution must be >= 2");
    HypothesisReport report;
    const int m = grid_resolution;
    std::vector<double> s_grid(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        s_grid[static_cast<std::size_t>(k)] = model.s_in * static_cast<double>(k) / (m - 1);

    std::vector<Eigen::MatrixXd> t_on_grid;
    t_on_grid.reserve(s_grid.size());
    for (double s : s_grid) t_on_grid.push_back(model.perturbation_matrix(s));

    auto add = [&](std::string name, bool pass, std::string detail = {}) {
        report.checks.push_back({std::move(name), pass, std::move(detail)});
    };

    // A1: kinetics positive-parameter, zero at zero, increasing, bounded.
    {
        bool pass = true;
        std::string detail;
        for (int i = 0; i < model.n && pass; ++i) {
            const auto& k = model.kinetics[static_cast<std::size_t>(i)];
            if (!(k.a > 0.0) || !(k.b > 0.0)) {
                pass = false;
                detail = "species " + std::to_string(i + 1) + ": non-positive Monod parameter";
                break;
            }
            if (std::abs(k.value(0.0)) > 0.0) {
                pass = false;
                detail = "species " + std::to_string(i + 1) + ": mu(0) != 0";
                break;
            }
            for (std::size_t g = 0; g + 1 < s_grid.size(); ++g) {
                if (!(k.value(s_grid[g + 1]) > k.value(s_grid[g]))) {
                    pass = false;
                    detail = "species " + std::to_string(i + 1) + ": not increasing at s=" +
                             std::to_string(s_grid[g]);
                    break;
                }
                if (!(k.value(s_grid[g + 1]) < k.a)) {
                    pass = false;
                    detail = "species " + std::to_string(i + 1) + ": exceeds bound at s=" +
                             std::to_string(s_grid[g + 1]);
                    break;
                }
            }
        }
        add("A1 kinetics increasing, bounded, zero at zero", pass, detail);
    }

    // A2 holds structurally for h = eps*T(s)*x; report the growth constant.
    {
        double sup_norm = 0.0;
        for (const auto& t : t_on_grid)
            sup_norm = std::max(sup_norm, t.jacobiSvd().singularValues()(0));
        report.linear_growth_constant = model.epsilon * sup_norm;
        add("A2 linear perturbation vanishes at eps=0", true);
    }

    const double scale = [&] {
        double s = 1.0;
        for (const auto& t : t_on_grid) s = std::max(s, max_abs_entry(t));
        return s;
    }();

    // A3/A5: essentially non-negative off-diagonals on the whole grid.
    {
        bool pass = true;
        std::string detail;
        for (std::size_t g = 0; g < s_grid.size() && pass; ++g)
            if (!is_essentially_nonnegative(t_on_grid[g])) {
                pass = false;
                detail = "negative off-diagonal at s=" + std::to_string(s_grid[g]);
            }
        add("A3/A5 exchange matrix essentially non-negative", pass, detail);
    }

    // A4/A5: column sums vanish (mass conservation of the exchange).
    {
        bool pass = true;
        std::string detail;
        for (std::size_t g = 0; g < s_grid.size() && pass; ++g)
            if (max_abs_column_sum(t_on_grid[g]) > 1e-12 * scale) {
                pass = false;
                detail = "nonzero column sum at s=" + std::to_string(s_grid[g]);
            }
        add("A4/A5 exchange matrix columns sum to zero", pass, detail);
    }

    // A5: irreducibility for s > 0.
    {
        bool pass = true;
        std::string detail;
        for (std::size_t g = 1; g < s_grid.size() && pass; ++g)
            if (!is_irreducible(t_on_grid[g])) {
                pass = false;
                detail = "reducible at s=" + std::to_string(s_grid[g]);
            }
        add("A5 exchange matrix irreducible on (0, s_in]", pass, detail);
    }

    // A6: off-diagonals non-decreasing in s, and the diagonal-shifted growth
    // rates stay increasing up to some epsilon_bar.
    {
        bool pass = true;
        std::string detail;
        for (std::size_t g = 0; g + 1 < s_grid.size() && pass; ++g)
            for (int i = 0; i < model.n && pass; ++i)
                for (int j = 0; j < model.n; ++j)
                    if (i != j && t_on_grid[g + 1](i, j) < t_on_grid[g](i, j) - 1e-14 * scale) {
                        pass = false;
                        detail = "off-diagonal decreasing at s=" + std::to_string(s_grid[g]);
                        break;
                    }

        double diag_variation = 0.0;
        for (const auto& t : t_on_grid)
            for (int i = 0; i < model.n; ++i)
                diag_variation = std::max(diag_variation, std::abs(t(i, i) - t_on_grid[0](i, i)));

        if (diag_variation <= 1e-14 * scale) {
            report.epsilon_bar = std::numeric_limits<double>::infinity();
        } else {
            // Scan a logarithmic grid, then refine between the last passing
            // and first failing point; reports the supremum.
            double lo = 0.0, hi = -1.0;
            for (int k = 0; k <= 20; ++k) {
                const double eps = std::ldexp(1e-3, k);
                if (detail::diagonal_shift_increasing(model, t_on_grid, s_grid, eps)) {
                    lo = eps;
                } else {
                    hi = eps;
                    break;
                }
            }
            if (hi < 0.0) {
                report.epsilon_bar = lo;
            } else {
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (detail::diagonal_shift_increasing(model, t_on_grid, s_grid, mid) ? lo : hi) = mid;
                }
                report.epsilon_bar = 0.5 * (lo + hi);
            }
        }
        const bool model_eps_ok = model.epsilon <= report.epsilon_bar ||
                                  detail::diagonal_shift_increasing(model, t_on_grid, s_grid, model.epsilon);
        if (pass && !model_eps_ok) {
            pass = false;
            detail = "model epsilon exceeds epsilon_bar";
        }
        add("A6 monotone off-diagonals and increasing shifted growth", pass, detail);
    }

    // CS-pos: the neighbor-coupling condition that forces strict positivity.
    // For a linear exchange term it reduces to strictly positive neighbor
    // entries t_{i,i+1}, t_{i,i-1} for s > 0.
    {
        bool pass = true;
        std::string detail;
        for (std::size_t g = 1; g < s_grid.size() && pass; ++g) {
            const auto& t = t_on_grid[g];
            for (int i = 0; i < model.n && pass; ++i) {
                const bool lower_ok = i == 0 || t(i, i - 1) > 1e-13 * scale;
                const bool upper_ok = i == model.n - 1 || t(i, i + 1) > 1e-13 * scale;
                if (!(lower_ok && upper_ok)) {
                    pass = false;
                    detail = "species " + std::to_string(i + 1) +
                             " decoupled from a neighbor at s=" + std::to_string(s_grid[g]);
                }
            }
        }
        if (model.n == 1) pass = true; // no neighbors to couple
        add("CS-pos neighbor coupling", pass, detail);
    }

    return report;
}

} // namespace chemostat
