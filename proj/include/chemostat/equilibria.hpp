#pragma once

#include "chemostat/errors.hpp"
#include "chemostat/model.hpp"
#include "chemostat/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace chemostat {

enum class EquilibriumKind { Washout, Cep, Coexistence };

inline std::string to_string(EquilibriumKind kind, int species = -1) {
    switch (kind) {
    case EquilibriumKind::Washout: return "washout";
    case EquilibriumKind::Cep: return "cep:" + std::to_string(species + 1);
    case EquilibriumKind::Coexistence: return "coexistence";
    }
    return "?";
}

/// Classified steady state. residual = ||eval_rhs(state)|| for the system the
/// equilibrium belongs to (the eps = 0 system for CEP points). The spectral
/// margin is filled by stability::classify.
struct Equilibrium {
    EquilibriumKind kind = EquilibriumKind::Washout;
    int species = -1; // 0-based surviving species for Cep
    State state;
    double residual = 0.0;
    std::optional<double> spectral_margin;
};

/// Per-species break-even concentrations mu_i^{-1}(u) restricted to
/// [0, s_in] (+inf when u exceeds mu_i(s_in)), their minimum phi, and the
/// unique minimizer when one exists.
struct BreakEvenTable {
    std::vector<double> break_even;
    double phi = std::numeric_limits<double>::infinity();
    std::optional<int> winner; // 0-based; empty on ties (1e-12) or phi = +inf
};

inline BreakEvenTable break_even(const ChemostatModel& model) {
    if (!(model.u > 0.0)) throw ConfigError("break_even: dilution rate must be positive");
    constexpr double inf = std::numeric_limits<double>::infinity();
    BreakEvenTable table;
    table.break_even.resize(static_cast<std::size_t>(model.n), inf);
    for (int i = 0; i < model.n; ++i) {
        // Finite when the inverse lands inside [0, s_in]; the boundary value
        // u = mu_i(s_in) maps to s_in itself (E_i degenerates to washout).
        if (model.u <= model.mu(i, model.s_in))
            table.break_even[static_cast<std::size_t>(i)] =
                model.kinetics[static_cast<std::size_t>(i)].inverse(model.u);
    }

    int argmin = -1;
    for (int i = 0; i < model.n; ++i) {
        const double v = table.break_even[static_cast<std::size_t>(i)];
        if (v < table.phi) {
            table.phi = v;
            argmin = i;
        }
    }
    if (argmin >= 0) {
        bool unique = true;
        for (int i = 0; i < model.n; ++i)
            if (i != argmin &&
                table.break_even[static_cast<std::size_t>(i)] - table.phi <= 1e-12)
                unique = false;
        if (unique) table.winner = argmin;
    }
    return table;
}

inline Equilibrium washout_equilibrium(const ChemostatModel& model) {
    Equilibrium eq;
    eq.kind = EquilibriumKind::Washout;
    eq.state = washout_state(model);
    eq.residual = eval_rhs(model, eq.state).norm();
    return eq;
}

/// Competitive-exclusion steady state of the unperturbed system:
/// s = mu_i^{-1}(u), x_i = Y_i (s_in - s), all other species extinct.
inline Equilibrium cep_equilibrium(const ChemostatModel& model, int i) {
    if (i < 0 || i >= model.n) throw ConfigError("cep_equilibrium: species index out of range");
    const BreakEvenTable table = break_even(model);
    const double s = table.break_even[static_cast<std::size_t>(i)];
    if (!std::isfinite(s))
        throw DomainError("cep_equilibrium: species " + std::to_string(i + 1) +
                          " cannot break even at u=" + std::to_string(model.u));
    Equilibrium eq;
    eq.kind = EquilibriumKind::Cep;
    eq.species = i;
    eq.state.x = Eigen::VectorXd::Zero(model.n);
    eq.state.x(i) = model.yields[static_cast<std::size_t>(i)] * (model.s_in - s);
    eq.state.s = s;
    eq.residual = eval_rhs(model, eq.state, 0.0).norm();
    if (eq.residual > 1e-10 * (1.0 + eq.state.as_vector().norm()))
        throw NumericError("cep_equilibrium: residual check failed");
    return eq;
}

/// B(s, u, eps) = D(s) - u I + eps T(s).
inline Eigen::MatrixXd assemble_B(const ChemostatModel& model, double s, double u, double epsilon) {
    Eigen::MatrixXd b = epsilon == 0.0 ? Eigen::MatrixXd::Zero(model.n, model.n).eval()
                                       : (epsilon * model.perturbation_matrix(s)).eval();
    b.diagonal() += model.growth_rates(s);
    b.diagonal().array() -= u;
    return b;
}

/// Critical dilution rate u_c(eps) = lambda(D(s_in) + eps T(s_in)).
inline double u_crit(const ChemostatModel& model, double epsilon) {
    if (!(epsilon >= 0.0)) throw ConfigError("u_crit: epsilon must be non-negative");
    return spectral_abscissa(assemble_B(model, model.s_in, 0.0, epsilon));
}

/// Inverse of the critical dilution rate: the eps with u_c(eps) = u, +inf for
/// u <= mu_hat. Bracketing bisection on the non-increasing u_c, tolerance
/// 1e-10 in u.
inline double xi(const ChemostatModel& model, double u) {
    if (!(u >= 0.0)) throw ConfigError("xi: dilution rate must be non-negative");
    if (u <= mu_hat(model)) return std::numeric_limits<double>::infinity();
    const double uc0 = u_crit(model, 0.0);
    if (u > uc0) throw DomainError("xi: u exceeds u_c(0)");
    if (u == uc0) return 0.0;

    double lo = 0.0, hi = 1.0;
    int grow = 0;
    while (u_crit(model, hi) > u) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 200) throw NumericError("xi: bracket growth failed");
    }
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double uc = u_crit(model, mid);
        if (std::abs(uc - u) <= 1e-10) return mid;
        (uc > u ? lo : hi) = mid;
    }
    throw NumericError("xi: bisection did not reach tolerance");
}

/// Coexistence steady state E_{eps,u}: locate the unique s with
/// lambda(B(s, u, eps)) = 0 by bisection (lambda is increasing in s), scale
/// the unit Perron vector a by alpha = u (s_in - s) / sum_j mu_j(s) a_j / Y_j.
inline Equilibrium coexistence_equilibrium(const ChemostatModel& model) {
    const double u = model.u, eps = model.epsilon;
    if (!(eps > 0.0)) throw DomainError("coexistence_equilibrium: requires epsilon > 0");
    if (!(u > 0.0)) throw DomainError("coexistence_equilibrium: requires u > 0");
    const double uc = u_crit(model, eps);
    if (u >= uc)
        throw DomainError("coexistence_equilibrium: no coexistence for u >= u_c(eps) = " +
                          std::to_string(uc));

    auto lambda_at = [&](double s) { return spectral_abscissa(assemble_B(model, s, u, eps)); };
    double lo = 0.0, hi = model.s_in;
    if (!(lambda_at(lo) < 0.0) || !(lambda_at(hi) > 0.0))
        throw NumericError("coexistence_equilibrium: invalid bisection bracket");
    double s_star = 0.5 * (lo + hi), lam = lambda_at(s_star);
    for (int it = 0; it < 300 && std::abs(lam) > 1e-11; ++it) {
        (lam < 0.0 ? lo : hi) = s_star;
        s_star = 0.5 * (lo + hi);
        lam = lambda_at(s_star);
    }
    if (std::abs(lam) > 1e-11)
        throw NumericError("coexistence_equilibrium: bisection on s did not converge");

    const PerronPair pair = perron_pair(assemble_B(model, s_star, u, eps));
    double tau = 0.0;
    for (int j = 0; j < model.n; ++j)
        tau += model.mu(j, s_star) * pair.v(j) / model.yields[static_cast<std::size_t>(j)];
    const double alpha = u * (model.s_in - s_star) / tau;

    Equilibrium eq;
    eq.kind = EquilibriumKind::Coexistence;
    eq.state.x = alpha * pair.v;
    eq.state.s = s_star;
    eq.residual = eval_rhs(model, eq.state).norm();
    if (eq.residual > 1e-8)
        throw NumericError("coexistence_equilibrium: residual " + std::to_string(eq.residual) +
                           " exceeds 1e-8");
    return eq;
}

} // namespace chemostat
