#pragma once

#include "chemostat/equilibria.hpp"
#include "chemostat/errors.hpp"
#include "chemostat/model.hpp"
#include "chemostat/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace chemostat {

/// Jacobian of the full (n+1)-dimensional system plus its spectral margin.
/// hurwitz means margin < -tol; margins inside [-tol, tol] are flagged
/// marginal (the curve u = u_c(eps) is exactly marginal by construction).
struct StabilityReport {
    Eigen::MatrixXd jacobian;
    double margin = 0.0;
    bool hurwitz = false;
    bool marginal = false;
    double fd_discrepancy = 0.0;
};

namespace detail {

inline Eigen::MatrixXd analytic_jacobian(const ChemostatModel& model, const State& state) {
    const int n = model.n;
    const double s = state.s;
    Eigen::MatrixXd jac(n + 1, n + 1);
    jac.topLeftCorner(n, n) = assemble_B(model, s, model.u, model.epsilon);

    Eigen::VectorXd dx_ds = model.growth_rate_derivatives(s).cwiseProduct(state.x);
    if (model.epsilon != 0.0)
        dx_ds += model.epsilon * (model.perturbation_matrix_derivative(s) * state.x);
    jac.topRightCorner(n, 1) = dx_ds;

    double ds_ds = -model.u;
    for (int j = 0; j < n; ++j) {
        jac(n, j) = -model.mu(j, s) / model.yields[static_cast<std::size_t>(j)];
        ds_ds -= model.mu_prime(j, s) * state.x(j) / model.yields[static_cast<std::size_t>(j)];
    }
    jac(n, n) = ds_ds;
    return jac;
}

inline Eigen::MatrixXd finite_difference_jacobian(const ChemostatModel& model, const State& state) {
    const int dim = model.n + 1;
    const RhsEvaluator rhs(model);
    const Eigen::VectorXd y0 = state.as_vector();
    Eigen::MatrixXd jac(dim, dim);
    Eigen::VectorXd yp = y0, ym = y0, fp(dim), fm(dim);
    for (int j = 0; j < dim; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(y0(j)));
        yp(j) = y0(j) + h;
        ym(j) = y0(j) - h;
        rhs(yp, fp);
        rhs(ym, fm);
        jac.col(j) = (fp - fm) / (2.0 * h);
        yp(j) = y0(j);
        ym(j) = y0(j);
    }
    return jac;
}

inline double jacobian_discrepancy(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.rows(); ++i)
        for (Eigen::Index j = 0; j < analytic.cols(); ++j)
            worst = std::max(worst, std::abs(analytic(i, j) - fd(i, j)) /
                                        std::max(1.0, std::abs(analytic(i, j))));
    return worst;
}

inline std::pair<Eigen::MatrixXd, double> checked_jacobian(const ChemostatModel& model,
                                                           const State& state) {
    const Eigen::MatrixXd analytic = analytic_jacobian(model, state);
    const double disc = jacobian_discrepancy(analytic, finite_difference_jacobian(model, state));
    if (disc > 1e-5)
        throw NumericError("jacobian: analytic/finite-difference discrepancy " +
                           std::to_string(disc));
    return {analytic, disc};
}

} // namespace detail

/// Analytic Jacobian of the right-hand side at a state, cross-checked against
/// central finite differences (relative tolerance 1e-5).
inline Eigen::MatrixXd jacobian(const ChemostatModel& model, const State& state) {
    if (state.x.size() != model.n) throw ConfigError("jacobian: state dimension mismatch");
    return detail::checked_jacobian(model, state).first;
}

inline StabilityReport classify(const ChemostatModel& model, const Equilibrium& eq,
                                double tol = 1e-9) {
    auto [jac, disc] = detail::checked_jacobian(model, eq.state);
    StabilityReport report;
    report.jacobian = std::move(jac);
    report.fd_discrepancy = disc;
    report.margin = spectral_abscissa(report.jacobian);
    report.hurwitz = report.margin < -tol;
    report.marginal = std::abs(report.margin) <= tol;
    return report;
}

} // namespace chemostat
