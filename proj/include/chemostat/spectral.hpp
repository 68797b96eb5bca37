#pragma once

#include "chemostat/errors.hpp"
#include "chemostat/matrix_props.hpp"
#include "chemostat/model.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <string>

namespace chemostat {

/// Dominant spectral data of an essentially non-negative irreducible matrix:
/// the (real, simple) spectral abscissa with unit positive right eigenvector
/// and left eigenvector rescaled to w'v = 1.
struct PerronPair {
    double lambda = 0.0;
    Eigen::VectorXd v;
    Eigen::VectorXd w;
};

namespace detail {

inline double matrix_scale(const Eigen::MatrixXd& a) { return std::max(1.0, a.norm()); }

/// Eigenvector of a real matrix for a (numerically) real simple eigenvalue:
/// rotate the complex column onto the real axis and normalize to unit norm.
inline Eigen::VectorXd realize_eigenvector(const Eigen::MatrixXcd& vectors, Eigen::Index col) {
    const Eigen::VectorXcd raw = vectors.col(col);
    Eigen::Index pivot = 0;
    raw.cwiseAbs().maxCoeff(&pivot);
    const std::complex<double> phase = raw(pivot) / std::abs(raw(pivot));
    Eigen::VectorXd v = (raw / phase).real();
    v.normalize();
    if (v.sum() < 0.0) v = -v;
    return v;
}

} // namespace detail

/// Largest real part among the eigenvalues of A (dense eigendecomposition).
/// For essentially non-negative A the value is certified against the
/// Collatz-Wielandt row-sum bounds of A' (column sums of A).
inline double spectral_abscissa(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw ConfigError("spectral_abscissa: matrix must be square");
    if (!all_finite(a)) throw ConfigError("spectral_abscissa: non-finite entries");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw NumericError("spectral_abscissa: eigensolver failed");
    const double lambda = solver.eigenvalues().real().maxCoeff();
    if (is_essentially_nonnegative(a)) {
        const auto [lo, hi] = row_sum_bounds(a.transpose());
        const double tol = 1e-9 * detail::matrix_scale(a);
        if (lambda < lo - tol || lambda > hi + tol)
            throw NumericError("spectral_abscissa: Collatz-Wielandt certification failed");
    }
    return lambda;
}

/// Perron pair of an essentially non-negative irreducible matrix.
inline PerronPair perron_pair(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw ConfigError("perron_pair: matrix must be square");
    if (!all_finite(a)) throw ConfigError("perron_pair: non-finite entries");
    if (!is_essentially_nonnegative(a))
        throw DomainError("perron_pair: matrix is not essentially non-negative");
    if (!is_irreducible(a)) throw DomainError("perron_pair: matrix is reducible");

    const double scale = detail::matrix_scale(a);
    Eigen::EigenSolver<Eigen::MatrixXd> right(a);
    if (right.info() != Eigen::Success) throw NumericError("perron_pair: eigensolver failed");

    const Eigen::VectorXcd values = right.eigenvalues();
    Eigen::Index dom = 0;
    values.real().maxCoeff(&dom);
    const std::complex<double> dominant = values(dom);
    if (std::abs(dominant.imag()) > 1e-10 * scale)
        throw NumericError("perron_pair: dominant eigenvalue is not real");
    for (Eigen::Index k = 0; k < values.size(); ++k)
        if (k != dom && std::abs(values(k) - dominant) <= 1e-10 * scale)
            throw NumericError("perron_pair: dominant eigenvalue is not simple");

    PerronPair pair;
    pair.lambda = dominant.real();
    pair.v = detail::realize_eigenvector(right.eigenvectors(), dom);
    if (pair.v.minCoeff() <= 0.0) throw NumericError("perron_pair: right eigenvector not positive");

    Eigen::EigenSolver<Eigen::MatrixXd> left(a.transpose());
    if (left.info() != Eigen::Success) throw NumericError("perron_pair: eigensolver failed");
    Eigen::Index match = 0;
    (left.eigenvalues().array() - dominant).abs().matrix().minCoeff(&match);
    Eigen::VectorXd w = detail::realize_eigenvector(left.eigenvectors(), match);
    if (w.minCoeff() <= 0.0) throw NumericError("perron_pair: left eigenvector not positive");
    pair.w = w / w.dot(pair.v);

    const double res_tol = 1e-10 * scale;
    if ((a * pair.v - pair.lambda * pair.v).norm() > res_tol ||
        (a.transpose() * pair.w - pair.lambda * pair.w).norm() > res_tol * std::max(1.0, pair.w.norm()))
        throw NumericError("perron_pair: residual check failed");
    return pair;
}

/// The eps -> infinity limit of the critical dilution rate: w' D(s_in) v for
/// the Perron pair of the exchange matrix at s_in.
inline double mu_hat(const ChemostatModel& model) {
    const PerronPair pair = perron_pair(model.perturbation_matrix(model.s_in));
    return pair.w.dot(model.growth_rates(model.s_in).cwiseProduct(pair.v));
}

} // namespace chemostat
