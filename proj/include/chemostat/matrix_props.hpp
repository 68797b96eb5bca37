#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

namespace chemostat {

inline bool all_finite(const Eigen::MatrixXd& a) { return a.allFinite(); }

inline double max_abs_entry(const Eigen::MatrixXd& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// Off-diagonal entries >= -tol_scale * max|entry|.
inline bool is_essentially_nonnegative(const Eigen::MatrixXd& a, double tol_scale = 1e-13) {
    const double tol = tol_scale * std::max(1.0, max_abs_entry(a));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j && a(i, j) < -tol) return false;
    return true;
}

inline double max_abs_column_sum(const Eigen::MatrixXd& a) {
    return a.colwise().sum().cwiseAbs().maxCoeff();
}

/// Irreducibility via strong connectivity of the digraph of strictly positive
/// off-diagonal entries ("positive" meaning > 1e-13 * max|entry|). A 1x1
/// matrix is treated as reducible: Perron-Frobenius uniqueness statements are
/// vacuous there and callers reject it as outside the theory's hypotheses.
inline bool is_irreducible(const Eigen::MatrixXd& a, double tol_scale = 1e-13) {
    const Eigen::Index n = a.rows();
    if (n <= 1) return false;
    const double tol = tol_scale * max_abs_entry(a);

    auto reaches_all = [&](const Eigen::MatrixXd& m) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        Eigen::Index count = 1;
        while (!stack.empty()) {
            const Eigen::Index i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i != j && !seen[static_cast<std::size_t>(j)] && m(i, j) > tol) {
                    seen[static_cast<std::size_t>(j)] = 1;
                    ++count;
                    stack.push_back(j);
                }
            }
        }
        return count == n;
    };

    // Strongly connected iff node 0 reaches all nodes in the graph and in its
    // transpose.
    return reaches_all(a) && reaches_all(a.transpose());
}

/// Collatz-Wielandt row-sum sandwich for an essentially non-negative matrix:
/// min_i sum_j a_ij <= lambda(A) <= max_i sum_j a_ij.
inline std::pair<double, double> row_sum_bounds(const Eigen::MatrixXd& a) {
    const Eigen::VectorXd sums = a.rowwise().sum();
    return {sums.minCoeff(), sums.maxCoeff()};
}

} // namespace chemostat
