#pragma once

#include "etaq/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace etaq {

/// Eigen-decomposition of a small symmetric matrix: a = vectors * diag(values) * vectors^T.
struct SymmetricEigen {
    Eigen::VectorXd values;   ///< ascending
    Eigen::MatrixXd vectors;  ///< orthonormal columns, matching `values`
    int sweeps = 0;
};

/// Cyclic Jacobi rotations with a fixed (row-major upper triangle) sweep order.
/// Converged when the off-diagonal Frobenius norm drops below 1e-13 * ||A||_F.
[[nodiscard]] inline SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input,
                                                 int max_sweeps = 64) {
    const auto n = input.rows();
    if (n != input.cols() || n == 0) throw ArgumentError("jacobi_eigen needs a square matrix");
    if (!input.allFinite()) throw NumericError("jacobi_eigen: non-finite matrix entry");

    Eigen::MatrixXd a = 0.5 * (input + input.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double scale = a.norm();

    auto off_norm = [&] {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    int sweep = 0;
    if (scale > 0.0) {
        while (off_norm() >= 1e-13 * scale) {
            if (sweep++ >= max_sweeps) {
                throw NumericError("jacobi_eigen: no convergence after " +
                                   std::to_string(max_sweeps) + " sweeps");
            }
            for (Eigen::Index p = 0; p < n; ++p) {
                for (Eigen::Index q = p + 1; q < n; ++q) {
                    const double apq = a(p, q);
                    if (apq == 0.0) continue;
                    // Rotation angle annihilating a(p,q) (Rutishauser's formulation).
                    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                    const double t =
                        std::abs(theta) > 1e100
                            ? 0.5 / theta
                            : (theta >= 0.0 ? 1.0 : -1.0) /
                                  (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    const double s = t * c;
                    for (Eigen::Index r = 0; r < n; ++r) {
                        const double arp = a(r, p);
                        const double arq = a(r, q);
                        a(r, p) = c * arp - s * arq;
                        a(r, q) = s * arp + c * arq;
                    }
                    for (Eigen::Index r = 0; r < n; ++r) {
                        const double apr = a(p, r);
                        const double aqr = a(q, r);
                        a(p, r) = c * apr - s * aqr;
                        a(q, r) = s * apr + c * aqr;
                    }
                    a(p, q) = a(q, p) = 0.0;
                    for (Eigen::Index r = 0; r < n; ++r) {
                        const double vrp = v(r, p);
                        const double vrq = v(r, q);
                        v(r, p) = c * vrp - s * vrq;
                        v(r, q) = s * vrp + c * vrq;
                    }
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    out.sweeps = sweep;
    return out;
}

/// Smallest eigenvalue of a symmetric matrix.
[[nodiscard]] inline double min_eigenvalue(const Eigen::MatrixXd& a) {
    return jacobi_eigen(a).values[0];
}

} // namespace etaq
