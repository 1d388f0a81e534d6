#pragma once

#include "etaq/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>

namespace etaq {

struct LinearSolveInfo {
    bool used_direct = false;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Solves J x = rhs with ILUT-preconditioned BiCGSTAB; falls back to sparse LU when the
/// Krylov iteration breaks down or misses `tol` (relative residual).
[[nodiscard]] inline Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& jac,
                                                  const Eigen::VectorXd& rhs, double tol = 1e-10,
                                                  LinearSolveInfo* info = nullptr) {
    if (jac.rows() != jac.cols() || jac.rows() != rhs.size()) {
        throw ArgumentError("linear_solve: dimension mismatch");
    }
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) {
        if (info) *info = {};
        return Eigen::VectorXd::Zero(rhs.size());
    }
    auto rel = [&](const Eigen::VectorXd& x) { return (jac * x - rhs).norm() / bnorm; };

    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> krylov;
    krylov.preconditioner().setDroptol(1e-6);
    krylov.preconditioner().setFillfactor(20);
    krylov.setTolerance(0.1 * tol);
    krylov.setMaxIterations(std::max<Eigen::Index>(200, 4 * jac.rows()));
    krylov.compute(jac);
    if (krylov.info() == Eigen::Success) {
        Eigen::VectorXd x = krylov.solve(rhs);
        if (krylov.info() == Eigen::Success && x.allFinite()) {
            const double r = rel(x);
            if (r <= tol) {
                if (info) *info = {false, static_cast<int>(krylov.iterations()), r};
                return x;
            }
        }
    }

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> direct;
    direct.compute(jac);
    if (direct.info() != Eigen::Success) {
        throw NumericError("linear_solve: Krylov failed and sparse LU factorization failed: " +
                           direct.lastErrorMessage());
    }
    Eigen::VectorXd x = direct.solve(rhs);
    const double r = x.allFinite() ? rel(x) : HUGE_VAL;
    if (!(r <= tol)) {
        throw NumericError("linear_solve: residual " + std::to_string(r) + " above tolerance");
    }
    if (info) *info = {true, 0, r};
    return x;
}

} // namespace etaq
