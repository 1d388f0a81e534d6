#pragma once

#include "etaq/errors.hpp"
#include "etaq/geometry.hpp"
#include "etaq/jacobi.hpp"
#include "etaq/symfun.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace etaq {

/// Value and exact first derivatives of G(D^2u, Du) = f(lambda(A[u])).
struct LinearizationData {
    double value = 0.0;
    Mat Gij;              ///< dG / du_ij
    Vec Gs;               ///< dG / du_s
    Mat F;                ///< df / da_ij
    EigenTuple f_grad;    ///< df / dkappa_i
    EigenTuple kappa;
};

/// Derivative of f with respect to the curvature matrix, diagonalized.
struct FMatrix {
    Mat F;
    EigenTuple f_grad;
    EigenTuple kappa;
    Mat frame;  ///< orthogonal B with a = B diag(kappa) B^T
};

namespace detail {

inline void require_dim(const QuotientSpec& spec, Eigen::Index n) {
    spec.validate();
    if (n != spec.n) {
        throw ArgumentError("dimension " + std::to_string(n) + " does not match spec n=" +
                            std::to_string(spec.n));
    }
}

inline void require_admissible(const QuotientSpec& spec, const EigenTuple& lambda) {
    const int m = first_failing_sigma(spec.k, lambda);
    if (m != 0) {
        throw ConeError("curvature outside the admissible cone: sigma_" + std::to_string(m) +
                            "(lambda) = " + std::to_string(elementary_sigma(m, lambda)),
                        m, elementary_sigma(m, lambda));
    }
}

/// df/dkappa_i where f(kappa) = q(lambda(kappa)) and lambda_p = sum_{j != p} kappa_j.
inline EigenTuple chain_to_kappa(const EigenTuple& dq_dlambda) {
    return EigenTuple::Constant(dq_dlambda.size(), dq_dlambda.sum()) - dq_dlambda;
}

/// G^{ij} and G^s for any symmetric function of the principal curvatures whose
/// gradient in kappa is `f_grad`.
inline LinearizationData linearize_symmetric(double value, const EigenTuple& f_grad,
                                             const GraphJet& jet, const CurvatureData& cd) {
    const MetricPack& m = cd.metric;
    const double w = m.w;
    const Vec& p = jet.du;

    LinearizationData lin;
    lin.value = value;
    lin.f_grad = f_grad;
    lin.kappa = cd.kappa;
    lin.F = cd.frame * f_grad.asDiagonal() * cd.frame.transpose();
    lin.F = 0.5 * (lin.F + lin.F.transpose());

    lin.Gij = m.gamma_up * lin.F * m.gamma_up / w;
    lin.Gij = 0.5 * (lin.Gij + lin.Gij.transpose());

    // G^s = u_s/w^2 sum f_i kappa_i
    //     + 2/(w(1+w)) sum_{t,j} F^{ij} a_{it} (w u_t gamma^{sj} + u_j gamma^{ts})
    const Mat fa = lin.F * cd.a;
    const double trace_term = f_grad.dot(cd.kappa);
    lin.Gs = p * (trace_term / (w * w)) +
             (2.0 / (w * (1.0 + w))) *
                 (w * (m.gamma_up * (fa * p)) + m.gamma_up * (fa.transpose() * p));
    return lin;
}

} // namespace detail

/// G = sigma_k/sigma_l(lambda(eta)) at the jet.
[[nodiscard]] inline double evaluate(const QuotientSpec& spec, const GraphJet& jet) {
    detail::require_dim(spec, jet.du.size());
    const EigenTuple lambda = eta_eigenvalues(jet);
    detail::require_admissible(spec, lambda);
    return quotient_value(spec, lambda);
}

/// f as a function of the curvature entries a_ij.
[[nodiscard]] inline double evaluate_curvature_matrix(const QuotientSpec& spec, const Mat& a) {
    detail::require_dim(spec, a.rows());
    const EigenTuple lambda = kappa_to_lambda(jacobi_eigen(a).values);
    detail::require_admissible(spec, lambda);
    return quotient_value(spec, lambda);
}

/// F^{ij} = sum_s b_is f_s b_js for the eigen-decomposition a = B diag(kappa) B^T.
[[nodiscard]] inline FMatrix f_matrix(const QuotientSpec& spec, const Mat& a) {
    detail::require_dim(spec, a.rows());
    auto eig = jacobi_eigen(a);
    const EigenTuple lambda = kappa_to_lambda(eig.values);
    detail::require_admissible(spec, lambda);
    FMatrix out;
    out.f_grad = detail::chain_to_kappa(quotient_gradient(spec, lambda));
    out.kappa = std::move(eig.values);
    out.frame = std::move(eig.vectors);
    out.F = out.frame * out.f_grad.asDiagonal() * out.frame.transpose();
    out.F = 0.5 * (out.F + out.F.transpose());
    return out;
}

[[nodiscard]] inline LinearizationData linearize(const QuotientSpec& spec, const GraphJet& jet,
                                                 const CurvatureData& cd) {
    detail::require_dim(spec, jet.du.size());
    detail::require_admissible(spec, cd.lambda_eta);
    const double value = quotient_value(spec, cd.lambda_eta);
    const EigenTuple f_grad = detail::chain_to_kappa(quotient_gradient(spec, cd.lambda_eta));
    return detail::linearize_symmetric(value, f_grad, jet, cd);
}

[[nodiscard]] inline LinearizationData linearize(const QuotientSpec& spec, const GraphJet& jet) {
    return linearize(spec, jet, curvature_data(jet));
}

/// Smallest eigenvalue of G^{ij}; positive on admissible jets.
[[nodiscard]] inline double ellipticity_margin(const LinearizationData& lin) {
    return min_eigenvalue(lin.Gij);
}

/// Smallest R (bracketed to 1% relative) with f(kappa_1, ..., kappa_n + R) >= target.
[[nodiscard]] inline double curvature_unbounded_check(const QuotientSpec& spec,
                                                      const EigenTuple& kappa, double target) {
    detail::require_dim(spec, kappa.size());
    detail::require_admissible(spec, kappa_to_lambda(kappa));
    auto f_at = [&](double r) {
        EigenTuple shifted = kappa;
        shifted[shifted.size() - 1] += r;
        return quotient_value(spec, kappa_to_lambda(shifted));
    };
    if (f_at(0.0) >= target) return 0.0;

    double lo = 0.0;
    double hi = 1.0;
    while (f_at(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) {
            throw NumericError("curvature_unbounded_check: no R <= 1e12 reaches the target");
        }
    }
    while (hi - lo > 0.01 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (f_at(mid) >= target) hi = mid;
        else lo = mid;
    }
    return hi;
}

} // namespace etaq
