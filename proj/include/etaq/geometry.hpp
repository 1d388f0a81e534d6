#pragma once

#include "etaq/errors.hpp"
#include "etaq/jacobi.hpp"
#include "etaq/symfun.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace etaq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Second-order data of a graph x -> (x, u(x)) at one point.
struct GraphJet {
    Vec x;
    double u = 0.0;
    Vec du;
    Mat d2u;

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(du.size()); }

    void validate() const {
        const auto n = du.size();
        if (n < 1 || d2u.rows() != n || d2u.cols() != n || (x.size() != 0 && x.size() != n)) {
            throw ArgumentError("graph jet has inconsistent dimensions");
        }
        if (!du.allFinite() || !d2u.allFinite() || !std::isfinite(u)) {
            throw ArgumentError("graph jet has non-finite entries");
        }
        const double asym = (d2u - d2u.transpose()).norm();
        if (asym > 1e-13 * std::max(1.0, d2u.norm())) {
            throw ArgumentError("graph jet Hessian is not symmetric");
        }
    }
};

/// Induced metric of a spacelike graph and its square-root factors.
struct MetricPack {
    double w = 1.0;        ///< sqrt(1 - |Du|^2)
    double tilde_w = 1.0;  ///< 1 / w
    Mat g;                 ///< delta_ij - u_i u_j
    Mat g_inv;             ///< delta_ij + u_i u_j / w^2
    Mat gamma_up;          ///< delta_ij + u_i u_j / (w (1 + w))
    Mat gamma_down;        ///< delta_ij - u_i u_j / (1 + w); gamma_down^2 = g
    Vec nu;                ///< (Du, 1) / w in R^{n,1}
};

/// Full pointwise geometry at a jet.
struct CurvatureData {
    MetricPack metric;
    Mat a;               ///< (1/w) gamma_up D^2u gamma_up
    EigenTuple kappa;    ///< ascending eigenvalues of a
    Mat frame;           ///< orthonormal eigenvectors of a (columns match kappa)
    EigenTuple lambda_eta;
    double mean_curvature = 0.0;
};

/// 1 - |Du|; positive iff the jet is spacelike.
[[nodiscard]] inline double spacelike_margin(const GraphJet& jet) { return 1.0 - jet.du.norm(); }

[[nodiscard]] inline MetricPack metric_pack(const GraphJet& jet) {
    jet.validate();
    const double margin = spacelike_margin(jet);
    if (!(margin > 0.0)) {
        throw SpacelikeError("jet is not spacelike (|Du| = " + std::to_string(jet.du.norm()) + ")",
                             margin);
    }
    const auto n = jet.du.size();
    const Vec& p = jet.du;
    const Mat pp = p * p.transpose();
    const Mat id = Mat::Identity(n, n);

    MetricPack m;
    // 1 - |p|^2 = (1 - |p|)(1 + |p|) keeps relative accuracy near the light cone.
    m.w = std::sqrt(margin * (1.0 + p.norm()));
    m.tilde_w = 1.0 / m.w;
    m.g = id - pp;
    m.g_inv = id + pp / (m.w * m.w);
    m.gamma_up = id + pp / (m.w * (1.0 + m.w));
    m.gamma_down = id - pp / (1.0 + m.w);
    m.nu.resize(n + 1);
    m.nu.head(n) = p / m.w;
    m.nu[n] = 1.0 / m.w;
    return m;
}

/// a_ij = (1/w) gamma^{ik} u_kl gamma^{lj}; its eigenvalues are the principal curvatures.
[[nodiscard]] inline Mat curvature_matrix(const GraphJet& jet, const MetricPack& m) {
    Mat a = m.gamma_up * jet.d2u * m.gamma_up / m.w;
    return 0.5 * (a + a.transpose());
}

[[nodiscard]] inline Mat curvature_matrix(const GraphJet& jet) {
    return curvature_matrix(jet, metric_pack(jet));
}

[[nodiscard]] inline CurvatureData curvature_data(const GraphJet& jet) {
    CurvatureData cd;
    cd.metric = metric_pack(jet);
    cd.a = curvature_matrix(jet, cd.metric);
    auto eig = jacobi_eigen(cd.a);
    cd.kappa = std::move(eig.values);
    cd.frame = std::move(eig.vectors);
    cd.lambda_eta = kappa_to_lambda(cd.kappa);
    cd.mean_curvature = cd.kappa.sum();
    return cd;
}

/// Ascending principal curvatures.
[[nodiscard]] inline EigenTuple principal_curvatures(const GraphJet& jet) {
    return jacobi_eigen(curvature_matrix(jet)).values;
}

/// Eigenvalues of eta = H g - h with respect to g.
[[nodiscard]] inline EigenTuple eta_eigenvalues(const GraphJet& jet) {
    return kappa_to_lambda(principal_curvatures(jet));
}

/// Minkowski inner product on R^{n,1} (last coordinate timelike).
[[nodiscard]] inline double minkowski_dot(const Vec& a, const Vec& b) {
    const auto n = a.size() - 1;
    return a.head(n).dot(b.head(n)) - a[n] * b[n];
}

/// Jet of a function by central differences with step `step`.
template <class Fn>
[[nodiscard]] GraphJet jet_from_function(Fn&& fn, const Vec& x, double step) {
    const auto n = x.size();
    GraphJet jet;
    jet.x = x;
    jet.u = fn(x);
    jet.du.resize(n);
    jet.d2u.resize(n, n);
    const double h = step;
    for (Eigen::Index i = 0; i < n; ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fp = fn(xp), fm = fn(xm);
        jet.du[i] = (fp - fm) / (2.0 * h);
        jet.d2u(i, i) = (fp - 2.0 * jet.u + fm) / (h * h);
        for (Eigen::Index j = 0; j < i; ++j) {
            Vec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h; xpp[j] += h;
            xpm[i] += h; xpm[j] -= h;
            xmp[i] -= h; xmp[j] += h;
            xmm[i] -= h; xmm[j] -= h;
            const double v = (fn(xpp) - fn(xpm) - fn(xmp) + fn(xmm)) / (4.0 * h * h);
            jet.d2u(i, j) = jet.d2u(j, i) = v;
        }
    }
    return jet;
}

/// Mesh-quality diagnostic from the Gauss formula: the covariant Hessian of u in the
/// induced metric equals tilde_w * h_ij. Christoffel symbols come from finite
/// differences of g sampled around `x0` with spacing `h`. Returns the max-abs mismatch.
template <class Fn>
[[nodiscard]] double gauss_consistency(Fn&& fn, const Vec& x0, double h) {
    const auto n = x0.size();
    auto gradient = [&](const Vec& x) {
        Vec g(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (fn(xp) - fn(xm)) / (2.0 * h);
        }
        return g;
    };
    auto metric_at = [&](const Vec& x) {
        const Vec p = gradient(x);
        return Mat(Mat::Identity(n, n) - p * p.transpose());
    };

    const GraphJet jet = jet_from_function(fn, x0, h);
    if (!(spacelike_margin(jet) > 0.0)) {
        throw SpacelikeError("gauss_consistency: sampled function is not spacelike",
                             spacelike_margin(jet));
    }
    std::vector<Mat> dg(static_cast<std::size_t>(n));
    for (Eigen::Index m = 0; m < n; ++m) {
        Vec xp = x0, xm = x0;
        xp[m] += h;
        xm[m] -= h;
        dg[static_cast<std::size_t>(m)] = (metric_at(xp) - metric_at(xm)) / (2.0 * h);
    }
    const Mat g0 = Mat::Identity(n, n) - jet.du * jet.du.transpose();
    const Mat g0_inv = g0.inverse();
    const double w2 = 1.0 - jet.du.squaredNorm();

    auto d = [&](Eigen::Index m, Eigen::Index i, Eigen::Index j) {
        return dg[static_cast<std::size_t>(m)](i, j);
    };
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double christoffel_term = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                double gamma_kij = 0.0;
                for (Eigen::Index l = 0; l < n; ++l) {
                    gamma_kij += 0.5 * g0_inv(k, l) * (d(i, j, l) + d(j, i, l) - d(l, i, j));
                }
                christoffel_term += gamma_kij * jet.du[k];
            }
            const double covariant = jet.d2u(i, j) - christoffel_term;
            const double gauss = jet.d2u(i, j) / w2;  // tilde_w * h_ij with h_ij = u_ij / w
            worst = std::max(worst, std::abs(covariant - gauss));
        }
    }
    return worst;
}

} // namespace etaq
