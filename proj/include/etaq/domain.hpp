#pragma once

#include "etaq/errors.hpp"
#include "etaq/geometry.hpp"
#include "etaq/jacobi.hpp"
#include "etaq/symfun.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace etaq {

enum class Shape { box, ball, ellipsoid, superellipsoid };

[[nodiscard]] inline std::string to_string(Shape s) {
    switch (s) {
        case Shape::box: return "box";
        case Shape::ball: return "ball";
        case Shape::ellipsoid: return "ellipsoid";
        case Shape::superellipsoid: return "superellipsoid";
    }
    return "unknown";
}

/// Origin-centred domain. `semi_axes` are half-widths (box), the radius repeated
/// (ball) or the semi-axes (ellipsoid, superellipsoid |x1/a1|^p + ... = 1).
struct DomainSpec {
    Shape shape = Shape::ball;
    Vec semi_axes;
    double exponent = 2.0;

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(semi_axes.size()); }

    [[nodiscard]] static DomainSpec ball(int n, double radius) {
        return {Shape::ball, Vec::Constant(n, radius), 2.0};
    }
    [[nodiscard]] static DomainSpec box(Vec half_widths) {
        return {Shape::box, std::move(half_widths), 2.0};
    }
    [[nodiscard]] static DomainSpec ellipsoid(Vec axes) {
        return {Shape::ellipsoid, std::move(axes), 2.0};
    }
    [[nodiscard]] static DomainSpec superellipsoid(Vec axes, double p) {
        return {Shape::superellipsoid, std::move(axes), p};
    }

    void validate() const {
        if (semi_axes.size() < 2) throw ArgumentError("domain dimension must be >= 2");
        if (!semi_axes.allFinite() || semi_axes.minCoeff() <= 0.0) {
            throw ArgumentError("domain size parameters must be positive");
        }
        if (shape == Shape::ball && semi_axes.maxCoeff() != semi_axes.minCoeff()) {
            throw ArgumentError("ball needs a single radius");
        }
        if (shape == Shape::superellipsoid && !(exponent >= 2.0 && exponent <= 6.0)) {
            throw ArgumentError("superellipsoid exponent must lie in [2, 6]");
        }
    }

    /// Radius of the largest centred inscribed ball.
    [[nodiscard]] double inradius() const { return semi_axes.minCoeff(); }
    /// Radius of the smallest centred ball containing the domain.
    [[nodiscard]] double outradius() const {
        if (shape == Shape::box) return semi_axes.norm();
        return semi_axes.maxCoeff();
    }
    [[nodiscard]] double level_exponent() const {
        return shape == Shape::superellipsoid ? exponent : 2.0;
    }
};

/// Boundary point with its inward normal and principal curvatures of the boundary.
struct BoundaryPoint {
    Vec x;
    Vec inward_normal;
    EigenTuple kappa_b;
};

namespace detail {

/// phi(y) = sum |y_i / a_i|^p - 1, negative inside.
inline double level(const DomainSpec& d, const Vec& y) {
    const double p = d.level_exponent();
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s += std::pow(std::abs(y[i] / d.semi_axes[i]), p);
    return s - 1.0;
}

inline Vec level_gradient(const DomainSpec& d, const Vec& y) {
    const double p = d.level_exponent();
    Vec g(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double a = d.semi_axes[i];
        const double t = std::abs(y[i]) / a;
        g[i] = p * std::pow(t, p - 1.0) * (y[i] >= 0.0 ? 1.0 : -1.0) / a;
    }
    return g;
}

inline Vec level_hessian_diag(const DomainSpec& d, const Vec& y) {
    const double p = d.level_exponent();
    Vec h(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double a = d.semi_axes[i];
        const double t = std::abs(y[i]) / a;
        h[i] = p * (p - 1.0) * (p == 2.0 ? 1.0 : std::pow(t, p - 2.0)) / (a * a);
    }
    return h;
}

/// Damped Newton on the Lagrange system y - x - mu grad(phi)(y) = 0, phi(y) = 0.
inline bool project_from(const DomainSpec& d, const Vec& x, Vec y, double& dist, Vec& foot) {
    const auto n = x.size();
    auto residual = [&](const Vec& yy, double mu) {
        Vec r(n + 1);
        r.head(n) = yy - x - mu * level_gradient(d, yy);
        r[n] = level(d, yy);
        return r;
    };
    Vec g = level_gradient(d, y);
    double mu = g.squaredNorm() > 0.0 ? (y - x).dot(g) / g.squaredNorm() : 0.0;
    Vec r = residual(y, mu);
    const double scale = std::max(1.0, d.semi_axes.maxCoeff());
    for (int it = 0; it < 200; ++it) {
        if (r.norm() < 1e-14 * scale) {
            dist = (x - y).norm();
            foot = y;
            return true;
        }
        g = level_gradient(d, y);
        Mat jac = Mat::Zero(n + 1, n + 1);
        jac.topLeftCorner(n, n) = Mat::Identity(n, n);
        jac.topLeftCorner(n, n).diagonal() -= mu * level_hessian_diag(d, y);
        jac.topRightCorner(n, 1) = -g;
        jac.bottomLeftCorner(1, n) = g.transpose();
        const Vec step = jac.fullPivLu().solve(-r);
        if (!step.allFinite()) return false;
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            const Vec y_try = y + alpha * step.head(n);
            const double mu_try = mu + alpha * step[n];
            const Vec r_try = residual(y_try, mu_try);
            if (r_try.norm() < (1.0 - 1e-4 * alpha) * r.norm()) {
                y = y_try;
                mu = mu_try;
                r = r_try;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (r.norm() < 1e-12 * scale) {
                dist = (x - y).norm();
                foot = y;
                return true;
            }
            return false;
        }
    }
    return false;
}

/// Nearest boundary point of an ellipsoid / superellipsoid, from several starts.
inline double nearest_boundary_distance(const DomainSpec& d, const Vec& x, Vec* foot_out) {
    const auto n = x.size();
    const double p = d.level_exponent();
    std::vector<Vec> starts;
    const double r = level(d, x) + 1.0;
    if (r > 0.0) starts.push_back(x / std::pow(r, 1.0 / p));
    for (Eigen::Index i = 0; i < n; ++i) {
        double rest = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) rest += std::pow(std::abs(x[j] / d.semi_axes[j]), p);
        if (rest < 1.0) {
            const double yi = d.semi_axes[i] * std::pow(1.0 - rest, 1.0 / p);
            Vec a = x, b = x;
            a[i] = yi;
            b[i] = -yi;
            starts.push_back(a);
            starts.push_back(b);
        }
    }
    if (starts.empty()) starts.push_back(d.semi_axes.cwiseProduct(Vec::Unit(n, 0)));

    double best = std::numeric_limits<double>::infinity();
    Vec best_foot;
    for (const Vec& s : starts) {
        double dist = 0.0;
        Vec foot;
        if (project_from(d, x, s, dist, foot) && dist < best) {
            best = dist;
            best_foot = foot;
        }
    }
    if (!std::isfinite(best)) throw NumericError("boundary projection did not converge");
    if (foot_out) *foot_out = best_foot;
    return best;
}

} // namespace detail

/// Positive inside, negative outside, zero on the boundary.
[[nodiscard]] inline double signed_distance(const DomainSpec& d, const Vec& x) {
    if (x.size() != d.semi_axes.size()) throw ArgumentError("point dimension mismatch");
    switch (d.shape) {
        case Shape::ball: return d.semi_axes[0] - x.norm();
        case Shape::box: {
            const Vec excess = x.cwiseAbs() - d.semi_axes;
            if (excess.maxCoeff() <= 0.0) return -excess.maxCoeff();
            return -excess.cwiseMax(0.0).norm();
        }
        case Shape::ellipsoid:
        case Shape::superellipsoid: {
            const double phi = detail::level(d, x);
            if (phi == 0.0) return 0.0;
            const double dist = detail::nearest_boundary_distance(d, x, nullptr);
            return phi < 0.0 ? dist : -dist;
        }
    }
    return 0.0;
}

/// Principal curvatures of the boundary with respect to the inner normal at `xb`.
[[nodiscard]] inline BoundaryPoint boundary_curvatures(const DomainSpec& d, const Vec& xb) {
    d.validate();
    const double sd = signed_distance(d, xb);
    if (std::abs(sd) >= 1e-10) {
        throw ArgumentError("boundary_curvatures: point is off the boundary (distance " +
                            std::to_string(sd) + ")");
    }
    const auto n = xb.size();
    BoundaryPoint bp;
    bp.x = xb;

    Vec grad;
    Mat hess = Mat::Zero(n, n);
    if (d.shape == Shape::box) {
        int face = -1;
        int touching = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(std::abs(xb[i]) - d.semi_axes[i]) < 1e-10) {
                face = static_cast<int>(i);
                ++touching;
            }
        }
        if (touching != 1) throw ArgumentError("boundary_curvatures: box edge or corner");
        grad = Vec::Zero(n);
        grad[face] = xb[face] > 0.0 ? 1.0 : -1.0;
    } else {
        grad = detail::level_gradient(d, xb);
        hess.diagonal() = detail::level_hessian_diag(d, xb);
    }
    const double gnorm = grad.norm();
    const Vec outward = grad / gnorm;
    bp.inward_normal = -outward;

    // Orthonormal tangent basis: Householder reflection mapping e_0 to the normal.
    Vec v = outward;
    v[0] -= 1.0;
    Mat house = Mat::Identity(n, n);
    if (v.norm() > 1e-14) house -= 2.0 * v * v.transpose() / v.squaredNorm();
    const Mat tangent = house.rightCols(n - 1);
    const Mat shape_op = tangent.transpose() * hess * tangent / gnorm;
    bp.kappa_b = jacobi_eigen(shape_op).values;
    return bp;
}

/// Quasi-uniform points on the unit sphere S^{n-1}.
[[nodiscard]] inline std::vector<Vec> sphere_samples(int n, int count) {
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(count));
    if (n == 2) {
        for (int i = 0; i < count; ++i) {
            const double t = 2.0 * std::numbers::pi * (i + 0.5) / count;
            Vec p(2);
            p << std::cos(t), std::sin(t);
            pts.push_back(p);
        }
    } else if (n == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double t = golden * i;
            Vec p(3);
            p << r * std::cos(t), r * std::sin(t), z;
            pts.push_back(p);
        }
    } else {
        std::mt19937_64 rng(12345);
        std::normal_distribution<double> normal;
        for (int i = 0; i < count; ++i) {
            Vec p(n);
            for (int j = 0; j < n; ++j) p[j] = normal(rng);
            pts.push_back(p.normalized());
        }
    }
    return pts;
}

/// Radial map of the unit sphere onto the boundary.
[[nodiscard]] inline std::vector<Vec> boundary_samples(const DomainSpec& d, int count) {
    std::vector<Vec> out;
    for (const Vec& s : sphere_samples(d.dim(), count)) {
        if (d.shape == Shape::box) {
            out.push_back(s / s.cwiseQuotient(d.semi_axes).cwiseAbs().maxCoeff());
        } else {
            out.push_back(s / std::pow(detail::level(d, s) + 1.0, 1.0 / d.level_exponent()));
        }
    }
    return out;
}

struct ConvexityCertificate {
    bool certified = false;
    double K_found = 0.0;
    bool non_smooth = false;  ///< boundary has edges/corners; certificate refused
    int samples = 0;
};

/// Default boundary sampling density 64 n^{n-1}.
[[nodiscard]] inline int default_boundary_samples(int n) {
    return 64 * static_cast<int>(std::pow(n, n - 1));
}

/// Searches K = 1, 2, 4, ... <= K_max with (kappa_b(x), K) in tilde-Gamma_k at all sampled
/// boundary points. The certificate holds up to sampling resolution.
[[nodiscard]] inline ConvexityCertificate eta_k_convexity(const DomainSpec& d, int k, double K_max,
                                                          int samples = 0) {
    d.validate();
    const int n = d.dim();
    if (k < 1 || k >= n) throw ArgumentError("(eta,k)-convexity requires 1 <= k < n");
    ConvexityCertificate cert;
    cert.samples = samples > 0 ? samples : default_boundary_samples(n);
    if (d.shape == Shape::box) {
        cert.non_smooth = true;
        return cert;
    }
    std::vector<EigenTuple> curvatures;
    for (const Vec& xb : boundary_samples(d, cert.samples)) {
        curvatures.push_back(boundary_curvatures(d, xb).kappa_b);
    }
    for (double K = 1.0; K <= K_max; K *= 2.0) {
        bool ok = true;
        for (const EigenTuple& kb : curvatures) {
            EigenTuple full(n);
            full.head(n - 1) = kb;
            full[n - 1] = K;
            if (!in_tilde_gamma(k, full)) {
                ok = false;
                break;
            }
        }
        if (ok) {
            cert.certified = true;
            cert.K_found = K;
            return cert;
        }
    }
    return cert;
}

} // namespace etaq
