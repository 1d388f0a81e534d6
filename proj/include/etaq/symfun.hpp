#pragma once

#include "etaq/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace etaq {

/// Ordered real n-tuple: principal curvatures kappa or eta-eigenvalues lambda.
using EigenTuple = Eigen::VectorXd;

/// Indices of the quotient sigma_k / sigma_l in dimension n.
struct QuotientSpec {
    int n = 3;
    int k = 2;
    int l = 0;

    /// Throws ArgumentError unless 0 <= l < k <= n and n >= 2.
    void validate() const {
        if (n < 2 || l < 0 || l >= k || k > n) {
            throw ArgumentError("quotient spec requires 0 <= l < k <= n, n >= 2 (got n=" +
                                std::to_string(n) + ", k=" + std::to_string(k) +
                                ", l=" + std::to_string(l) + ")");
        }
    }

    /// Degree of homogeneity of sigma_k / sigma_l.
    [[nodiscard]] int degree() const noexcept { return k - l; }
};

namespace detail {

inline void require_finite(const EigenTuple& lam) {
    if (lam.size() < 1 || !lam.allFinite()) {
        throw ArgumentError("eigen tuple must be non-empty with finite entries");
    }
}

} // namespace detail

/// sigma_0 .. sigma_n of `lam`, adding one variable at a time.
[[nodiscard]] inline std::vector<double> sigma_table(const EigenTuple& lam) {
    const auto n = static_cast<int>(lam.size());
    std::vector<double> e(static_cast<std::size_t>(n) + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j >= 1; --j) {
            e[static_cast<std::size_t>(j)] += lam[i] * e[static_cast<std::size_t>(j) - 1];
        }
    }
    return e;
}

/// sigma_m(lam); sigma_0 = 1.
[[nodiscard]] inline double elementary_sigma(int m, const EigenTuple& lam) {
    detail::require_finite(lam);
    if (m < 0 || m > lam.size()) {
        throw ArgumentError("sigma index " + std::to_string(m) + " out of range [0, " +
                            std::to_string(lam.size()) + "]");
    }
    return sigma_table(lam)[static_cast<std::size_t>(m)];
}

/// sigma_m of `lam` with the entries listed in `deleted` set to zero.
/// Negative m yields 0 so that sigma_{-1;i} terms vanish in derivative formulas.
[[nodiscard]] inline double sigma_deleted(int m, const EigenTuple& lam,
                                          std::span<const int> deleted) {
    detail::require_finite(lam);
    const auto n = static_cast<int>(lam.size());
    if (m > n) {
        throw ArgumentError("sigma index " + std::to_string(m) + " exceeds n=" +
                            std::to_string(n));
    }
    EigenTuple reduced = lam;
    for (std::size_t a = 0; a < deleted.size(); ++a) {
        const int idx = deleted[a];
        if (idx < 0 || idx >= n) {
            throw ArgumentError("deleted index " + std::to_string(idx) + " out of range");
        }
        for (std::size_t b = 0; b < a; ++b) {
            if (deleted[b] == idx) {
                throw ArgumentError("duplicate deleted index " + std::to_string(idx));
            }
        }
        reduced[idx] = 0.0;
    }
    if (m < 0) return 0.0;
    return sigma_table(reduced)[static_cast<std::size_t>(m)];
}

inline double sigma_deleted(int m, const EigenTuple& lam, std::initializer_list<int> deleted) {
    return sigma_deleted(m, lam, std::span<const int>(deleted.begin(), deleted.size()));
}

/// Gradient of sigma_m: entry i is sigma_{m-1;i}(lam).
[[nodiscard]] inline EigenTuple sigma_gradient(int m, const EigenTuple& lam) {
    detail::require_finite(lam);
    if (m < 1 || m > lam.size()) {
        throw ArgumentError("sigma_gradient index " + std::to_string(m) + " out of range");
    }
    EigenTuple g(lam.size());
    for (int i = 0; i < lam.size(); ++i) g[i] = sigma_deleted(m - 1, lam, {i});
    return g;
}

/// First m in 1..k with sigma_m(lam) <= 0, or 0 when lam lies in Gamma_k.
[[nodiscard]] inline int first_failing_sigma(int k, const EigenTuple& lam) {
    const auto table = sigma_table(lam);
    for (int m = 1; m <= k; ++m) {
        if (!(table[static_cast<std::size_t>(m)] > 0.0)) return m;
    }
    return 0;
}

/// Garding cone membership: sigma_m(lam) > 0 for m = 1..k (strict, no epsilon).
[[nodiscard]] inline bool in_gamma(int k, const EigenTuple& lam) {
    detail::require_finite(lam);
    if (k < 1 || k > lam.size()) {
        throw ArgumentError("cone index " + std::to_string(k) + " out of range");
    }
    return first_failing_sigma(k, lam) == 0;
}

/// lambda_i = sum_{j != i} kappa_j.
[[nodiscard]] inline EigenTuple kappa_to_lambda(const EigenTuple& kappa) {
    const double total = kappa.sum();
    return EigenTuple::Constant(kappa.size(), total) - kappa;
}

[[nodiscard]] inline bool in_tilde_gamma(int k, const EigenTuple& kappa) {
    return in_gamma(k, kappa_to_lambda(kappa));
}

namespace detail {

inline void require_positive_denominator(const QuotientSpec& spec, double sigma_l,
                                         const EigenTuple& lam) {
    if (lam.size() != spec.n) {
        throw ArgumentError("tuple length " + std::to_string(lam.size()) +
                            " does not match n=" + std::to_string(spec.n));
    }
    if (!(sigma_l > 0.0)) {
        throw ConeError("sigma_" + std::to_string(spec.l) + " = " + std::to_string(sigma_l) +
                            " <= 0: tuple outside the admissible cone",
                        spec.l == 0 ? first_failing_sigma(spec.k, lam) : spec.l, sigma_l);
    }
}

} // namespace detail

/// sigma_k(lam) / sigma_l(lam).
[[nodiscard]] inline double quotient_value(const QuotientSpec& spec, const EigenTuple& lam) {
    spec.validate();
    detail::require_finite(lam);
    const auto table = sigma_table(lam);
    const double sl = table[static_cast<std::size_t>(spec.l)];
    detail::require_positive_denominator(spec, sl, lam);
    return table[static_cast<std::size_t>(spec.k)] / sl;
}

/// f_i = (sigma_{k-1;i} sigma_l - sigma_k sigma_{l-1;i}) / sigma_l^2.
[[nodiscard]] inline EigenTuple quotient_gradient(const QuotientSpec& spec,
                                                  const EigenTuple& lam) {
    spec.validate();
    detail::require_finite(lam);
    const auto table = sigma_table(lam);
    const double sk = table[static_cast<std::size_t>(spec.k)];
    const double sl = table[static_cast<std::size_t>(spec.l)];
    detail::require_positive_denominator(spec, sl, lam);
    EigenTuple f(lam.size());
    for (int i = 0; i < lam.size(); ++i) {
        const double dk = sigma_deleted(spec.k - 1, lam, {i});
        const double dl = sigma_deleted(spec.l - 1, lam, {i});
        f[i] = (dk * sl - sk * dl) / (sl * sl);
    }
    return f;
}

/// Hessian of [sigma_k / sigma_l]^{1/(k-l)} with respect to lam.
[[nodiscard]] inline Eigen::MatrixXd quotient_power_hessian(const QuotientSpec& spec,
                                                            const EigenTuple& lam) {
    spec.validate();
    detail::require_finite(lam);
    const auto n = static_cast<int>(lam.size());
    const auto table = sigma_table(lam);
    const double a = table[static_cast<std::size_t>(spec.k)];
    const double b = table[static_cast<std::size_t>(spec.l)];
    detail::require_positive_denominator(spec, b, lam);

    EigenTuple da(n), db(n);
    Eigen::MatrixXd dda = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd ddb = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        da[i] = sigma_deleted(spec.k - 1, lam, {i});
        db[i] = sigma_deleted(spec.l - 1, lam, {i});
        for (int j = 0; j < i; ++j) {
            dda(i, j) = dda(j, i) = sigma_deleted(spec.k - 2, lam, {i, j});
            ddb(i, j) = ddb(j, i) = sigma_deleted(spec.l - 2, lam, {i, j});
        }
    }

    const double q = a / b;
    const EigenTuple dq = (da * b - a * db) / (b * b);
    Eigen::MatrixXd ddq = dda / b - (da * db.transpose() + db * da.transpose()) / (b * b) -
                          a * ddb / (b * b) + 2.0 * a * db * db.transpose() / (b * b * b);

    const double p = 1.0 / spec.degree();
    if (spec.degree() == 1) return ddq;
    if (!(q > 0.0)) {
        throw ConeError("quotient must be positive for its fractional power", spec.k, a);
    }
    const double qp = std::pow(q, p - 1.0);
    Eigen::MatrixXd h = p * qp * (ddq + (p - 1.0) * dq * dq.transpose() / q);
    return 0.5 * (h + h.transpose());
}

/// Binomial coefficient C(n, k) as a double.
[[nodiscard]] inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

/// Generalized Newton-MacLaurin inequality
///   [(s_k/C(n,k)) / (s_l/C(n,l))]^{1/(k-l)} <= [(s_r/C(n,r)) / (s_s/C(n,s))]^{1/(r-s)}
/// checked with 1e-12 relative slack. Requires lam in Gamma_k.
[[nodiscard]] inline bool maclaurin_check(const EigenTuple& lam, int k, int l, int r, int s) {
    detail::require_finite(lam);
    const auto n = static_cast<int>(lam.size());
    if (!(n >= k && k > l && l >= 0 && n >= r && r > s && s >= 0 && k >= r && l >= s)) {
        throw ArgumentError("invalid Newton-MacLaurin indices");
    }
    if (!in_gamma(k, lam)) throw ArgumentError("tuple not in Gamma_k");
    const auto t = sigma_table(lam);
    auto normalized = [&](int m) { return t[static_cast<std::size_t>(m)] / binomial(n, m); };
    const double lhs = std::pow(normalized(k) / normalized(l), 1.0 / (k - l));
    const double rhs = std::pow(normalized(r) / normalized(s), 1.0 / (r - s));
    return lhs <= rhs * (1.0 + 1e-12);
}

} // namespace etaq
