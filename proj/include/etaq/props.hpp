#pragma once

// Randomized property suites. The symmetric-function suites take the sigma_m
// implementation as a parameter so a deliberately broken one can be plugged in.

#include "etaq/geometry.hpp"
#include "etaq/jacobi.hpp"
#include "etaq/operator.hpp"
#include "etaq/symfun.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace etaq {

using SigmaFn = std::function<double(int, const EigenTuple&)>;

[[nodiscard]] inline SigmaFn reference_sigma() {
    return [](int m, const EigenTuple& lam) { return elementary_sigma(m, lam); };
}

/// Mutant for harness sanity checks: the DP loop forgets the last variable once m >= 2.
[[nodiscard]] inline SigmaFn mutant_sigma_skip_last() {
    return [](int m, const EigenTuple& lam) {
        if (m < 2) return elementary_sigma(m, lam);
        if (m > lam.size() - 1) return 0.0;
        return elementary_sigma(m, EigenTuple(lam.head(lam.size() - 1)));
    };
}

struct SuiteResult {
    std::string name;
    long samples = 0;
    long failures = 0;
    double worst = 0.0;  ///< worst observed statistic (suite specific, see `metric`)
    std::string metric;
    std::string failing_sample;  ///< first failing input, empty when none
    std::vector<std::pair<std::string, double>> observed;  ///< recorded constants

    [[nodiscard]] bool ok() const { return samples > 0 && failures == 0; }
};

struct PropsOptions {
    unsigned seed = 20240501u;
    int samples = 10000;
    SigmaFn sigma = reference_sigma();
};

namespace props_detail {

inline std::string tuple_text(const EigenTuple& v) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ')';
    return os.str();
}

inline std::string matrix_text(const Mat& m) {
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << (i ? "; " : "");
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
    }
    os << ']';
    return os.str();
}

inline void record_failure(SuiteResult& r, const std::string& sample) {
    if (r.failures++ == 0) r.failing_sample = sample;
}

inline bool in_gamma_with(const SigmaFn& s, int k, const EigenTuple& lam) {
    for (int m = 1; m <= k; ++m)
        if (!(s(m, lam) > 0.0)) return false;
    return true;
}

inline double deleted_with(const SigmaFn& s, int m, const EigenTuple& lam, Eigen::Index i) {
    if (m < 0) return 0.0;
    EigenTuple z = lam;
    z[i] = 0.0;
    return s(m, z);
}

inline EigenTuple normal_tuple(std::mt19937_64& rng, int n, double shift) {
    std::normal_distribution<double> nd(0.0, 1.0);
    EigenTuple v(n);
    for (int i = 0; i < n; ++i) v[i] = nd(rng) + shift;
    return v;
}

/// Rejection sample from Gamma_k (under the given sigma): shifted normals. Empty when
/// 1000 draws all miss, which only happens for a broken sigma.
inline std::optional<EigenTuple> sample_gamma(std::mt19937_64& rng, const SigmaFn& s, int n, int k) {
    std::uniform_real_distribution<double> shift(0.0, 1.5);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        EigenTuple v = normal_tuple(rng, n, shift(rng));
        if (in_gamma_with(s, k, v)) return v;
    }
    return std::nullopt;
}

/// Rejection sample of kappa with lambda(kappa) in Gamma_k.
inline EigenTuple sample_tilde_gamma(std::mt19937_64& rng, int n, int k) {
    std::uniform_real_distribution<double> shift(-0.3, 1.5);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        EigenTuple v = normal_tuple(rng, n, shift(rng));
        if (in_tilde_gamma(k, v)) return v;
    }
    return EigenTuple::Ones(n);
}

inline Mat random_orthogonal(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = nd(rng);
    Eigen::HouseholderQR<Mat> qr(m);
    return qr.householderQ();
}

/// Random spacelike jet with |Du| <= max_slope.
inline GraphJet random_jet(std::mt19937_64& rng, int n, double max_slope = 0.8) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    GraphJet j;
    j.x = Vec(n);
    for (int i = 0; i < n; ++i) j.x[i] = nd(rng);
    j.u = nd(rng);
    Vec dir(n);
    for (int i = 0; i < n; ++i) dir[i] = nd(rng);
    j.du = dir.normalized() * (max_slope * ur(rng));
    Mat b(n, n);
    for (int i = 0; i < n; ++i)
        for (int q = 0; q < n; ++q) b(i, q) = nd(rng);
    j.d2u = 0.5 * (b + b.transpose());
    return j;
}

/// Random jet whose curvature lies in tilde-Gamma_k: D^2u = w gamma_down K gamma_down for
/// a sampled admissible curvature matrix K (inverts a = (1/w) gamma D^2u gamma).
inline GraphJet random_admissible_jet(std::mt19937_64& rng, int n, int k, double max_slope = 0.7) {
    GraphJet j = random_jet(rng, n, max_slope);
    const MetricPack m = metric_pack(j);
    const EigenTuple kappa = sample_tilde_gamma(rng, n, k);
    const Mat q = random_orthogonal(rng, n);
    const Mat a = q * kappa.asDiagonal() * q.transpose();
    j.d2u = m.w * m.gamma_down * a * m.gamma_down;
    j.d2u = 0.5 * (j.d2u + j.d2u.transpose());
    return j;
}

inline double rel_gap(double a, double b, double scale) {
    return std::abs(a - b) / std::max(scale, std::numeric_limits<double>::min());
}

} // namespace props_detail

/// sum_i sigma_{k-1;i} = (n-k+1) sigma_{k-1} and sum_i sigma_{k-1;i} kappa_i = k sigma_k.
/// The error is relative to the same sums taken over |kappa|, which bound the rounding.
[[nodiscard]] inline SuiteResult suite_sigma_identities(const PropsOptions& opt, int n_min = 2, int n_max = 6) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "sigma_identities";
    r.metric = "relative error";
    std::mt19937_64 rng(opt.seed);
    for (int n = n_min; n <= n_max; ++n) {
        for (int s = 0; s < opt.samples; ++s) {
            const EigenTuple kap = normal_tuple(rng, n, 0.0) * 2.0;
            const EigenTuple abs_kap = kap.cwiseAbs();
            for (int k = 1; k <= n; ++k) {
                double sum1 = 0.0, sum2 = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double d = deleted_with(opt.sigma, k - 1, kap, i);
                    sum1 += d;
                    sum2 += d * kap[i];
                }
                const double rhs1 = (n - k + 1) * opt.sigma(k - 1, kap);
                const double rhs2 = k * opt.sigma(k, kap);
                const double e1 = rel_gap(sum1, rhs1, (n - k + 1) * elementary_sigma(k - 1, abs_kap));
                const double e2 = rel_gap(sum2, rhs2, k * elementary_sigma(k, abs_kap));
                const double e = std::max(e1, e2);
                r.worst = std::max(r.worst, e);
                ++r.samples;
                if (!(e <= 1e-12)) {
                    record_failure(r, "n=" + std::to_string(n) + " k=" + std::to_string(k) + " kappa=" + tuple_text(kap));
                }
            }
        }
    }
    return r;
}

/// Generalized Newton-MacLaurin inequality for every valid (k, l, r, s).
[[nodiscard]] inline SuiteResult suite_maclaurin(const PropsOptions& opt, int n_min = 2, int n_max = 6) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "newton_maclaurin";
    r.metric = "max (lhs - rhs) / rhs";
    r.worst = -std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(opt.seed + 1);
    std::uniform_int_distribution<int> pick_n(n_min, n_max);
    for (int s = 0; s < opt.samples; ++s) {
        const int n = pick_n(rng);
        std::uniform_int_distribution<int> pick_k(1, n);
        const int k = pick_k(rng);
        const auto drawn = sample_gamma(rng, opt.sigma, n, k);
        ++r.samples;
        if (!drawn) {
            record_failure(r, "no Gamma_" + std::to_string(k) + " sample found for n=" + std::to_string(n));
            continue;
        }
        const EigenTuple& lam = *drawn;
        bool ok = true;
        std::string where;
        auto normalized = [&](int m) { return opt.sigma(m, lam) / binomial(n, m); };
        for (int l = 0; l < k; ++l) {
            const double lhs = std::pow(normalized(k) / normalized(l), 1.0 / (k - l));
            for (int rr = 1; rr <= k; ++rr) {
                for (int ss = 0; ss < rr && ss <= l; ++ss) {
                    const double rhs = std::pow(normalized(rr) / normalized(ss), 1.0 / (rr - ss));
                    const double gap = (lhs - rhs) / std::abs(rhs);
                    if (std::isfinite(gap)) r.worst = std::max(r.worst, gap);
                    if (!(lhs <= rhs * (1.0 + 1e-12)) && ok) {
                        ok = false;
                        where = " (k,l,r,s)=(" + std::to_string(k) + "," + std::to_string(l) + "," +
                                std::to_string(rr) + "," + std::to_string(ss) + ")";
                    }
                }
            }
        }
        if (!ok) record_failure(r, "lambda=" + tuple_text(lam) + where);
    }
    return r;
}

/// Gamma_2 subset of tilde-Gamma_m for all m, and tilde-Gamma_m subset of Gamma_1.
[[nodiscard]] inline SuiteResult suite_cone_chain(const PropsOptions& opt, std::vector<int> dims = {3, 4, 5}) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "cone_chain";
    r.metric = "violations";
    std::mt19937_64 rng(opt.seed + 2);
    for (int n : dims) {
        for (int s = 0; s < opt.samples; ++s) {
            const auto drawn = sample_gamma(rng, opt.sigma, n, 2);
            if (!drawn) {
                ++r.samples;
                record_failure(r, "no Gamma_2 sample found for n=" + std::to_string(n));
                continue;
            }
            const EigenTuple& kap = *drawn;
            bool ok = true;
            for (int m = 1; m <= n; ++m) {
                const EigenTuple lam = kappa_to_lambda(kap);
                if (!in_gamma_with(opt.sigma, m, lam)) ok = false;
            }
            // Reverse inclusion on an unrestricted draw.
            const EigenTuple other = normal_tuple(rng, n, 0.5);
            for (int m = 1; m <= n; ++m) {
                if (in_gamma_with(opt.sigma, m, kappa_to_lambda(other)) && !in_gamma_with(opt.sigma, 1, other)) ok = false;
            }
            ++r.samples;
            if (!ok) {
                r.worst += 1.0;
                record_failure(r, "kappa=" + tuple_text(kap) + " other=" + tuple_text(other));
            }
        }
    }
    return r;
}

/// Midpoint concavity of g(kappa) = f(lambda(kappa))^{1/(k-l)} on tilde-Gamma_k.
[[nodiscard]] inline SuiteResult suite_concavity(const PropsOptions& opt,
                                                std::vector<QuotientSpec> specs = {{3, 2, 0}, {3, 2, 1}, {4, 3, 1}}) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "concavity";
    r.metric = "max (g(a)+g(b))/2 - g(mid)";
    r.worst = -std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(opt.seed + 3);
    for (const auto& spec : specs) {
        auto g = [&](const EigenTuple& kap) {
            const EigenTuple lam = kappa_to_lambda(kap);
            return std::pow(opt.sigma(spec.k, lam) / opt.sigma(spec.l, lam), 1.0 / (spec.k - spec.l));
        };
        for (int s = 0; s < opt.samples; ++s) {
            EigenTuple a, b, mid;
            int tries = 0;
            do {
                a = sample_tilde_gamma(rng, spec.n, spec.k);
                b = sample_tilde_gamma(rng, spec.n, spec.k);
                mid = 0.5 * (a + b);
            } while (++tries < 1000 && (!in_gamma_with(opt.sigma, spec.k, kappa_to_lambda(a)) ||
                     !in_gamma_with(opt.sigma, spec.k, kappa_to_lambda(b)) ||
                     !in_gamma_with(opt.sigma, spec.k, kappa_to_lambda(mid))));
            const double gap = 0.5 * (g(a) + g(b)) - g(mid);
            r.worst = std::max(r.worst, gap);
            ++r.samples;
            if (!(gap <= 1e-10)) record_failure(r, "a=" + tuple_text(a) + " b=" + tuple_text(b));
        }
    }
    return r;
}

/// f_i > 0 on tilde-Gamma_k and the observed c(n,k,l) = min_i f_i / sum_j f_j.
[[nodiscard]] inline SuiteResult suite_gradient_positivity(
    const PropsOptions& opt, std::vector<QuotientSpec> specs = {{3, 1, 0}, {3, 2, 0}, {3, 2, 1}, {4, 2, 0}, {4, 3, 1}}) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "gradient_positivity";
    r.metric = "min f_i";
    r.worst = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(opt.seed + 4);
    for (const auto& spec : specs) {
        double c_obs = std::numeric_limits<double>::infinity();
        for (int s = 0; s < opt.samples; ++s) {
            const EigenTuple kap = sample_tilde_gamma(rng, spec.n, spec.k);
            const EigenTuple lam = kappa_to_lambda(kap);
            // Gradient in lambda from the injected sigma, then the kappa chain rule.
            const double sl = opt.sigma(spec.l, lam), sk = opt.sigma(spec.k, lam);
            EigenTuple q(spec.n);
            for (Eigen::Index i = 0; i < spec.n; ++i) {
                q[i] = (deleted_with(opt.sigma, spec.k - 1, lam, i) * sl - sk * deleted_with(opt.sigma, spec.l - 1, lam, i)) /
                       (sl * sl);
            }
            const EigenTuple fk = detail::chain_to_kappa(q);
            r.worst = std::min(r.worst, fk.minCoeff());
            c_obs = std::min(c_obs, fk.minCoeff() / fk.sum());
            ++r.samples;
            if (!(fk.minCoeff() > 0.0) || !(q.minCoeff() > 0.0)) record_failure(r, "kappa=" + tuple_text(kap));
        }
        r.observed.emplace_back("c(" + std::to_string(spec.n) + "," + std::to_string(spec.k) + "," +
                                    std::to_string(spec.l) + ")",
                                c_obs);
    }
    return r;
}

/// Pointwise geometry: <nu,nu> = -1, nu orthogonal to tangents, gamma_down^2 = g,
/// H = tr(g^{-1} h), kappa invariant under rotations of x.
[[nodiscard]] inline SuiteResult suite_geometry(const PropsOptions& opt, int n_min = 2, int n_max = 4) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "geometry_invariants";
    r.metric = "max residual / tolerance";
    std::mt19937_64 rng(opt.seed + 5);
    std::uniform_int_distribution<int> pick_n(n_min, n_max);
    for (int s = 0; s < opt.samples; ++s) {
        const int n = pick_n(rng);
        const GraphJet j = random_jet(rng, n);
        const CurvatureData cd = curvature_data(j);
        const MetricPack& m = cd.metric;
        // Identities held to 1e-10 absolute.
        double tight = std::abs(minkowski_dot(m.nu, m.nu) + 1.0);
        for (int i = 0; i < n; ++i) {
            Vec t = Vec::Zero(n + 1);
            t[i] = 1.0;
            t[n] = j.du[i];
            tight = std::max(tight, std::abs(minkowski_dot(m.nu, t)));
        }
        tight = std::max(tight, (m.gamma_down * m.gamma_down - m.g).cwiseAbs().maxCoeff());
        tight = std::max(tight, (m.g * m.g_inv - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
        tight = std::max(tight, (m.gamma_down * m.gamma_up - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
        // Curvature comparisons held to 1e-9 relative to max |kappa|.
        const double scale = std::max(1.0, cd.kappa.cwiseAbs().maxCoeff());
        const double trace = (m.g_inv * (j.d2u / m.w)).trace();
        double loose = std::abs(trace - cd.kappa.sum()) / scale;
        const Mat q = random_orthogonal(rng, n);
        GraphJet rot = j;
        rot.x = q * j.x;
        rot.du = q * j.du;
        rot.d2u = q * j.d2u * q.transpose();
        rot.d2u = 0.5 * (rot.d2u + rot.d2u.transpose());
        loose = std::max(loose, (principal_curvatures(rot) - cd.kappa).cwiseAbs().maxCoeff() / scale);
        const double e = std::max(tight / 1e-10, loose / 1e-9);
        r.worst = std::max(r.worst, e);
        ++r.samples;
        if (!(e <= 1.0)) record_failure(r, "du=" + tuple_text(j.du) + " d2u=" + matrix_text(j.d2u));
    }
    return r;
}

struct LinearizationErrors {
    double gij = 0.0;
    double gs = 0.0;
};

/// Central differences of `evaluate` in the entries of D^2u and Du, relative to the
/// largest coefficient of the exact linearization.
[[nodiscard]] inline LinearizationErrors linearization_fd_error(const QuotientSpec& spec, const GraphJet& jet,
                                                                double step = 1e-6) {
    const LinearizationData lin = linearize(spec, jet);
    const int n = spec.n;
    const double scale = std::max(lin.Gij.cwiseAbs().maxCoeff(), lin.Gs.cwiseAbs().maxCoeff());
    LinearizationErrors out;
    for (int i = 0; i < n; ++i) {
        for (int q = i; q < n; ++q) {
            GraphJet p = jet, m = jet;
            const double hh = step * std::max(1.0, std::abs(jet.d2u(i, q)));
            p.d2u(i, q) += hh;
            m.d2u(i, q) -= hh;
            if (i != q) {
                p.d2u(q, i) += hh;
                m.d2u(q, i) -= hh;
            }
            const double fd = (evaluate(spec, p) - evaluate(spec, m)) / (2.0 * hh);
            const double exact = i == q ? lin.Gij(i, i) : 2.0 * lin.Gij(i, q);
            out.gij = std::max(out.gij, std::abs(fd - exact) / scale);
        }
        GraphJet p = jet, m = jet;
        p.du[i] += step;
        m.du[i] -= step;
        const double fd = (evaluate(spec, p) - evaluate(spec, m)) / (2.0 * step);
        out.gs = std::max(out.gs, std::abs(fd - lin.Gs[i]) / scale);
    }
    return out;
}

[[nodiscard]] inline SuiteResult suite_linearization(const PropsOptions& opt,
                                                    std::vector<QuotientSpec> specs = {{2, 1, 0}, {3, 2, 0}, {3, 2, 1}},
                                                    int jets_per_spec = 100) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "linearization_fd";
    r.metric = "max relative error of G^ij, G^s";
    std::mt19937_64 rng(opt.seed + 6);
    for (const auto& spec : specs) {
        for (int s = 0; s < jets_per_spec; ++s) {
            const GraphJet j = random_admissible_jet(rng, spec.n, spec.k);
            const LinearizationErrors e = linearization_fd_error(spec, j);
            const double worst = std::max(e.gij, e.gs);
            r.worst = std::max(r.worst, worst);
            ++r.samples;
            if (!(worst < 1e-5)) record_failure(r, "du=" + tuple_text(j.du) + " d2u=" + matrix_text(j.d2u));
            // Ellipticity on the same jet.
            if (!(ellipticity_margin(linearize(spec, j)) > 0.0)) {
                record_failure(r, "non-elliptic du=" + tuple_text(j.du));
            }
        }
    }
    return r;
}

/// f(c kappa) = c^{k-l} f(kappa).
[[nodiscard]] inline SuiteResult suite_homogeneity(const PropsOptions& opt,
                                                  std::vector<QuotientSpec> specs = {{3, 2, 0}, {3, 2, 1}, {4, 3, 1}}) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "homogeneity";
    r.metric = "relative error";
    std::mt19937_64 rng(opt.seed + 7);
    std::uniform_real_distribution<double> uc(0.1, 10.0);
    for (const auto& spec : specs) {
        for (int s = 0; s < opt.samples; ++s) {
            const EigenTuple kap = sample_tilde_gamma(rng, spec.n, spec.k);
            const double c = uc(rng);
            auto f = [&](const EigenTuple& kk) {
                const EigenTuple lam = kappa_to_lambda(kk);
                return opt.sigma(spec.k, lam) / opt.sigma(spec.l, lam);
            };
            const double lhs = f(EigenTuple(c * kap));
            const double rhs = std::pow(c, spec.k - spec.l) * f(kap);
            // Rounding scale: the same quotient over |lambda|.
            const EigenTuple al = kappa_to_lambda(kap).cwiseAbs();
            const double sc = std::pow(c, spec.k - spec.l) * elementary_sigma(spec.k, al) / std::abs(opt.sigma(spec.l, kappa_to_lambda(kap)));
            const double e = rel_gap(lhs, rhs, std::max(std::abs(rhs), sc));
            r.worst = std::max(r.worst, e);
            ++r.samples;
            if (!(e <= 1e-10)) record_failure(r, "kappa=" + tuple_text(kap) + " c=" + std::to_string(c));
        }
    }
    return r;
}

/// Analytic hyperboloid jets u = sqrt(rho^2 + |x|^2): kappa_i = 1/rho.
[[nodiscard]] inline GraphJet hyperboloid_jet(const Vec& x, double rho) {
    const int n = static_cast<int>(x.size());
    const double s = std::sqrt(rho * rho + x.squaredNorm());
    GraphJet j;
    j.x = x;
    j.u = s;
    j.du = x / s;
    j.d2u = (Mat::Identity(n, n) - x * x.transpose() / (s * s)) / s;
    return j;
}

[[nodiscard]] inline SuiteResult suite_hyperboloid(const PropsOptions& opt, std::vector<double> rhos = {0.5, 1.0, 2.0}) {
    using namespace props_detail;
    SuiteResult r;
    r.name = "hyperboloid_curvature";
    r.metric = "max |kappa_i - 1/rho|";
    std::mt19937_64 rng(opt.seed + 8);
    std::uniform_int_distribution<int> pick_n(2, 4);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (double rho : rhos) {
        for (int s = 0; s < opt.samples; ++s) {
            const int n = pick_n(rng);
            Vec x(n);
            for (int i = 0; i < n; ++i) x[i] = nd(rng);
            const EigenTuple kap = principal_curvatures(hyperboloid_jet(x, rho));
            const double e = (kap.array() - 1.0 / rho).abs().maxCoeff();
            r.worst = std::max(r.worst, e);
            ++r.samples;
            if (!(e <= 1e-10)) record_failure(r, "rho=" + std::to_string(rho) + " x=" + tuple_text(x));
        }
    }
    return r;
}

/// All suites at the default sizes.
[[nodiscard]] inline std::vector<SuiteResult> run_all_props(const PropsOptions& opt) {
    std::vector<SuiteResult> out;
    out.push_back(suite_sigma_identities(opt));
    out.push_back(suite_maclaurin(opt));
    out.push_back(suite_cone_chain(opt));
    out.push_back(suite_concavity(opt));
    out.push_back(suite_gradient_positivity(opt));
    out.push_back(suite_homogeneity(opt));
    out.push_back(suite_geometry(opt));
    out.push_back(suite_hyperboloid(opt));
    out.push_back(suite_linearization(opt));
    return out;
}

} // namespace etaq
