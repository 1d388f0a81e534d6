#pragma once

#include "etaq/domain.hpp"
#include "etaq/errors.hpp"
#include "etaq/grid.hpp"
#include "etaq/linear_solve.hpp"
#include "etaq/operator.hpp"
#include "etaq/symfun.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace etaq {

struct ArmijoParams {
    double slope = 1e-4;
    double backtrack = 0.5;
    double min_step = 1.0 / 1048576.0;  // 2^-20
};

struct ContinuationConfig {
    int t_steps_init = 1;
    std::optional<double> newton_tol;  ///< default 1e-9 * max(1, |psi|_inf)
    int max_newton = 30;
    ArmijoParams damping;
    double theta_margin = 0.05;
    double linear_tol = 1e-10;
    int max_halvings = 20;
    unsigned threads = worker_count();

    void validate() const {
        if (t_steps_init < 1 || max_newton < 1 || max_halvings < 0 || !(linear_tol > 0.0) ||
            !(damping.slope > 0.0) || !(damping.backtrack > 0.0 && damping.backtrack < 1.0) ||
            !(damping.min_step > 0.0) || (newton_tol && !(*newton_tol > 0.0))) {
            throw ConfigError("continuation config values must be positive");
        }
        if (!(theta_margin > 0.0 && theta_margin < 1.0)) {
            throw ConfigError("theta_margin must lie in (0, 1)");
        }
    }
};

struct TraceEntry {
    double t = 0.0;
    int newton_iters = 0;
    double final_residual = 0.0;
    bool converged = false;
};

struct SolveReport {
    bool converged = false;
    std::vector<TraceEntry> t_trace;
    double min_spacelike_margin = 0.0;
    double min_ellipticity = 0.0;
    double max_tilde_w = 0.0;
    bool all_admissible = false;
    double final_residual = std::numeric_limits<double>::infinity();
    double newton_tol = 0.0;
    double last_t = 0.0;  ///< last t reached (continuation)
    FieldU field;
    std::string message;
    std::vector<std::string> warnings;
    // Grid fingerprint for comparisons.
    int grid_n = 0;
    double grid_h = 0.0;
    std::size_t grid_unknowns = 0;
};

namespace detail {

inline double sup_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline void finalize_report(SolveReport& rep, const QuotientSpec& spec, const Grid& g,
                            const NodalPsi& psi, const ContinuationConfig& cfg) {
    AssemblyOptions opt;
    opt.with_jacobian = false;
    opt.with_ellipticity = true;
    opt.threads = cfg.threads;
    const DiscreteSystem sys = assemble(spec, g, rep.field, psi, opt);
    rep.final_residual = sup_norm(sys.residual);
    rep.min_spacelike_margin = sys.spacelike_margin_min;
    rep.max_tilde_w = sys.max_tilde_w;
    rep.min_ellipticity = sys.min_ellipticity;
    rep.all_admissible = sys.all_admissible();
    rep.grid_n = g.n;
    rep.grid_h = g.h;
    rep.grid_unknowns = g.unknowns();
}

} // namespace detail

/// Damped Newton for G[u] = psi(x, u) at fixed psi. Steps are accepted only when they
/// give Armijo decrease of ||residual||_2 and keep 1 - |Du| >= theta_margin everywhere.
[[nodiscard]] inline SolveReport newton_solve(const QuotientSpec& spec, const Grid& g, const NodalPsi& psi,
                                              const FieldU& u_init, const ContinuationConfig& cfg,
                                              double t_label = 1.0) {
    spec.validate();
    cfg.validate();
    SolveReport rep;
    rep.field = u_init;
    rep.grid_n = g.n;
    rep.grid_h = g.h;
    rep.grid_unknowns = g.unknowns();

    const double margin0 = min_spacelike_margin(g, u_init);
    if (margin0 < cfg.theta_margin) {
        throw SpacelikeError("initial field violates the spacelike margin (1 - |Du| = " +
                                 std::to_string(margin0) + ")",
                             margin0);
    }
    double psi_sup = 0.0;
    for (std::size_t k = 0; k < g.unknowns(); ++k) {
        const double v = psi(k, g.unknown_position(k), u_init.values[static_cast<Eigen::Index>(k)]).value;
        if (!(v > 0.0)) {
            throw ConeError("psi = " + std::to_string(v) +
                                " <= 0: the quotient is positive on the admissible cone",
                            0, v);
        }
        psi_sup = std::max(psi_sup, v);
    }
    const double tol = cfg.newton_tol.value_or(1e-9 * std::max(1.0, psi_sup));
    rep.newton_tol = tol;

    AssemblyOptions full;
    full.threads = cfg.threads;
    AssemblyOptions residual_only = full;
    residual_only.with_jacobian = false;

    FieldU u = u_init;
    int iters = 0;
    bool converged = false;
    std::string message;
    DiscreteSystem sys = assemble(spec, g, u, psi, full);
    for (;;) {
        const double rinf = detail::sup_norm(sys.residual);
        if (rinf <= tol && sys.all_admissible()) {
            converged = true;
            break;
        }
        if (iters >= cfg.max_newton) {
            message = "Newton iteration limit reached";
            break;
        }
        Vec delta;
        try {
            delta = linear_solve(sys.jacobian, -sys.residual, cfg.linear_tol);
        } catch (const NumericError& e) {
            message = e.what();
            break;
        }
        const double r2 = sys.residual.squaredNorm();
        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= cfg.damping.min_step) {
            FieldU trial{u.values + alpha * delta};
            if (min_spacelike_margin(g, trial) >= cfg.theta_margin) {
                try {
                    const DiscreteSystem ts = assemble(spec, g, trial, psi, residual_only);
                    if (ts.residual.squaredNorm() <= (1.0 - 2.0 * cfg.damping.slope * alpha) * r2) {
                        u = std::move(trial);
                        accepted = true;
                        break;
                    }
                } catch (const SpacelikeError&) {
                }
            }
            alpha *= cfg.damping.backtrack;
        }
        if (!accepted) {
            message = "line search stagnated (step below minimum)";
            break;
        }
        ++iters;
        sys = assemble(spec, g, u, psi, full);
    }

    rep.field = u;
    rep.converged = converged;
    rep.message = converged ? "converged" : message;
    detail::finalize_report(rep, spec, g, psi, cfg);
    rep.converged = converged && rep.final_residual <= tol && rep.all_admissible &&
                    rep.min_spacelike_margin >= cfg.theta_margin;
    rep.t_trace.push_back({t_label, iters, rep.final_residual, rep.converged});
    rep.last_t = rep.converged ? t_label : 0.0;
    return rep;
}

/// Operator values G[u] at every unknown; throws ConeError if some node is inadmissible.
[[nodiscard]] inline Vec operator_field(const QuotientSpec& spec, const Grid& g, const FieldU& u) {
    AssemblyOptions opt;
    opt.with_jacobian = false;
    const DiscreteSystem sys = assemble(spec, g, u, constant_psi(0.0), opt);
    for (std::size_t k = 0; k < g.unknowns(); ++k) {
        if (!sys.admissible_mask[k]) {
            throw ConeError("node " + std::to_string(k) + " of the field is not admissible", 0,
                            sys.operator_value[static_cast<Eigen::Index>(k)]);
        }
    }
    return sys.operator_value;
}

/// Homotopy psi_t = (1 - t) G[u0] + t psi_target from t = 0 (where u0 is exact) to t = 1.
/// A failed Newton solve halves the t-step, up to `max_halvings` times.
[[nodiscard]] inline SolveReport continuation_solve(const QuotientSpec& spec, const Grid& g,
                                                    const NodalPsi& psi_target, const FieldU& u0,
                                                    const ContinuationConfig& cfg) {
    cfg.validate();
    const Vec g0 = operator_field(spec, g, u0);
    auto psi_at = [&](double t) -> NodalPsi {
        return [&g0, &psi_target, t](std::size_t k, const Vec& x, double z) {
            const PsiSample target = psi_target(k, x, z);
            return PsiSample{(1.0 - t) * g0[static_cast<Eigen::Index>(k)] + t * target.value,
                             t * target.dz};
        };
    };

    const double dt_init = 1.0 / cfg.t_steps_init;
    double dt = dt_init;
    double t = 0.0;
    int halvings = 0;
    FieldU u = u0;
    std::vector<TraceEntry> trace;
    SolveReport last;
    bool have_last = false;
    while (t < 1.0) {
        const double t_next = std::min(1.0, t + dt);
        SolveReport step;
        try {
            step = newton_solve(spec, g, psi_at(t_next), u, cfg, t_next);
        } catch (const SpacelikeError& e) {
            step.converged = false;
            step.message = e.what();
            step.t_trace.push_back({t_next, 0, std::numeric_limits<double>::infinity(), false});
        }
        trace.insert(trace.end(), step.t_trace.begin(), step.t_trace.end());
        if (step.converged) {
            u = step.field;
            t = t_next;
            last = std::move(step);
            have_last = true;
            dt = std::min(dt_init, 2.0 * dt);
            halvings = std::max(0, halvings - 1);
        } else {
            if (++halvings > cfg.max_halvings) {
                SolveReport fail;
                fail.field = u;
                fail.converged = false;
                fail.message = "continuation t-step underflow at t = " + std::to_string(t) + ": " +
                               step.message;
                detail::finalize_report(fail, spec, g, psi_at(t), cfg);
                fail.converged = false;
                fail.last_t = t;
                fail.t_trace = std::move(trace);
                fail.newton_tol = step.newton_tol;
                return fail;
            }
            dt *= 0.5;
        }
    }
    if (!have_last) throw NumericError("continuation made no progress");
    last.t_trace = std::move(trace);
    last.last_t = 1.0;
    return last;
}

struct SubsolutionCheck {
    bool ok = false;
    double worst_violation = 0.0;  ///< max(psi - G) over admissible nodes
    bool all_admissible = false;
};

/// G[u_sub] >= psi(x, u_sub) - 1e-9 at every unknown, with admissible jets. Boundary
/// values of a FieldU are identically zero.
[[nodiscard]] inline SubsolutionCheck verify_subsolution(const QuotientSpec& spec, const Grid& g,
                                                         const FieldU& u_sub, const NodalPsi& psi) {
    AssemblyOptions opt;
    opt.with_jacobian = false;
    const DiscreteSystem sys = assemble(spec, g, u_sub, psi, opt);
    SubsolutionCheck out;
    out.all_admissible = sys.all_admissible();
    out.worst_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.unknowns(); ++k) {
        if (!sys.admissible_mask[k]) continue;
        out.worst_violation = std::max(out.worst_violation, -sys.residual[static_cast<Eigen::Index>(k)]);
    }
    out.ok = out.all_admissible && out.worst_violation <= 1e-9;
    return out;
}

struct ComparisonSummary {
    double min_diff = 0.0;  ///< min (u_a - u_b)
    double max_diff = 0.0;  ///< max (u_a - u_b)
    double sup_diff = 0.0;
    double fraction_le = 0.0;  ///< fraction of nodes with u_a <= u_b
};

[[nodiscard]] inline ComparisonSummary comparison_check(const SolveReport& a, const SolveReport& b) {
    if (a.grid_n != b.grid_n || a.grid_h != b.grid_h || a.grid_unknowns != b.grid_unknowns ||
        a.field.values.size() != b.field.values.size()) {
        throw ArgumentError("comparison_check: reports were computed on different grids");
    }
    ComparisonSummary s;
    const Vec d = a.field.values - b.field.values;
    if (d.size() == 0) return s;
    s.min_diff = d.minCoeff();
    s.max_diff = d.maxCoeff();
    s.sup_diff = d.cwiseAbs().maxCoeff();
    s.fraction_le = static_cast<double>((d.array() <= 0.0).count()) / static_cast<double>(d.size());
    return s;
}

/// sqrt(rho^2 + |x|^2) - sqrt(rho^2 + R^2): a cap with kappa = 1/rho vanishing on |x| = R.
[[nodiscard]] inline double hyperboloid_cap(const Vec& x, double rho, double radius) {
    return std::sqrt(rho * rho + x.squaredNorm()) - std::sqrt(rho * rho + radius * radius);
}

struct InitialGuess {
    FieldU field;
    double parameter = 0.0;  ///< rho (ball) or level-set scale c
    bool subsolution = false;
};

/// Default admissible start. Balls: hyperboloid caps, rho in {1/4, ..., 8}; the largest
/// rho that verifies as a subsolution wins, else the smallest admissible rho. Other
/// domains: c (||x/a||_p^2 - 1) with c in {1/16, ..., 8}, chosen the same way.
[[nodiscard]] inline InitialGuess default_initial_field(const QuotientSpec& spec, const Grid& g,
                                                        const DomainSpec& dom, const NodalPsi& psi,
                                                        const ContinuationConfig& cfg) {
    std::vector<double> params;
    std::function<double(const Vec&, double)> shape;
    if (dom.shape == Shape::ball) {
        params = {8.0, 4.0, 2.0, 1.0, 0.5, 0.25};
        const double r = dom.semi_axes[0];
        shape = [r](const Vec& x, double rho) { return hyperboloid_cap(x, rho, r); };
    } else {
        params = {1.0 / 16, 1.0 / 8, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
        const double p = dom.shape == Shape::superellipsoid ? dom.exponent : 2.0;
        const Vec a = dom.semi_axes;
        shape = [a, p](const Vec& x, double c) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i] / a[i]), p);
            return c * (std::pow(s, 2.0 / p) - 1.0);
        };
    }
    std::optional<InitialGuess> fallback;
    for (double param : params) {
        FieldU f = sample_field(g, [&](const Vec& x) { return shape(x, param); });
        if (min_spacelike_margin(g, f) < cfg.theta_margin) continue;
        SubsolutionCheck chk;
        try {
            chk = verify_subsolution(spec, g, f, psi);
        } catch (const SpacelikeError&) {
            continue;
        }
        if (!chk.all_admissible) continue;
        if (chk.ok) return {std::move(f), param, true};
        if (!fallback) fallback = InitialGuess{std::move(f), param, false};
    }
    if (fallback) return *fallback;
    throw ConeError("no admissible spacelike initial cap found for this domain", 0, 0.0);
}

/// Samples psi_z on random (x, z) with x in the domain and |z| <= inradius (a spacelike
/// solution vanishing on the boundary satisfies |u| < dist(x, boundary)).
/// Returns the most negative psi_z seen (>= 0 when the hypothesis holds on the samples).
template <class PointPsi>
[[nodiscard]] double sample_min_psi_z(const DomainSpec& dom, PointPsi&& psi, int samples = 10000,
                                      unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    const double r_in = dom.inradius();
    double worst = std::numeric_limits<double>::infinity();
    int taken = 0;
    for (int attempt = 0; taken < samples && attempt < 50 * samples; ++attempt) {
        Vec x(dom.dim());
        for (int i = 0; i < dom.dim(); ++i) {
            std::uniform_real_distribution<double> ux(-dom.semi_axes[i], dom.semi_axes[i]);
            x[i] = ux(rng);
        }
        if (signed_distance(dom, x) <= 0.0) continue;
        std::uniform_real_distribution<double> uz(-r_in, r_in);
        worst = std::min(worst, psi(x, uz(rng)).dz);
        ++taken;
    }
    return worst;
}

} // namespace etaq
