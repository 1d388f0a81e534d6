// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any criterion fails.
#include "etaq/expr.hpp"
#include "etaq/props.hpp"
#include "etaq/solver.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace etaq;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < limit_s;
    if (!in_time) o.detail += "; over time limit " + std::to_string(limit_s) + " s";
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %2d %s: %s [%.2f s]\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Outcome from_suite(const SuiteResult& r) {
    std::string d = std::to_string(r.samples) + " samples, " + std::to_string(r.failures) + " failures, " + r.metric +
                    " = " + fmt("%.3e", r.worst);
    if (!r.failing_sample.empty()) d += ", first failure " + r.failing_sample;
    return {r.ok(), d};
}

PropsOptions options(int samples) {
    PropsOptions o;
    o.samples = samples;
    return o;
}

FieldU sampled(const Grid& g, const std::function<double(const Vec&)>& fn) { return sample_field(g, fn); }

// Nodes whose whole stencil consists of unknowns.
std::vector<std::size_t> full_stencil_nodes(const Grid& g) {
    std::vector<std::size_t> out;
    for (std::size_t u = 0; u < g.unknowns(); ++u) {
        const Eigen::VectorXi idx = g.lattice_index(g.node_of_unknown[u]);
        bool ok = true;
        for (const Eigen::VectorXi& d : g.directions) {
            const std::size_t nb = g.node_at(idx + d);
            ok = ok && nb != Grid::none && g.unknown_of_node[nb] != Grid::none;
        }
        if (ok) out.push_back(u);
    }
    return out;
}

double grid_jet_error(double rho, double h) {
    const Grid g = build_grid(DomainSpec::ball(3, 1.0), h);
    const FieldU f = sampled(g, [&](const Vec& x) { return std::sqrt(rho * rho + x.squaredNorm()); });
    double worst = 0.0;
    for (std::size_t u : full_stencil_nodes(g)) {
        const GraphJet d = extract_jet(g, f, u);
        const GraphJet e = hyperboloid_jet(g.unknown_position(u), rho);
        worst = std::max({worst, (d.du - e.du).cwiseAbs().maxCoeff(), (d.d2u - e.d2u).cwiseAbs().maxCoeff()});
    }
    return worst;
}

struct RegimeRun {
    Grid grid;
    SolveReport report;
    double error = 0.0;
};

RegimeRun solve_ball(const QuotientSpec& spec, double h, const NodalPsi& psi, const FieldU* start = nullptr) {
    const double radius = 0.5;
    const DomainSpec dom = DomainSpec::ball(spec.n, radius);
    RegimeRun r{build_grid(dom, h), {}, 0.0};
    ContinuationConfig cfg;
    const FieldU u0 = start ? *start : default_initial_field(spec, r.grid, dom, psi, cfg).field;
    r.report = continuation_solve(spec, r.grid, psi, u0, cfg);
    const FieldU exact = sampled(r.grid, [&](const Vec& x) { return hyperboloid_cap(x, 1.0, radius); });
    r.error = (r.report.field.values - exact.values).cwiseAbs().maxCoeff();
    return r;
}

std::string regime_text(const RegimeRun& r) {
    return "converged=" + std::string(r.report.converged ? "yes" : "no") +
           " admissible=" + (r.report.all_admissible ? "yes" : "no") +
           fmt(" margin=%.3f", r.report.min_spacelike_margin) + fmt(" sup-error=%.3e", r.error);
}

bool regime_ok(const RegimeRun& r) {
    return r.report.converged && r.report.all_admissible && r.report.min_spacelike_margin >= 0.05 && r.error <= 1e-2;
}

// Parser cases: source, expected value at x = (0.3, -0.7), z = 0.4, or error position.
struct ParserCase {
    const char* src;
    bool valid;
    double value;
    std::size_t position;
};

Outcome parser_suite() {
    const std::vector<ParserCase> cases{
        {"1 + 2 * 3", true, 7.0, 0},
        {"(1 + 2) * 3", true, 9.0, 0},
        {"2 ^ 3 ^ 2", true, 512.0, 0},
        {"-2 ^ 2", true, -4.0, 0},
        {"2 ^ -1", true, 0.5, 0},
        {"8 / 4 / 2", true, 1.0, 0},
        {"8 - 4 - 2", true, 2.0, 0},
        {"--3", true, 3.0, 0},
        {".5 + 3.", true, 3.5, 0},
        {"1e2 * 2.5E-1", true, 25.0, 0},
        {"x1 * x2", true, -0.21, 0},
        {"z ^ 2 - x1", true, 0.16 - 0.3, 0},
        {"exp(0) + log(1)", true, 1.0, 0},
        {"sqrt(16) - sin(0) * cos(0)", true, 4.0, 0},
        {"12 + 0 * z", true, 12.0, 0},
        {"exp(-z) * (1 + x1 ^ 2)", true, std::exp(-0.4) * 1.09, 0},
        {"((z))", true, 0.4, 0},
        {"2 * -x2", true, 1.4, 0},
        {"3..5", false, 0, 2},
        {"1 + $", false, 0, 4},
        {"2e", false, 0, 2},
        {"", false, 0, 0},
        {"1 +", false, 0, 3},
        {"(1 + 2", false, 0, 6},
        {"1 2", false, 0, 2},
        {")", false, 0, 0},
        {"x3", false, 0, 0},
        {"1 + x0", false, 0, 4},
        {"foo(1)", false, 0, 0},
        {"exp 1", false, 0, 4},
        {"2 ^ x1", false, 0, 4},
        {"z ^ (z + 1)", false, 0, 4},
        {"x1 ^", false, 0, 4},
        {"y", false, 0, 0},
    };
    int bad = 0;
    std::string first;
    const std::vector<double> x{0.3, -0.7};
    for (const ParserCase& c : cases) {
        bool ok = false;
        try {
            const double v = parse(c.src, 2).eval(x, 0.4);
            ok = c.valid && std::abs(v - c.value) <= 1e-14 * std::max(1.0, std::abs(c.value));
        } catch (const ExprError& e) {
            ok = !c.valid && e.position() == c.position;
        }
        if (!ok) {
            ++bad;
            if (first.empty()) first = std::string(" first failing case '") + c.src + "'";
        }
    }
    const char* diff_cases[] = {"z ^ 3", "exp(2 * z) * x1", "log(1 + z ^ 2)", "sqrt(2 + z)", "sin(z) * cos(x2 * z)",
                                "1 / (1 + z)", "(1 + z) ^ -1.5", "exp(-z) * (1 + x1 ^ 2)"};
    double worst = 0.0;
    for (const char* src : diff_cases) {
        const Expr f = parse(src, 2), df = diff_z(f);
        for (double z : {-0.5, -0.1, 0.2, 0.7}) {
            const double h = 1e-5;
            const double fd = (f.eval(x, z + h) - f.eval(x, z - h)) / (2 * h);
            worst = std::max(worst, std::abs(df.eval(x, z) - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    return {bad == 0 && worst <= 1e-7 && cases.size() >= 30,
            std::to_string(cases.size()) + " grammar cases, " + std::to_string(bad) + " wrong" + first +
                fmt("; diff_z vs FD max rel %.2e", worst)};
}

} // namespace

int main() {
    criterion(1, "sigma identities", 5.0, [] { return from_suite(suite_sigma_identities(options(10000))); });
    criterion(2, "Newton-MacLaurin", 30.0, [] { return from_suite(suite_maclaurin(options(10000))); });
    criterion(3, "cone chain", 5.0, [] { return from_suite(suite_cone_chain(options(1000))); });
    criterion(4, "concavity", 30.0, [] { return from_suite(suite_concavity(options(10000))); });
    criterion(5, "linearization", 30.0, [] {
        return from_suite(suite_linearization(options(100), {{2, 1, 0}, {3, 2, 0}, {3, 2, 1}}, 100));
    });

    criterion(6, "hyperboloid geometry", 60.0, [] {
        const SuiteResult analytic = suite_hyperboloid(options(1000));
        bool ok = analytic.ok();
        std::string d = "analytic max |kappa - 1/rho| = " + fmt("%.2e", analytic.worst) + "; grid ratios";
        for (double rho : {0.5, 1.0, 2.0}) {
            const double ratio = grid_jet_error(rho, 1.0 / 8) / grid_jet_error(rho, 1.0 / 16);
            ok = ok && ratio >= 3.2 && ratio <= 4.8;
            d += fmt(" %.3f", ratio);
        }
        return Outcome{ok, d};
    });

    criterion(7, "eigenvalue splitting", 5.0, [] {
        const double un = 0.6, w = std::sqrt(1.0 - un * un);
        std::vector<double> gap_n, gap_t;
        for (double unn : {1e2, 1e3, 1e4}) {
            GraphJet j;
            j.x = Vec::Zero(3);
            j.du = (Vec(3) << 0.0, 0.0, un).finished();
            j.d2u = (Mat(3, 3) << 1.5, 0.0, 0.4, 0.0, -0.7, 0.3, 0.4, 0.3, unn).finished();
            const CurvatureData cd = curvature_data(j);
            const EigenTuple k = cd.kappa;  // ascending: tangential pair, then the large one
            gap_n.push_back(std::abs(k[2] - unn / (w * w * w)));
            gap_t.push_back(std::max(std::abs(k[0] + 0.7 / w), std::abs(k[1] - 1.5 / w)));
        }
        const bool bounded = *std::max_element(gap_n.begin(), gap_n.end()) < 10.0;
        const bool trend = gap_t[0] > gap_t[1] && gap_t[1] > gap_t[2];
        return Outcome{bounded && trend, fmt("|kappa_n - u_nn/w^3| <= %.3e", *std::max_element(gap_n.begin(), gap_n.end())) +
                                             fmt("; tangential gaps %.3e", gap_t[0]) + fmt(" %.3e", gap_t[1]) +
                                             fmt(" %.3e", gap_t[2])};
    });

    criterion(8, "manufactured solve n=2", 30.0, [] {
        const QuotientSpec spec{2, 1, 0};
        // psi is the operator applied to the exact hyperboloid (rho = 1).
        const NodalPsi psi = [spec](std::size_t, const Vec& x, double) {
            return PsiSample{evaluate(spec, hyperboloid_jet(x, 1.0)), 0.0};
        };
        std::vector<double> errs;
        bool ok = true;
        for (double h : {1.0 / 16, 1.0 / 32}) {
            const Grid g = build_grid(DomainSpec::ball(2, 0.5), h);
            const FieldU start = sampled(g, [](const Vec& x) { return hyperboloid_cap(x, 1.0, 0.5) + 0.05 * (x.squaredNorm() - 0.25); });
            const RegimeRun r = solve_ball(spec, h, psi, &start);
            ok = ok && r.report.converged;
            errs.push_back(r.error);
        }
        const double ratio = errs[0] / errs[1];
        ok = ok && ratio >= 3.2 && ratio <= 4.8;
        return Outcome{ok, fmt("errors %.3e", errs[0]) + fmt(" %.3e", errs[1]) + fmt(", ratio %.3f", ratio)};
    });

    // Criteria 9-11 share the n = 3 runs.
    const QuotientSpec spec0{3, 2, 0}, spec1{3, 2, 1};
    RegimeRun run0, run1;
    criterion(9, "manufactured solve n=3", 600.0, [&] {
        run0 = solve_ball(spec0, 1.0 / 16, constant_psi(12.0));
        run1 = solve_ball(spec1, 1.0 / 16, constant_psi(2.0));
        return Outcome{regime_ok(run0) && regime_ok(run1), "l=0: " + regime_text(run0) + "; l=1: " + regime_text(run1)};
    });

    criterion(10, "uniqueness echo", 600.0, [&] {
        bool ok = true;
        std::string d;
        for (auto* run : {&run0, &run1}) {
            const QuotientSpec& spec = run == &run0 ? spec0 : spec1;
            const double psi = run == &run0 ? 12.0 : 2.0;
            // A second admissible start: the flatter cap rho = 2.
            const FieldU alt = sampled(run->grid, [](const Vec& x) { return hyperboloid_cap(x, 2.0, 0.5); });
            const RegimeRun other = solve_ball(spec, 1.0 / 16, constant_psi(psi), &alt);
            const double diff = other.report.converged && run->report.converged
                                    ? comparison_check(run->report, other.report).sup_diff
                                    : std::numeric_limits<double>::infinity();
            const double bound = 10.0 * run->report.newton_tol;
            ok = ok && diff <= bound;
            d += fmt("l=%g: ", spec.l) + fmt("sup-diff %.3e", diff) + fmt(" <= %.3e; ", bound);
        }
        return Outcome{ok, d};
    });

    criterion(11, "subsolution comparison", 60.0, [&] {
        bool ok = true;
        std::string d;
        for (auto* run : {&run0, &run1}) {
            const QuotientSpec& spec = run == &run0 ? spec0 : spec1;
            const double psi = run == &run0 ? 12.0 : 2.0;
            const FieldU sub = sampled(run->grid, [](const Vec& x) { return hyperboloid_cap(x, 0.5, 0.5); });
            const SubsolutionCheck chk = verify_subsolution(spec, run->grid, sub, constant_psi(psi));
            const double excess = (sub.values - run->report.field.values).maxCoeff();
            const bool here = chk.ok && chk.worst_violation < 0.0 && run->report.converged &&
                              excess <= 10.0 * run->report.newton_tol;
            ok = ok && here;
            d += fmt("l=%g: ", spec.l) + (chk.ok ? "strict subsolution" : "not a subsolution") +
                 fmt(", max(u_sub - u) = %.3e; ", excess);
        }
        return Outcome{ok, d};
    });

    criterion(12, "domain certificate", 10.0, [] {
        const ConvexityCertificate ball = eta_k_convexity(DomainSpec::ball(3, 1.0), 2, 1024.0);
        const ConvexityCertificate needle =
            eta_k_convexity(DomainSpec::ellipsoid((Vec(3) << 4.0, 0.25, 0.25).finished()), 2, 1024.0);
        const bool a = ball.certified && ball.K_found <= 1.0;
        const bool b = needle.certified && needle.K_found > ball.K_found;
        return Outcome{a && b, std::string("(a) ball ") + (a ? "ok" : "failed") + fmt(" K_found=%g", ball.K_found) +
                                   "; (b) needle " + (needle.certified ? "certified" : "not certified") +
                                   fmt(" K_found=%g", needle.K_found) + (b ? " > ball" : ", not above the ball's")};
    });

    criterion(13, "parser", 1.0, parser_suite);

    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
