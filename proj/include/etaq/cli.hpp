#pragma once

// Command-line front end. tools/etaq.cpp only forwards to etaq::cli::run.

#include "etaq/domain.hpp"
#include "etaq/errors.hpp"
#include "etaq/expr.hpp"
#include "etaq/geometry.hpp"
#include "etaq/grid.hpp"
#include "etaq/operator.hpp"
#include "etaq/props.hpp"
#include "etaq/solver.hpp"
#include "etaq/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace etaq::cli {

using json = nlohmann::ordered_json;

enum Exit : int { success = 0, failure = 1, usage = 2 };

class UsageError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct RunConfig {
    std::string command;
    std::optional<int> n, k;
    int l = 0;
    std::string domain;
    std::optional<double> h;
    std::string psi;
    std::string u;
    std::string out = ".";
    unsigned seed = 20240501u;
    std::optional<double> tol;
    double theta_margin = 0.05;
    int t_steps = 1;
    int max_newton = 30;
    int max_halvings = 20;
    double linear_tol = 1e-10;
    double k_max = 1024.0;
    int samples = 0;
    std::string mutate;

    [[nodiscard]] json echo() const {
        json j;
        j["command"] = command;
        j["n"] = n ? json(*n) : json(nullptr);
        j["k"] = k ? json(*k) : json(nullptr);
        j["l"] = l;
        j["domain"] = domain;
        j["h"] = h ? json(*h) : json(nullptr);
        j["psi"] = psi;
        j["u"] = u;
        j["out"] = out;
        j["seed"] = seed;
        j["tol"] = tol ? json(*tol) : json(nullptr);
        j["theta_margin"] = theta_margin;
        j["t_steps"] = t_steps;
        j["max_newton"] = max_newton;
        j["max_halvings"] = max_halvings;
        j["linear_tol"] = linear_tol;
        j["k_max"] = k_max;
        j["samples"] = samples;
        if (!mutate.empty()) j["mutate"] = mutate;
        return j;
    }
};

/// "ball:R=0.5", "box:a=1,b=0.5", "ellipsoid:a=2,b=1,c=1", "superellipsoid:a=1,b=1,p=4".
/// Axis keys are a, b, c, ... in coordinate order; a single axis key is repeated.
[[nodiscard]] inline DomainSpec parse_domain(const std::string& text, int n) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw UsageError("domain '" + text + "' needs the form shape:key=value,...");
    const std::string shape = text.substr(0, colon);
    std::map<std::string, double> kv;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("domain parameter '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        double v = 0.0;
        std::size_t used = 0;
        try {
            v = std::stod(val, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != val.size()) throw UsageError("domain parameter '" + item + "' has no numeric value");
        if (!kv.emplace(key, v).second) throw UsageError("domain parameter '" + key + "' given twice");
    }
    auto axes = [&]() {
        Vec a(n);
        std::vector<std::string> found;
        for (int i = 0; i < n; ++i) {
            const std::string key(1, static_cast<char>('a' + i));
            if (kv.count(key)) found.push_back(key);
        }
        if (found.size() == 1 && found[0] == "a") {
            a.setConstant(kv.at("a"));
        } else {
            for (int i = 0; i < n; ++i) {
                const std::string key(1, static_cast<char>('a' + i));
                if (!kv.count(key)) throw UsageError("domain '" + shape + "' needs axis '" + key + "' for n = " + std::to_string(n));
                a[i] = kv.at(key);
            }
        }
        return a;
    };
    auto reject_unknown = [&](std::vector<std::string> allowed) {
        for (const auto& [key, v] : kv) {
            (void)v;
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw UsageError("domain '" + shape + "' does not take parameter '" + key + "'");
            }
        }
    };
    std::vector<std::string> axis_keys;
    for (int i = 0; i < n; ++i) axis_keys.emplace_back(1, static_cast<char>('a' + i));
    DomainSpec d;
    if (shape == "ball") {
        reject_unknown({"R"});
        if (!kv.count("R")) throw UsageError("ball needs R=<radius>");
        d = DomainSpec::ball(n, kv.at("R"));
    } else if (shape == "box") {
        reject_unknown(axis_keys);
        d = DomainSpec::box(axes());
    } else if (shape == "ellipsoid") {
        reject_unknown(axis_keys);
        d = DomainSpec::ellipsoid(axes());
    } else if (shape == "superellipsoid") {
        axis_keys.emplace_back("p");
        reject_unknown(axis_keys);
        if (!kv.count("p")) throw UsageError("superellipsoid needs p=<exponent>");
        d = DomainSpec::superellipsoid(axes(), kv.at("p"));
    } else {
        throw UsageError("unknown domain shape '" + shape + "'");
    }
    try {
        d.validate();
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
    return d;
}

[[nodiscard]] inline std::string number17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct PgmScale {
    double min = 0.0;
    double max = 0.0;
};

/// Binary 16-bit PGM (P5, maxval 65535, big-endian), linear min-max scaling.
/// `values` is row-major with row 0 at the top.
inline PgmScale write_pgm(const std::filesystem::path& path, int width, int height,
                          const std::vector<double>& values) {
    PgmScale sc;
    if (!values.empty()) {
        sc.min = *std::min_element(values.begin(), values.end());
        sc.max = *std::max_element(values.begin(), values.end());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << "P5\n" << width << ' ' << height << "\n65535\n";
    const double span = sc.max - sc.min;
    for (double v : values) {
        const double t = span > 0.0 ? (v - sc.min) / span : 0.0;
        const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
        const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
        f.write(bytes, 2);
    }
    return sc;
}

namespace detail {

inline void ensure_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw UsageError("cannot create output directory '" + out + "': " + ec.message());
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

inline json error_json(const std::exception& e) {
    json j;
    std::string type = "error";
    if (dynamic_cast<const ConeError*>(&e)) type = "cone_error";
    else if (dynamic_cast<const SpacelikeError*>(&e)) type = "spacelike_error";
    else if (dynamic_cast<const NumericError*>(&e)) type = "numeric_error";
    else if (dynamic_cast<const ExprError*>(&e)) type = "expression_error";
    else if (dynamic_cast<const ConfigError*>(&e)) type = "config_error";
    else if (dynamic_cast<const ArgumentError*>(&e)) type = "argument_error";
    j["type"] = type;
    j["message"] = e.what();
    if (const auto* c = dynamic_cast<const ConeError*>(&e)) {
        j["failing_sigma"] = c->failing_index();
        j["failing_value"] = c->failing_value();
    }
    if (const auto* s = dynamic_cast<const SpacelikeError*>(&e)) {
        j["margin"] = s->margin();
        if (s->node()) j["node"] = *s->node();
    }
    if (const auto* x = dynamic_cast<const ExprError*>(&e)) j["position"] = x->position();
    return j;
}

inline json report_header(const RunConfig& cfg) {
    json j;
    j["schema_version"] = report_schema_version;
    j["tool"] = "etaq";
    j["version"] = version;
    j["seed"] = cfg.seed;
    j["threads"] = worker_count();
    j["config"] = cfg.echo();
    return j;
}

inline int require_int(const std::optional<int>& v, const char* name) {
    if (!v) throw UsageError(std::string("missing required field '") + name + "'");
    return *v;
}

inline QuotientSpec make_spec(const RunConfig& cfg) {
    QuotientSpec spec{require_int(cfg.n, "n"), require_int(cfg.k, "k"), cfg.l};
    try {
        spec.validate();
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
    return spec;
}

inline DomainSpec make_domain(const RunConfig& cfg, int n) {
    if (cfg.domain.empty()) throw UsageError("missing required field 'domain'");
    return parse_domain(cfg.domain, n);
}

inline double require_h(const RunConfig& cfg) {
    if (!cfg.h) throw UsageError("missing required field 'h'");
    if (!(*cfg.h > 0.0)) throw UsageError("h must be positive");
    return *cfg.h;
}

/// Lexicographic order of lattice index = order of node ids (last axis fastest).
inline std::vector<std::size_t> unknowns_in_node_order(const Grid& g) {
    std::vector<std::size_t> order(g.unknowns());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return g.node_of_unknown[a] < g.node_of_unknown[b]; });
    return order;
}

/// Image of a per-unknown quantity on the plane through the origin spanned by axes
/// (col_axis, row_axis); nodes that are not unknowns get 0 (the boundary value).
inline PgmScale write_plane(const std::filesystem::path& path, const Grid& g, const Vec& per_unknown,
                            int col_axis, int row_axis) {
    const int nc = g.half_extent[static_cast<std::size_t>(col_axis)];
    const int nr = g.half_extent[static_cast<std::size_t>(row_axis)];
    const int width = 2 * nc + 1, height = 2 * nr + 1;
    std::vector<double> px(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            Eigen::VectorXi idx = Eigen::VectorXi::Zero(g.n);
            idx[col_axis] = c - nc;
            idx[row_axis] = nr - r;
            const std::size_t node = g.node_at(idx);
            if (node == Grid::none) continue;
            const std::size_t u = g.unknown_of_node[node];
            if (u != Grid::none) px[static_cast<std::size_t>(r) * width + c] = per_unknown[static_cast<Eigen::Index>(u)];
        }
    }
    return write_pgm(path, width, height, px);
}

inline json scale_json(const std::string& file, const PgmScale& s) {
    return json{{"file", file}, {"min", s.min}, {"max", s.max}};
}

} // namespace detail

/// psi(x, z) from text, with its symbolic z-derivative.
struct PsiFunction {
    Expr value;
    Expr dz;

    [[nodiscard]] PsiSample operator()(const Vec& x, double z) const { return {value.eval(x, z), dz.eval(x, z)}; }
    [[nodiscard]] NodalPsi nodal() const {
        return [self = *this](std::size_t, const Vec& x, double z) { return self(x, z); };
    }
};

[[nodiscard]] inline PsiFunction make_psi_function(const std::string& text, int n) {
    Expr e = parse(text, n);
    return {e, diff_z(e)};
}

inline int run_solve(const RunConfig& cfg) {
    detail::ensure_dir(cfg.out);
    const std::filesystem::path out(cfg.out);
    json report = detail::report_header(cfg);
    report["command"] = "solve";
    std::vector<std::string> warnings;
    auto fail = [&](const std::exception& e, int code) {
        report["converged"] = false;
        report["error"] = detail::error_json(e);
        report["warnings"] = warnings;
        detail::write_json(out / "report.json", report);
        std::cerr << "etaq: " << e.what() << '\n';
        return code;
    };
    QuotientSpec spec;
    DomainSpec dom;
    Grid grid;
    PsiFunction psi;
    try {
        spec = detail::make_spec(cfg);
        dom = detail::make_domain(cfg, spec.n);
        const double h = detail::require_h(cfg);
        if (cfg.psi.empty()) throw UsageError("missing required field 'psi'");
        psi = make_psi_function(cfg.psi, spec.n);
        grid = build_grid(dom, h);
    } catch (const UsageError& e) {
        return fail(e, Exit::usage);
    } catch (const ExprError& e) {
        return fail(e, Exit::usage);
    } catch (const ConfigError& e) {
        return fail(e, Exit::usage);
    } catch (const Error& e) {
        return fail(e, Exit::failure);
    }

    try {
        if (spec.k == spec.n) warnings.push_back("k = n lies outside the k < n regime of the existence theorem");
        long faults = 0;
        const double min_dz = sample_min_psi_z(dom, [&](const Vec& x, double z) {
            try {
                return psi(x, z);
            } catch (const EvalError&) {
                ++faults;
                return PsiSample{0.0, 0.0};
            }
        }, 10000, cfg.seed);
        report["psi_z_sampled_min"] = min_dz;
        if (min_dz < 0.0) warnings.push_back("psi_z < 0 on sampled points (min " + number17(min_dz) + "): uniqueness not guaranteed");
        if (faults > 0) warnings.push_back("psi evaluation faulted at " + std::to_string(faults) + " sampled points");

        ContinuationConfig cc;
        cc.t_steps_init = cfg.t_steps;
        cc.newton_tol = cfg.tol;
        cc.max_newton = cfg.max_newton;
        cc.max_halvings = cfg.max_halvings;
        cc.theta_margin = cfg.theta_margin;
        cc.linear_tol = cfg.linear_tol;
        try {
            cc.validate();
        } catch (const ConfigError& e) {
            return fail(e, Exit::usage);
        }

        const NodalPsi nodal = psi.nodal();
        const InitialGuess init = default_initial_field(spec, grid, dom, nodal, cc);
        report["initial_guess"] = {{"kind", dom.shape == Shape::ball ? "hyperboloid_cap" : "level_set_cap"},
                                   {"parameter", init.parameter},
                                   {"subsolution", init.subsolution}};
        const SolveReport rep = continuation_solve(spec, grid, nodal, init.field, cc);
        warnings.insert(warnings.end(), rep.warnings.begin(), rep.warnings.end());

        // Per-node residual of the returned field.
        AssemblyOptions ao;
        ao.with_jacobian = false;
        const DiscreteSystem sys = assemble(spec, grid, rep.field, nodal, ao);

        std::ofstream csv(out / "solution.csv");
        for (int i = 0; i < spec.n; ++i) csv << 'x' << i + 1 << ',';
        csv << "u\n";
        for (std::size_t u : detail::unknowns_in_node_order(grid)) {
            const Vec x = grid.unknown_position(u);
            for (int i = 0; i < spec.n; ++i) csv << number17(x[i]) << ',';
            csv << number17(rep.field.values[static_cast<Eigen::Index>(u)]) << '\n';
        }
        csv.close();

        json images = json::array();
        const Vec abs_res = sys.residual.cwiseAbs();
        if (spec.n == 2) {
            images.push_back(detail::scale_json("u.pgm", detail::write_plane(out / "u.pgm", grid, rep.field.values, 0, 1)));
            images.push_back(detail::scale_json("residual.pgm", detail::write_plane(out / "residual.pgm", grid, abs_res, 0, 1)));
        } else {
            for (int fixed = 0; fixed < spec.n; ++fixed) {
                int a = -1, b = -1;
                for (int d = 0; d < spec.n; ++d) {
                    if (d == fixed) continue;
                    if (a < 0) a = d;
                    else if (b < 0) b = d;
                }
                const std::string tag = "x" + std::to_string(fixed + 1);
                images.push_back(detail::scale_json("u_slice_" + tag + ".pgm",
                                                    detail::write_plane(out / ("u_slice_" + tag + ".pgm"), grid, rep.field.values, a, b)));
                images.push_back(detail::scale_json("residual_slice_" + tag + ".pgm",
                                                    detail::write_plane(out / ("residual_slice_" + tag + ".pgm"), grid, abs_res, a, b)));
            }
        }

        json trace = json::array();
        for (const auto& t : rep.t_trace) {
            trace.push_back({{"t", t.t}, {"newton_iters", t.newton_iters}, {"final_residual", t.final_residual}, {"converged", t.converged}});
        }
        report["converged"] = rep.converged;
        report["message"] = rep.message;
        report["grid"] = {{"n", grid.n},
                          {"h", grid.h},
                          {"unknowns", grid.unknowns()},
                          {"interior", grid.count(NodeClass::interior)},
                          {"near_boundary", grid.count(NodeClass::near_boundary)}};
        report["newton_tol"] = rep.newton_tol;
        report["final_residual"] = rep.final_residual;
        report["all_admissible"] = rep.all_admissible;
        report["min_spacelike_margin"] = rep.min_spacelike_margin;
        report["min_ellipticity"] = rep.min_ellipticity;
        report["max_tilde_w"] = rep.max_tilde_w;
        report["last_t"] = rep.last_t;
        report["t_trace"] = trace;
        report["images"] = images;
        report["warnings"] = warnings;
        detail::write_json(out / "report.json", report);
        return rep.converged ? Exit::success : Exit::failure;
    } catch (const Error& e) {
        return fail(e, Exit::failure);
    }
}

inline int run_curvature(const RunConfig& cfg) {
    const QuotientSpec spec = detail::make_spec(cfg);
    const DomainSpec dom = detail::make_domain(cfg, spec.n);
    const Grid grid = build_grid(dom, detail::require_h(cfg));
    if (cfg.u.empty()) throw UsageError("missing required field 'u'");
    const Expr u = parse(cfg.u, spec.n);
    if (u.depends_on_z()) throw UsageError("u may not depend on z");
    detail::ensure_dir(cfg.out);
    const std::filesystem::path out(cfg.out);

    const double step = 1e-4 * std::max(1.0, dom.outradius());
    auto fn = [&](const Vec& x) { return u.eval(x, 0.0); };
    std::vector<GraphJet> jets(grid.unknowns());
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_node = 0;
    for (std::size_t k = 0; k < grid.unknowns(); ++k) {
        jets[k] = jet_from_function(fn, grid.unknown_position(k), step);
        const double m = spacelike_margin(jets[k]);
        if (m < worst) {
            worst = m;
            worst_node = k;
        }
    }
    if (!(worst > 0.0)) {
        const Vec x = grid.unknown_position(worst_node);
        std::string where;
        for (int i = 0; i < spec.n; ++i) where += (i ? ", " : "") + number17(x[i]);
        throw SpacelikeError("u is not spacelike: worst node " + std::to_string(worst_node) + " at (" + where +
                                 "), 1 - |Du| = " + number17(worst),
                             worst, worst_node);
    }

    std::ofstream csv(out / "curvature.csv");
    const int n = spec.n;
    for (int i = 0; i < n; ++i) csv << 'x' << i + 1 << ',';
    csv << 'u';
    for (int i = 0; i < n; ++i) csv << ",kappa" << i + 1;
    for (int i = 0; i < n; ++i) csv << ",lambda" << i + 1;
    csv << ",H,f,admissible\n";
    std::size_t flagged = 0;
    for (std::size_t k : detail::unknowns_in_node_order(grid)) {
        const GraphJet& j = jets[k];
        const CurvatureData cd = curvature_data(j);
        for (int i = 0; i < n; ++i) csv << number17(j.x[i]) << ',';
        csv << number17(j.u);
        for (int i = 0; i < n; ++i) csv << ',' << number17(cd.kappa[i]);
        for (int i = 0; i < n; ++i) csv << ',' << number17(cd.lambda_eta[i]);
        csv << ',' << number17(cd.mean_curvature) << ',';
        const bool adm = in_gamma(spec.k, cd.lambda_eta);
        if (adm) csv << number17(quotient_value(spec, cd.lambda_eta));
        csv << ',' << (adm ? 1 : 0) << '\n';
        if (!adm) ++flagged;
    }
    std::cout << "curvature: " << grid.unknowns() << " nodes, " << flagged << " inadmissible\n";
    return Exit::success;
}

inline int run_certify(const RunConfig& cfg) {
    const int n = detail::require_int(cfg.n, "n");
    const int k = detail::require_int(cfg.k, "k");
    const DomainSpec dom = detail::make_domain(cfg, n);
    if (k < 1 || k >= n) throw UsageError("certify-domain needs 1 <= k < n");
    detail::ensure_dir(cfg.out);
    const ConvexityCertificate cert = eta_k_convexity(dom, k, cfg.k_max, cfg.samples);
    json j = detail::report_header(cfg);
    j["command"] = "certify-domain";
    j["shape"] = to_string(dom.shape);
    j["k"] = k;
    j["K_max"] = cfg.k_max;
    j["certified"] = cert.certified;
    j["K_found"] = cert.certified ? json(cert.K_found) : json(nullptr);
    j["non_smooth"] = cert.non_smooth;
    j["boundary_samples"] = cert.samples;
    j["note"] = cert.non_smooth ? "non-smooth boundary" : "certificate holds up to boundary sampling resolution";
    detail::write_json(std::filesystem::path(cfg.out) / "certificate.json", j);
    std::cout << "certified=" << (cert.certified ? "true" : "false");
    if (cert.certified) std::cout << " K_found=" << cert.K_found;
    std::cout << '\n';
    return Exit::success;
}

inline int run_verify_props(const RunConfig& cfg) {
    PropsOptions opt;
    opt.seed = cfg.seed;
    if (cfg.samples > 0) opt.samples = cfg.samples;
    if (cfg.mutate == "sigma-skip-last") opt.sigma = mutant_sigma_skip_last();
    else if (!cfg.mutate.empty()) throw UsageError("unknown mutation '" + cfg.mutate + "'");
    detail::ensure_dir(cfg.out);
    const std::vector<SuiteResult> results = run_all_props(opt);
    json j = detail::report_header(cfg);
    j["command"] = "verify-props";
    json suites = json::array();
    bool all = true;
    for (const auto& r : results) {
        json s{{"name", r.name},
               {"samples", r.samples},
               {"passed", r.samples - r.failures},
               {"failed", r.failures},
               {"ok", r.ok()},
               {"metric", r.metric},
               {"worst", std::isfinite(r.worst) ? json(r.worst) : json(nullptr)}};
        if (!r.failing_sample.empty()) s["failing_sample"] = r.failing_sample;
        for (const auto& [key, v] : r.observed) s["observed"][key] = v;
        suites.push_back(s);
        all = all && r.ok();
        std::cout << (r.ok() ? "PASS " : "FAIL ") << r.name << ' ' << (r.samples - r.failures) << '/' << r.samples << '\n';
    }
    j["suites"] = suites;
    j["all_passed"] = all;
    detail::write_json(std::filesystem::path(cfg.out) / "props.json", j);
    return all ? Exit::success : Exit::failure;
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"etaq: Hessian-quotient curvature equations for spacelike graphs"};
    RunConfig cfg;
    int n = 0, k = 0;
    double h = 0.0, tol = 0.0;
    app.set_help_flag("--help", "print this help");  // frees -h for the grid spacing
    app.set_config("--config", "", "key=value configuration file; flags override it");
    app.add_option("--cmd", cfg.command, "solve | curvature | certify-domain | verify-props")
        ->check(CLI::IsMember({"solve", "curvature", "certify-domain", "verify-props"}));
    auto* on = app.add_option("--n", n, "dimension");
    auto* ok = app.add_option("--k", k, "upper index");
    app.add_option("--l", cfg.l, "lower index");
    app.add_option("--domain", cfg.domain, "ball:R=.. | box:a=..,b=.. | ellipsoid:a=..,b=.. | superellipsoid:a=..,p=..");
    auto* oh = app.add_option("--h", h, "grid spacing");
    app.add_option("--psi", cfg.psi, "right-hand side psi(x1..xn, z)");
    app.add_option("--u", cfg.u, "graph function u(x1..xn) for --cmd curvature");
    app.add_option("--out", cfg.out, "output directory");
    app.add_option("--seed", cfg.seed, "seed for randomized suites and sampling");
    auto* otol = app.add_option("--tol", tol, "Newton sup-norm tolerance");
    app.add_option("--theta-margin", cfg.theta_margin, "required spacelike margin 1 - |Du|");
    app.add_option("--t-steps", cfg.t_steps, "initial number of continuation steps");
    app.add_option("--max-newton", cfg.max_newton, "Newton iterations per continuation step");
    app.add_option("--max-halvings", cfg.max_halvings, "continuation step halvings before giving up");
    app.add_option("--linear-tol", cfg.linear_tol, "relative residual of the linear solves");
    app.add_option("--k-max", cfg.k_max, "largest K tried by certify-domain");
    app.add_option("--samples", cfg.samples, "boundary samples (certify-domain) or samples per suite (verify-props)");
    app.add_option("--mutate", cfg.mutate, "")->group("");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Exit::usage;
    }
    if (on->count()) cfg.n = n;
    if (ok->count()) cfg.k = k;
    if (oh->count()) cfg.h = h;
    if (otol->count()) cfg.tol = tol;

    try {
        if (cfg.command.empty()) throw UsageError("missing required field 'cmd'");
        if (cfg.command == "solve") return run_solve(cfg);
        if (cfg.command == "curvature") return run_curvature(cfg);
        if (cfg.command == "certify-domain") return run_certify(cfg);
        return run_verify_props(cfg);
    } catch (const UsageError& e) {
        std::cerr << "etaq: usage: " << e.what() << '\n';
        return Exit::usage;
    } catch (const ExprError& e) {
        std::cerr << "etaq: " << e.what() << '\n';
        return Exit::usage;
    } catch (const ConfigError& e) {
        std::cerr << "etaq: " << e.what() << '\n';
        return Exit::usage;
    } catch (const Error& e) {
        std::cerr << "etaq: " << e.what() << '\n';
        return Exit::failure;
    }
}

} // namespace etaq::cli
