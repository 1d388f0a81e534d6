#pragma once

#include "etaq/domain.hpp"
#include "etaq/errors.hpp"
#include "etaq/geometry.hpp"
#include "etaq/operator.hpp"
#include "etaq/parallel.hpp"
#include "etaq/symfun.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace etaq {

enum class NodeClass : std::uint8_t { exterior, interior, near_boundary };

/// Linear map from the unknowns around one node to its first and second differences.
/// Rows: du_0..du_{n-1}, then d2u(i,j) for i <= j in row-major packed order.
struct JetStencil {
    std::vector<std::size_t> cols;  ///< unknown indices, self first
    Mat weights;                    ///< components x cols
};

/// Cartesian lattice x = h * (i_1, ..., i_n) masked to the domain. Unknowns are the
/// nodes strictly inside; boundary and exterior nodes carry the Dirichlet value 0.
struct Grid {
    int n = 0;
    double h = 0.0;
    std::vector<int> half_extent;       ///< lattice index i_d ranges over [-N_d, N_d]
    std::vector<std::size_t> strides;   ///< last axis fastest (lexicographic order)
    std::vector<NodeClass> node_class;  ///< per lattice node
    std::vector<std::size_t> unknown_of_node;
    std::vector<std::size_t> node_of_unknown;
    std::vector<Eigen::VectorXi> directions;  ///< +-e_i, then +-e_i +- e_j
    std::vector<double> theta;                ///< unknowns x directions, in (0, 1]
    std::vector<JetStencil> stencils;         ///< per unknown

    static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

    [[nodiscard]] std::size_t unknowns() const noexcept { return node_of_unknown.size(); }
    [[nodiscard]] std::size_t lattice_size() const noexcept { return node_class.size(); }
    [[nodiscard]] std::size_t directions_count() const noexcept { return directions.size(); }
    [[nodiscard]] int components() const noexcept { return n + n * (n + 1) / 2; }

    [[nodiscard]] Eigen::VectorXi lattice_index(std::size_t node) const {
        Eigen::VectorXi idx(n);
        for (int d = 0; d < n; ++d) {
            idx[d] = static_cast<int>(node / strides[static_cast<std::size_t>(d)] %
                                      static_cast<std::size_t>(2 * half_extent[static_cast<std::size_t>(d)] + 1)) -
                     half_extent[static_cast<std::size_t>(d)];
        }
        return idx;
    }

    /// Lattice node of an index, or `none` when outside the lattice box.
    [[nodiscard]] std::size_t node_at(const Eigen::VectorXi& idx) const {
        std::size_t node = 0;
        for (int d = 0; d < n; ++d) {
            const int e = half_extent[static_cast<std::size_t>(d)];
            if (idx[d] < -e || idx[d] > e) return none;
            node += static_cast<std::size_t>(idx[d] + e) * strides[static_cast<std::size_t>(d)];
        }
        return node;
    }

    [[nodiscard]] Vec position(std::size_t node) const { return h * lattice_index(node).cast<double>(); }
    [[nodiscard]] Vec unknown_position(std::size_t u) const { return position(node_of_unknown[u]); }

    [[nodiscard]] double theta_at(std::size_t unknown, std::size_t dir) const {
        return theta[unknown * directions.size() + dir];
    }

    [[nodiscard]] std::size_t count(NodeClass c) const {
        return static_cast<std::size_t>(std::count(node_class.begin(), node_class.end(), c));
    }

    /// Index of d2u(i, j) (any order) among the stencil components.
    [[nodiscard]] int hessian_component(int i, int j) const {
        if (i > j) std::swap(i, j);
        return n + i * n - i * (i - 1) / 2 + (j - i);
    }
};

/// Discrete field: one value per unknown node; boundary values are identically 0.
struct FieldU {
    Vec values;
};

namespace detail {

/// Root of a sign-changing function on [0, 1] (Illinois regula falsi), |bracket| <= tol.
template <class Fn>
double bracketed_root(Fn&& f, double tol = 1e-12) {
    double a = 0.0, b = 1.0;
    double fa = f(a), fb = f(b);
    int side = 0;
    for (int it = 0; it < 200 && b - a > tol; ++it) {
        double c = (a * fb - b * fa) / (fb - fa);
        if (!(c > a && c < b)) c = 0.5 * (a + b);
        const double fc = f(c);
        if (fc == 0.0) return c;
        if ((fc > 0.0) == (fa > 0.0)) {
            a = c;
            fa = fc;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = c;
            fb = fc;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
        // Guarantee bracket shrinkage when regula falsi stalls on one side.
        if (it % 8 == 7) {
            const double m = 0.5 * (a + b);
            const double fm = f(m);
            if ((fm > 0.0) == (fa > 0.0)) { a = m; fa = fm; }
            else { b = m; fb = fm; }
        }
    }
    return 0.5 * (a + b);
}

/// Weights of the unequal-arm second difference along one line:
/// u'' ~ 2/h^2 [u+/(tp(tp+tm)) + u-/(tm(tp+tm)) - u0/(tp tm)].
struct LineWeights {
    double self, plus, minus;
};

inline LineWeights second_difference(double tp, double tm, double h) {
    const double s = 2.0 / (h * h);
    return {-s / (tp * tm), s / (tp * (tp + tm)), s / (tm * (tp + tm))};
}

/// Second-order first difference with unequal arms.
inline LineWeights first_difference(double tp, double tm, double h) {
    const double den = h * tp * tm * (tp + tm);
    return {(tp * tp - tm * tm) / den, tm * tm / den, -tp * tp / den};
}

} // namespace detail

/// Builds the lattice, classifies nodes, and precomputes Shortley-Weller stencils.
[[nodiscard]] inline Grid build_grid(const DomainSpec& dom, double h) {
    dom.validate();
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid spacing must be positive");
    if (2.0 * dom.inradius() / h < 4.0) {
        throw ConfigError("grid too coarse: need at least 4 cells across the smallest width");
    }
    Grid g;
    g.n = dom.dim();
    g.h = h;
    const int n = g.n;
    g.half_extent.resize(static_cast<std::size_t>(n));
    g.strides.assign(static_cast<std::size_t>(n), 1);
    std::size_t total = 1;
    for (int d = 0; d < n; ++d) {
        g.half_extent[static_cast<std::size_t>(d)] =
            static_cast<int>(std::ceil(dom.semi_axes[d] / h)) + 1;
    }
    for (int d = n - 1; d >= 0; --d) {
        g.strides[static_cast<std::size_t>(d)] = total;
        total *= static_cast<std::size_t>(2 * g.half_extent[static_cast<std::size_t>(d)] + 1);
    }

    for (int i = 0; i < n; ++i) {
        for (int s : {1, -1}) {
            Eigen::VectorXi d = Eigen::VectorXi::Zero(n);
            d[i] = s;
            g.directions.push_back(d);
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            for (int sj : {1, -1}) {
                for (int s : {1, -1}) {
                    Eigen::VectorXi d = Eigen::VectorXi::Zero(n);
                    d[i] = s;
                    d[j] = s * sj;
                    g.directions.push_back(d);
                }
            }
        }
    }

    // Snap tolerance against rounding of lattice points that sit on the boundary.
    const double snap = 1e-6 * h;
    std::vector<double> dist(total);
    g.node_class.assign(total, NodeClass::exterior);
    g.unknown_of_node.assign(total, Grid::none);
    for (std::size_t node = 0; node < total; ++node) {
        dist[node] = signed_distance(dom, g.position(node));
        if (dist[node] > snap) {
            g.unknown_of_node[node] = g.node_of_unknown.size();
            g.node_of_unknown.push_back(node);
            g.node_class[node] = NodeClass::interior;
        }
    }

    const std::size_t nd = g.directions.size();
    g.theta.assign(g.unknowns() * nd, 1.0);
    for (std::size_t u = 0; u < g.unknowns(); ++u) {
        const std::size_t node = g.node_of_unknown[u];
        const Eigen::VectorXi idx = g.lattice_index(node);
        const Vec x = g.position(node);
        bool full = true;
        for (std::size_t dir = 0; dir < nd; ++dir) {
            const std::size_t nb = g.node_at(idx + g.directions[dir]);
            if (nb != Grid::none && g.unknown_of_node[nb] != Grid::none) continue;
            if (nb != Grid::none && dist[nb] >= 0.0) continue;  // neighbour on the boundary
            const Vec step = h * g.directions[dir].cast<double>();
            const double t = detail::bracketed_root(
                [&](double s) { return signed_distance(dom, Vec(x + s * step)); });
            g.theta[u * nd + dir] = std::clamp(t, 1e-12, 1.0);
            full = false;
        }
        if (!full) g.node_class[node] = NodeClass::near_boundary;
    }

    const int nc = g.components();
    g.stencils.resize(g.unknowns());
    for (std::size_t u = 0; u < g.unknowns(); ++u) {
        const Eigen::VectorXi idx = g.lattice_index(g.node_of_unknown[u]);
        JetStencil& st = g.stencils[u];
        st.cols.push_back(u);
        std::vector<std::size_t> local(nd, Grid::none);  // column of each direction's neighbour
        for (std::size_t dir = 0; dir < nd; ++dir) {
            const std::size_t nb = g.node_at(idx + g.directions[dir]);
            if (nb != Grid::none && g.unknown_of_node[nb] != Grid::none && g.theta_at(u, dir) == 1.0) {
                local[dir] = st.cols.size();
                st.cols.push_back(g.unknown_of_node[nb]);
            }
        }
        st.weights = Mat::Zero(nc, static_cast<Eigen::Index>(st.cols.size()));
        auto add = [&](int comp, std::size_t dir, double w) {
            if (local[dir] != Grid::none) st.weights(comp, static_cast<Eigen::Index>(local[dir])) += w;
        };
        auto line = [&](std::size_t plus_dir, std::size_t minus_dir, int comp, double scale,
                        bool second) {
            const double tp = g.theta_at(u, plus_dir);
            const double tm = g.theta_at(u, minus_dir);
            const auto w = second ? detail::second_difference(tp, tm, h)
                                  : detail::first_difference(tp, tm, h);
            st.weights(comp, 0) += scale * w.self;
            add(comp, plus_dir, scale * w.plus);
            add(comp, minus_dir, scale * w.minus);
        };
        for (int i = 0; i < n; ++i) {
            const auto plus = static_cast<std::size_t>(2 * i);
            line(plus, plus + 1, i, 1.0, false);
            line(plus, plus + 1, g.hessian_component(i, i), 1.0, true);
        }
        // Mixed derivatives: u_ij = (D_{e_i+e_j} - D_{e_i-e_j}) / 4 with directional
        // second differences along the two lattice diagonals.
        std::size_t dir = static_cast<std::size_t>(2 * n);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const int comp = g.hessian_component(i, j);
                line(dir, dir + 1, comp, 0.25, true);
                line(dir + 2, dir + 3, comp, -0.25, true);
                dir += 4;
            }
        }
    }
    return g;
}

/// Samples fn at the unknown nodes.
template <class Fn>
[[nodiscard]] FieldU sample_field(const Grid& g, Fn&& fn) {
    FieldU f;
    f.values.resize(static_cast<Eigen::Index>(g.unknowns()));
    for (std::size_t u = 0; u < g.unknowns(); ++u) f.values[static_cast<Eigen::Index>(u)] = fn(g.unknown_position(u));
    return f;
}

/// Discrete jet at an unknown node.
[[nodiscard]] inline GraphJet extract_jet(const Grid& g, const FieldU& u, std::size_t unknown) {
    const JetStencil& st = g.stencils[unknown];
    Vec local(static_cast<Eigen::Index>(st.cols.size()));
    for (std::size_t c = 0; c < st.cols.size(); ++c) local[static_cast<Eigen::Index>(c)] = u.values[static_cast<Eigen::Index>(st.cols[c])];
    const Vec comps = st.weights * local;
    GraphJet jet;
    jet.x = g.unknown_position(unknown);
    jet.u = u.values[static_cast<Eigen::Index>(unknown)];
    jet.du = comps.head(g.n);
    jet.d2u.resize(g.n, g.n);
    for (int i = 0; i < g.n; ++i)
        for (int j = i; j < g.n; ++j) jet.d2u(i, j) = jet.d2u(j, i) = comps[g.hessian_component(i, j)];
    return jet;
}

/// Smallest 1 - |Du| over all unknown nodes.
[[nodiscard]] inline double min_spacelike_margin(const Grid& g, const FieldU& u) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.unknowns(); ++k) {
        const JetStencil& st = g.stencils[k];
        Vec grad = Vec::Zero(g.n);
        for (std::size_t c = 0; c < st.cols.size(); ++c)
            grad += st.weights.col(static_cast<Eigen::Index>(c)).head(g.n) * u.values[static_cast<Eigen::Index>(st.cols[c])];
        worst = std::min(worst, 1.0 - grad.norm());
    }
    return worst;
}

/// psi(x, z) and d psi / dz at one node.
struct PsiSample {
    double value = 0.0;
    double dz = 0.0;
};

/// Right-hand side evaluated per unknown: (unknown index, x, z) -> (psi, psi_z).
using NodalPsi = std::function<PsiSample(std::size_t, const Vec&, double)>;

/// Wraps a pointwise psi(x, z) with derivative into a NodalPsi.
template <class Value, class Dz>
[[nodiscard]] NodalPsi make_psi(Value value, Dz dz) {
    return [value, dz](std::size_t, const Vec& x, double z) { return PsiSample{value(x, z), dz(x, z)}; };
}

[[nodiscard]] inline NodalPsi constant_psi(double c) {
    return [c](std::size_t, const Vec&, double) { return PsiSample{c, 0.0}; };
}

struct DiscreteSystem {
    Vec residual;
    Eigen::SparseMatrix<double> jacobian;
    std::vector<bool> admissible_mask;  ///< true where kappa lies in tilde-Gamma_k
    Vec operator_value;                 ///< G at each node (surrogate where inadmissible)
    double spacelike_margin_min = 0.0;
    double max_tilde_w = 0.0;
    double min_ellipticity = std::numeric_limits<double>::infinity();

    [[nodiscard]] bool all_admissible() const {
        return std::all_of(admissible_mask.begin(), admissible_mask.end(), [](bool b) { return b; });
    }
};

struct AssemblyOptions {
    bool with_jacobian = true;
    bool with_ellipticity = false;
    double penalty = 1e3;  ///< slope of the surrogate outside the cone
    unsigned threads = worker_count();
};

/// Surrogate for kappa outside tilde-Gamma_k: -penalty * t where t is the shift along
/// (1,...,1)/sqrt(n) in kappa-space that brings kappa onto the cone boundary.
struct ConeSurrogate {
    double value = 0.0;
    EigenTuple f_grad;
    double distance = 0.0;
};

[[nodiscard]] inline ConeSurrogate cone_surrogate(const QuotientSpec& spec, const EigenTuple& kappa,
                                                  double penalty) {
    const int n = spec.n;
    const EigenTuple lambda = kappa_to_lambda(kappa);
    // lambda + s 1 lies in Gamma_k for all s above the largest root of sigma_k(lambda + s 1).
    auto inside = [&](double s) { return in_gamma(spec.k, EigenTuple(lambda.array() + s)); };
    double lo = 0.0;
    double hi = std::max(0.0, -lambda.minCoeff()) * (1.0 + 1e-12) + 1e-300;
    while (!inside(hi)) hi = 2.0 * hi + 1e-12;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (inside(mid)) hi = mid;
        else lo = mid;
    }
    const double s_star = hi;
    const EigenTuple lam_star = lambda.array() + s_star;
    const double scale = std::sqrt(static_cast<double>(n)) / (n - 1);

    ConeSurrogate out;
    out.distance = s_star * scale;
    out.value = -penalty * out.distance;
    EigenTuple ds_dlambda(n);
    const EigenTuple grad = sigma_gradient(spec.k, lam_star);
    const double den = grad.sum();
    if (den > 1e-300 && grad.minCoeff() >= 0.0) {
        ds_dlambda = -grad / den;
        out.f_grad = -penalty * scale * detail::chain_to_kappa(ds_dlambda);
    } else {
        out.f_grad = EigenTuple::Constant(n, penalty / std::sqrt(static_cast<double>(n)));
    }
    return out;
}

/// Residual G[u] - psi(x, u) and its Jacobian over the unknowns.
[[nodiscard]] inline DiscreteSystem assemble(const QuotientSpec& spec, const Grid& g, const FieldU& u,
                                             const NodalPsi& psi, const AssemblyOptions& opt = {}) {
    spec.validate();
    if (spec.n != g.n) throw ArgumentError("spec dimension does not match grid");
    const std::size_t m = g.unknowns();
    if (static_cast<std::size_t>(u.values.size()) != m) throw ArgumentError("field size mismatch");

    DiscreteSystem sys;
    sys.residual.resize(static_cast<Eigen::Index>(m));
    sys.operator_value.resize(static_cast<Eigen::Index>(m));
    sys.admissible_mask.assign(m, false);
    std::vector<double> margin(m), tilde_w(m), ellip(m, std::numeric_limits<double>::infinity());
    std::vector<std::vector<double>> row_values(opt.with_jacobian ? m : 0);
    std::vector<char> admissible(m, 0);

    parallel_for(
        m,
        [&](std::size_t k) {
            const GraphJet jet = extract_jet(g, u, k);
            margin[k] = spacelike_margin(jet);
            if (!(margin[k] > 0.0)) {
                const Vec x = jet.x;
                std::string where = "(";
                for (int d = 0; d < g.n; ++d) where += (d ? ", " : "") + std::to_string(x[d]);
                throw SpacelikeError("node " + std::to_string(k) + " at " + where +
                                         ") is not spacelike (|Du| = " +
                                         std::to_string(jet.du.norm()) + ")",
                                     margin[k], k);
            }
            const CurvatureData cd = curvature_data(jet);
            tilde_w[k] = cd.metric.tilde_w;
            const bool ok = first_failing_sigma(spec.k, cd.lambda_eta) == 0;
            admissible[k] = ok ? 1 : 0;
            LinearizationData lin;
            if (ok) {
                if (opt.with_jacobian || opt.with_ellipticity) lin = linearize(spec, jet, cd);
                else lin.value = quotient_value(spec, cd.lambda_eta);
            } else {
                const ConeSurrogate sur = cone_surrogate(spec, cd.kappa, opt.penalty);
                lin = detail::linearize_symmetric(sur.value, sur.f_grad, jet, cd);
            }
            const PsiSample ps = psi(k, jet.x, jet.u);
            sys.operator_value[static_cast<Eigen::Index>(k)] = lin.value;
            sys.residual[static_cast<Eigen::Index>(k)] = lin.value - ps.value;
            if (opt.with_ellipticity && ok) ellip[k] = ellipticity_margin(lin);
            if (opt.with_jacobian) {
                const JetStencil& st = g.stencils[k];
                Vec coeff(g.components());
                coeff.head(g.n) = lin.Gs;
                for (int i = 0; i < g.n; ++i)
                    for (int j = i; j < g.n; ++j)
                        coeff[g.hessian_component(i, j)] = (i == j ? 1.0 : 2.0) * lin.Gij(i, j);
                Vec row = st.weights.transpose() * coeff;
                row[0] -= ps.dz;
                row_values[k].assign(row.data(), row.data() + row.size());
            }
        },
        opt.threads);

    for (std::size_t k = 0; k < m; ++k) sys.admissible_mask[k] = admissible[k] != 0;
    sys.spacelike_margin_min = m ? *std::min_element(margin.begin(), margin.end()) : 1.0;
    sys.max_tilde_w = m ? *std::max_element(tilde_w.begin(), tilde_w.end()) : 1.0;
    if (opt.with_ellipticity && m) sys.min_ellipticity = *std::min_element(ellip.begin(), ellip.end());

    if (opt.with_jacobian) {
        std::vector<Eigen::Triplet<double>> trips;
        for (std::size_t k = 0; k < m; ++k) {
            const JetStencil& st = g.stencils[k];
            for (std::size_t c = 0; c < st.cols.size(); ++c)
                trips.emplace_back(static_cast<int>(k), static_cast<int>(st.cols[c]), row_values[k][c]);
        }
        sys.jacobian.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        sys.jacobian.setFromTriplets(trips.begin(), trips.end());
        sys.jacobian.makeCompressed();
    }
    return sys;
}

} // namespace etaq
