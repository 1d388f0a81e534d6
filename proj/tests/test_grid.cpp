#include "etaq/grid.hpp"
#include "etaq/linear_solve.hpp"
#include "etaq/props.hpp"
#include "etaq/solver.hpp"

#include <gtest/gtest.h>

#include <optional>
#include <random>

using namespace etaq;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// Max jet error over unknowns of the given class.
double jet_error(const Grid& g, const FieldU& f, const std::function<Vec(const Vec&)>& grad,
                 const std::function<Mat(const Vec&)>& hess, std::optional<NodeClass> only = std::nullopt) {
    double worst = 0.0;
    for (std::size_t u = 0; u < g.unknowns(); ++u) {
        if (only && g.node_class[g.node_of_unknown[u]] != *only) continue;
        const GraphJet j = extract_jet(g, f, u);
        const Vec x = g.unknown_position(u);
        worst = std::max(worst, (j.du - grad(x)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (j.d2u - hess(x)).cwiseAbs().maxCoeff());
    }
    return worst;
}

FieldU cap(const Grid& g, double rho, double r) {
    return sample_field(g, [&](const Vec& x) { return hyperboloid_cap(x, rho, r); });
}

} // namespace

TEST(Grid, RejectsBadSpacing) {
    EXPECT_THROW((void)build_grid(DomainSpec::ball(2, 1.0), 0.0), ConfigError);
    EXPECT_THROW((void)build_grid(DomainSpec::ball(2, 1.0), -0.1), ConfigError);
    EXPECT_THROW((void)build_grid(DomainSpec::ball(2, 1.0), 0.75), ConfigError);
    EXPECT_NO_THROW((void)build_grid(DomainSpec::ball(2, 1.0), 0.5));
}

TEST(Grid, ClassificationMatchesBruteForce) {
    const double r = 1.0, h = 0.13;
    const Grid g = build_grid(DomainSpec::ball(2, r), h);
    std::size_t unknowns = 0, near = 0;
    for (std::size_t node = 0; node < g.lattice_size(); ++node) {
        const Vec x = g.position(node);
        const bool inside = x.norm() < r - 1e-6 * h;
        EXPECT_EQ(g.unknown_of_node[node] != Grid::none, inside);
        if (!inside) {
            EXPECT_EQ(g.node_class[node], NodeClass::exterior);
            continue;
        }
        ++unknowns;
        bool cut = false;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                if ((dx || dy) && (x + h * v2(dx, dy)).norm() > r) cut = true;
        near += cut;
        EXPECT_EQ(g.node_class[node], cut ? NodeClass::near_boundary : NodeClass::interior) << x.transpose();
    }
    EXPECT_EQ(g.unknowns(), unknowns);
    EXPECT_EQ(g.count(NodeClass::near_boundary), near);
    // Lexicographic order, last axis fastest.
    for (std::size_t u = 1; u < g.unknowns(); ++u) EXPECT_LT(g.node_of_unknown[u - 1], g.node_of_unknown[u]);
}

TEST(Grid, CutFractionsHitBoundary) {
    const double r = 1.0, h = 0.1;
    const Grid g = build_grid(DomainSpec::ball(3, r), h);
    for (std::size_t u = 0; u < g.unknowns(); ++u) {
        for (std::size_t d = 0; d < g.directions_count(); ++d) {
            const double t = g.theta_at(u, d);
            ASSERT_GT(t, 0.0);
            ASSERT_LE(t, 1.0);
            if (t < 1.0) {
                const Vec p = g.unknown_position(u) + t * h * g.directions[d].cast<double>();
                EXPECT_NEAR(p.norm(), r, 1e-10);
            }
        }
    }
}

TEST(Grid, AlignedBoxHasNoCuts) {
    const Grid g = build_grid(DomainSpec::box(v2(1.0, 0.5)), 0.125);
    for (double t : g.theta) EXPECT_EQ(t, 1.0);
    EXPECT_EQ(g.unknowns(), 15u * 7u);
}

TEST(Grid, QuadraticVanishingOnBoundaryIsExact) {
    // u = |x/a|^2 - 1 is zero on the boundary, so the cut stencils see exact data.
    for (const DomainSpec& d : {DomainSpec::ball(2, 1.0), DomainSpec::ellipsoid(v2(1.0, 0.6)),
                                DomainSpec::ellipsoid((Vec(3) << 1.0, 0.7, 0.8).finished())}) {
        const Vec a2 = d.semi_axes.array().square();
        const Grid g = build_grid(d, 0.09);
        const FieldU f = sample_field(g, [&](const Vec& x) { return (x.array().square() / a2.array()).sum() - 1.0; });
        const double err = jet_error(
            g, f, [&](const Vec& x) { return Vec(2.0 * x.array() / a2.array()); },
            [&](const Vec&) { return Mat(Vec(2.0 / a2.array()).asDiagonal()); });
        EXPECT_LT(err, 1e-8);
    }
}

TEST(Grid, MixedTermAtInteriorNodes) {
    const Grid g = build_grid(DomainSpec::box(v2(1.0, 0.5)), 0.125);
    const FieldU f = sample_field(g, [](const Vec& x) { return x[0] * x[1]; });
    // x*y does not vanish on the boundary, so only stencils made of unknowns are exact.
    std::size_t checked = 0;
    for (std::size_t u = 0; u < g.unknowns(); ++u) {
        const Eigen::VectorXi idx = g.lattice_index(g.node_of_unknown[u]);
        bool all_unknown = true;
        for (const Eigen::VectorXi& d : g.directions) all_unknown &= g.unknown_of_node[g.node_at(idx + d)] != Grid::none;
        if (!all_unknown) continue;
        ++checked;
        const GraphJet j = extract_jet(g, f, u);
        EXPECT_NEAR(j.d2u(0, 1), 1.0, 1e-12);
        EXPECT_NEAR(j.d2u(0, 0), 0.0, 1e-12);
        EXPECT_NEAR(j.du[0], j.x[1], 1e-12);
    }
    EXPECT_EQ(checked, 13u * 5u);
}

TEST(Grid, HyperboloidJetOrders) {
    // Full stencils are second order; cut stencils carry an O(h) second-difference error.
    std::vector<double> inner, cut;
    for (double h : {0.1, 0.05, 0.025}) {
        const Grid g = build_grid(DomainSpec::ball(2, 1.0), h);
        const FieldU f = cap(g, 1.0, 1.0);
        auto grad = [](const Vec& x) { return hyperboloid_jet(x, 1.0).du; };
        auto hess = [](const Vec& x) { return hyperboloid_jet(x, 1.0).d2u; };
        inner.push_back(jet_error(g, f, grad, hess, NodeClass::interior));
        cut.push_back(jet_error(g, f, grad, hess, NodeClass::near_boundary));
    }
    for (int i = 0; i < 2; ++i) {
        EXPECT_GE(inner[i] / inner[i + 1], 3.2);
        EXPECT_LE(inner[i] / inner[i + 1], 4.8);
        EXPECT_GE(cut[i] / cut[i + 1], 1.6);
    }
}

TEST(Assemble, HyperboloidResidualRefines) {
    std::vector<double> inner, all;
    for (double h : {0.125, 0.0625}) {
        const Grid g = build_grid(DomainSpec::ball(3, 1.0), h);
        const DiscreteSystem sys = assemble({3, 2, 0}, g, cap(g, 1.0, 1.0), constant_psi(12.0));
        EXPECT_TRUE(sys.all_admissible());
        double worst = 0.0;
        for (std::size_t u = 0; u < g.unknowns(); ++u)
            if (g.node_class[g.node_of_unknown[u]] == NodeClass::interior)
                worst = std::max(worst, std::abs(sys.residual[static_cast<Eigen::Index>(u)]));
        inner.push_back(worst);
        all.push_back(sys.residual.cwiseAbs().maxCoeff());
    }
    EXPECT_GT(inner[0] / inner[1], 3.0);
    EXPECT_GT(all[0] / all[1], 1.5);
}

TEST(Assemble, JacobianMatchesFiniteDifferences) {
    const QuotientSpec spec{2, 1, 0};
    const Grid g = build_grid(DomainSpec::ball(2, 1.0), 0.125);
    const NodalPsi psi = make_psi([](const Vec& x, double z) { return 2.0 + x[0] * 0.1 + 0.5 * z * z; },
                                  [](const Vec&, double z) { return z; });
    const FieldU u = cap(g, 1.0, 1.0);
    const DiscreteSystem sys = assemble(spec, g, u, psi);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int probe = 0; probe < 5; ++probe) {
        Vec v(static_cast<Eigen::Index>(g.unknowns()));
        for (auto& c : v) c = nd(rng);
        const double eps = 1e-6;
        FieldU p = u, m = u;
        p.values += eps * v;
        m.values -= eps * v;
        AssemblyOptions o;
        o.with_jacobian = false;
        const Vec fd = (assemble(spec, g, p, psi, o).residual - assemble(spec, g, m, psi, o).residual) / (2 * eps);
        const Vec jv = sys.jacobian * v;
        EXPECT_LT((fd - jv).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, jv.cwiseAbs().maxCoeff()));
    }
}

TEST(Assemble, JacobianMatchesFiniteDifferencesThreeD) {
    for (const QuotientSpec spec : {QuotientSpec{3, 2, 0}, QuotientSpec{3, 2, 1}}) {
        const Grid g = build_grid(DomainSpec::ellipsoid((Vec(3) << 1.0, 0.8, 0.6).finished()), 0.15);
        const FieldU u = sample_field(g, [](const Vec& x) {
            return 0.2 * (x[0] * x[0] + x[1] * x[1] / 0.64 + x[2] * x[2] / 0.36 - 1.0);
        });
        const DiscreteSystem sys = assemble(spec, g, u, constant_psi(1.0));
        ASSERT_TRUE(sys.all_admissible());
        Vec v = Vec::LinSpaced(static_cast<Eigen::Index>(g.unknowns()), -1.0, 1.0).array().sin();
        const double eps = 1e-6;
        FieldU p = u, m = u;
        p.values += eps * v;
        m.values -= eps * v;
        AssemblyOptions o;
        o.with_jacobian = false;
        const Vec fd = (assemble(spec, g, p, constant_psi(1.0), o).residual -
                        assemble(spec, g, m, constant_psi(1.0), o).residual) / (2 * eps);
        const Vec jv = sys.jacobian * v;
        EXPECT_LT((fd - jv).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, jv.cwiseAbs().maxCoeff()));
    }
}

TEST(Assemble, PsiDerivativeEntersDiagonal) {
    const QuotientSpec spec{2, 1, 0};
    const Grid g = build_grid(DomainSpec::ball(2, 1.0), 0.125);
    const FieldU u = cap(g, 1.0, 1.0);
    const DiscreteSystem a = assemble(spec, g, u, constant_psi(2.0));
    const DiscreteSystem b = assemble(spec, g, u, make_psi([](const Vec&, double z) { return 2.0 + 3.0 * z; },
                                                          [](const Vec&, double) { return 3.0; }));
    const Eigen::SparseMatrix<double> diff = a.jacobian - b.jacobian;
    for (std::size_t k = 0; k < g.unknowns(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        EXPECT_NEAR(diff.coeff(i, i), 3.0, 1e-12);
        EXPECT_NEAR(a.residual[i] - b.residual[i], 3.0 * u.values[i], 1e-12);
    }
}

TEST(Assemble, InadmissibleNodesUseSurrogate) {
    const QuotientSpec spec{2, 1, 0};
    const Grid g = build_grid(DomainSpec::ball(2, 1.0), 0.125);
    const FieldU zero{Vec::Zero(static_cast<Eigen::Index>(g.unknowns()))};
    const DiscreteSystem sys = assemble(spec, g, zero, constant_psi(1.0));
    EXPECT_FALSE(sys.all_admissible());
    for (std::size_t k = 0; k < g.unknowns(); ++k) EXPECT_LE(sys.operator_value[static_cast<Eigen::Index>(k)], 0.0);
    EXPECT_THROW((void)operator_field(spec, g, zero), ConeError);
}

TEST(Assemble, ConeSurrogateContinuousAtBoundary) {
    const QuotientSpec spec{3, 2, 0};
    const ConeSurrogate s = cone_surrogate(spec, (Vec(3) << -0.2, 0.1, 0.1).finished(), 1e3);
    EXPECT_LT(s.value, 0.0);
    EXPECT_GT(s.distance, 0.0);
    const Vec shifted = (Vec(3) << -0.2, 0.1, 0.1).finished().array() + s.distance / std::sqrt(3.0);
    EXPECT_NEAR(elementary_sigma(2, kappa_to_lambda(shifted)), 0.0, 1e-10);
}

TEST(Assemble, DeterministicAcrossThreadCounts) {
    const Grid g = build_grid(DomainSpec::ball(3, 1.0), 0.125);
    const FieldU u = cap(g, 0.5, 1.0);
    AssemblyOptions one, two;
    one.threads = 1;
    two.threads = 3;
    const DiscreteSystem a = assemble({3, 2, 1}, g, u, constant_psi(2.0), one);
    const DiscreteSystem b = assemble({3, 2, 1}, g, u, constant_psi(2.0), two);
    EXPECT_EQ(a.residual, b.residual);
    EXPECT_EQ((a.jacobian - b.jacobian).norm(), 0.0);
}

TEST(Assemble, SpacelikeViolationReported) {
    const Grid g = build_grid(DomainSpec::ball(2, 1.0), 0.125);
    const FieldU steep = sample_field(g, [](const Vec& x) { return 2.0 * (x.squaredNorm() - 1.0); });
    EXPECT_LT(min_spacelike_margin(g, steep), 0.0);
    EXPECT_THROW((void)assemble({2, 1, 0}, g, steep, constant_psi(1.0)), SpacelikeError);
}

TEST(LinearSolve, Identity) {
    Eigen::SparseMatrix<double> a(5, 5);
    a.setIdentity();
    const Vec b = Vec::LinSpaced(5, 1, 5);
    EXPECT_LT((linear_solve(a, b) - b).norm(), 1e-12);
    EXPECT_EQ(linear_solve(a, Vec::Zero(5)), Vec::Zero(5));
}

TEST(LinearSolve, DenseNonsymmetric) {
    Mat d(4, 4);
    d << 4, 1, 0, 2, -1, 5, 1, 0, 0, 2, 6, -1, 1, 0, 3, 7;
    const Eigen::SparseMatrix<double> a = d.sparseView();
    const Vec b = (Vec(4) << 1, -2, 3, 0.5).finished();
    EXPECT_LT((linear_solve(a, b) - d.lu().solve(b)).norm(), 1e-9);
}

TEST(LinearSolve, DiagonallyDominantLarge) {
    const int n = 400;
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 4.0);
        if (i) t.emplace_back(i, i - 1, -1.3);
        if (i + 1 < n) t.emplace_back(i, i + 1, -0.7);
        if (i + 20 < n) t.emplace_back(i, i + 20, 0.5);
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(t.begin(), t.end());
    const Vec b = Vec::LinSpaced(n, -1, 1);
    LinearSolveInfo info;
    const Vec x = linear_solve(a, b, 1e-10, &info);
    EXPECT_LT((a * x - b).norm() / b.norm(), 1e-10);
    EXPECT_LE(info.relative_residual, 1e-10);
}

TEST(LinearSolve, DimensionMismatch) {
    Eigen::SparseMatrix<double> a(3, 3);
    EXPECT_THROW((void)linear_solve(a, Vec::Ones(4)), ArgumentError);
}
